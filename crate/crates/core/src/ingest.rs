//! Reading tweet and label files into a [`Corpus`].
//!
//! Tweets are line-delimited JSON. Each object carries `id`, `author_id` and
//! `conversation_id`; the parent reference is either a flat `replied_to`
//! field or the first `{"type": "replied_to", "id": ..}` entry of a
//! `referenced_tweets` array. An optional inline `label` (`"L1"`..`"L4"`)
//! is honoured, which is how synthetic corpora carry their ground truth.
//!
//! Labels files are CSV with a `tweet_id,relevance,claim` header, or JSONL
//! with the same keys. Entries there take precedence over inline labels.

use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::{Map, Value};

use crate::error::{IngestError, RecordError};
use crate::label::{merge_labels, RawAnnotation, ViewpointLabel};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TweetRecord {
    pub tweet_id: String,
    pub author_id: String,
    pub conversation_id: String,
    /// The tweet this one replies to; `None` for a root candidate.
    pub parent_id: Option<String>,
    pub text: Option<String>,
    pub label: ViewpointLabel,
}

impl TweetRecord {
    pub fn new(
        tweet_id: impl Into<String>,
        author_id: impl Into<String>,
        conversation_id: impl Into<String>,
        parent_id: Option<&str>,
        label: ViewpointLabel,
    ) -> Self {
        Self {
            tweet_id: tweet_id.into(),
            author_id: author_id.into(),
            conversation_id: conversation_id.into(),
            parent_id: parent_id.map(str::to_string),
            text: None,
            label,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Provenance {
    pub sources: Vec<PathBuf>,
    pub ingested_at_unix: u64,
}

/// All tweets of one topic. Immutable once built.
#[derive(Debug, Clone)]
pub struct Corpus {
    pub topic: String,
    tweets: Vec<TweetRecord>,
    pub provenance: Provenance,
}

impl Corpus {
    /// Validate id uniqueness and conversation consistency of `tweets`.
    pub fn from_records(
        topic: impl Into<String>,
        tweets: Vec<TweetRecord>,
    ) -> Result<Self, IngestError> {
        let mut by_id: HashMap<&str, &TweetRecord> = HashMap::with_capacity(tweets.len());
        for t in &tweets {
            if by_id.insert(t.tweet_id.as_str(), t).is_some() {
                return Err(IngestError::DuplicateId(t.tweet_id.clone()));
            }
        }
        for t in &tweets {
            let Some(parent_id) = t.parent_id.as_deref() else {
                continue;
            };
            if let Some(parent) = by_id.get(parent_id) {
                if parent.conversation_id != t.conversation_id {
                    return Err(IngestError::CrossConversationParent {
                        tweet_id: t.tweet_id.clone(),
                        conversation_id: t.conversation_id.clone(),
                        parent_id: parent_id.to_string(),
                        parent_conversation_id: parent.conversation_id.clone(),
                    });
                }
            }
        }
        Ok(Self {
            topic: topic.into(),
            tweets,
            provenance: Provenance {
                sources: Vec::new(),
                ingested_at_unix: now_unix(),
            },
        })
    }

    pub fn tweets(&self) -> &[TweetRecord] {
        &self.tweets
    }

    pub fn len(&self) -> usize {
        self.tweets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tweets.is_empty()
    }

    pub fn distinct_authors(&self) -> usize {
        self.tweets
            .iter()
            .map(|t| t.author_id.as_str())
            .collect::<HashSet<_>>()
            .len()
    }
}

fn now_unix() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

/// Tally emitted to stderr after ingestion.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct IngestDiagnostics {
    pub n_tweets: usize,
    pub n_labeled_from_file: usize,
    pub n_labeled_inline: usize,
    /// Tweets with no label anywhere; these were assigned L1.
    pub n_unlabeled: usize,
    pub n_label_entries: usize,
    /// Labels-file entries whose tweet id does not occur in the tweets file.
    pub n_label_entries_unmatched: usize,
}

/// Parse one JSONL tweet object.
///
/// A missing inline label defaults to L1.
pub fn parse_tweet_line(line: &str) -> Result<TweetRecord, RecordError> {
    parse_line(line).map(|(record, _)| record)
}

/// Returns the record plus whether it carried an inline label.
fn parse_line(line: &str) -> Result<(TweetRecord, bool), RecordError> {
    let value: Value = serde_json::from_str(line)?;
    let Value::Object(obj) = value else {
        return Err(RecordError::InvalidField {
            field: "<line>",
            reason: "is not a JSON object".into(),
        });
    };

    let tweet_id = required_id(&obj, "id")?;
    let author_id = required_id(&obj, "author_id")?;
    let conversation_id = required_id(&obj, "conversation_id")?;
    let parent_id = match optional_id(&obj, "replied_to")? {
        Some(p) => Some(p),
        None => referenced_parent(&obj)?,
    };
    if parent_id.as_deref() == Some(tweet_id.as_str()) {
        return Err(RecordError::SelfReply(tweet_id));
    }
    let text = match obj.get("text") {
        None | Some(Value::Null) => None,
        Some(Value::String(s)) => Some(s.clone()),
        Some(_) => {
            return Err(RecordError::InvalidField {
                field: "text",
                reason: "must be a string".into(),
            })
        }
    };
    let label = match obj.get("label") {
        None | Some(Value::Null) => None,
        Some(Value::String(s)) => Some(s.parse::<ViewpointLabel>().map_err(|e| {
            RecordError::InvalidField {
                field: "label",
                reason: e.to_string(),
            }
        })?),
        Some(_) => {
            return Err(RecordError::InvalidField {
                field: "label",
                reason: "must be one of \"L1\"..\"L4\"".into(),
            })
        }
    };

    let record = TweetRecord {
        tweet_id,
        author_id,
        conversation_id,
        parent_id,
        text,
        label: label.unwrap_or(ViewpointLabel::L1),
    };
    Ok((record, label.is_some()))
}

fn id_value(field: &'static str, v: &Value) -> Result<Option<String>, RecordError> {
    match v {
        Value::Null => Ok(None),
        Value::String(s) if s.is_empty() => Err(RecordError::InvalidField {
            field,
            reason: "is empty".into(),
        }),
        Value::String(s) => Ok(Some(s.clone())),
        Value::Number(n) if n.is_u64() => Ok(Some(n.to_string())),
        _ => Err(RecordError::InvalidField {
            field,
            reason: "must be a string or unsigned integer id".into(),
        }),
    }
}

fn required_id(obj: &Map<String, Value>, field: &'static str) -> Result<String, RecordError> {
    match obj.get(field) {
        None => Err(RecordError::MissingField(field)),
        Some(v) => id_value(field, v)?.ok_or(RecordError::MissingField(field)),
    }
}

fn optional_id(obj: &Map<String, Value>, field: &'static str) -> Result<Option<String>, RecordError> {
    obj.get(field).map_or(Ok(None), |v| id_value(field, v))
}

fn referenced_parent(obj: &Map<String, Value>) -> Result<Option<String>, RecordError> {
    let refs = match obj.get("referenced_tweets") {
        None | Some(Value::Null) => return Ok(None),
        Some(Value::Array(refs)) => refs,
        Some(_) => {
            return Err(RecordError::InvalidField {
                field: "referenced_tweets",
                reason: "must be an array".into(),
            })
        }
    };
    for r in refs {
        if r.get("type").and_then(Value::as_str) == Some("replied_to") {
            return match r.get("id") {
                Some(v) => id_value("referenced_tweets.id", v),
                None => Err(RecordError::MissingField("referenced_tweets.id")),
            };
        }
    }
    Ok(None)
}

/// Annotations keyed by tweet id.
pub type LabelMap = HashMap<String, RawAnnotation>;

/// Read a labels file. JSONL is detected by a leading `{`; anything else is CSV.
pub fn load_labels(path: &Path) -> Result<LabelMap, IngestError> {
    let mut content = String::new();
    File::open(path)
        .and_then(|mut f| f.read_to_string(&mut content))
        .map_err(|source| IngestError::Io {
            path: path.to_path_buf(),
            source,
        })?;
    parse_labels(&content).map_err(|message| IngestError::Labels {
        path: path.to_path_buf(),
        message,
    })
}

/// Parse labels from in-memory text (CSV or JSONL).
pub fn parse_labels(content: &str) -> Result<LabelMap, String> {
    if content.trim_start().starts_with('{') {
        parse_labels_jsonl(content)
    } else {
        parse_labels_csv(content)
    }
}

fn annotation(relevance: &str, claim: &str) -> Result<RawAnnotation, String> {
    Ok(RawAnnotation {
        relevance: relevance.parse().map_err(|e| format!("{e}"))?,
        claim: claim.parse().map_err(|e| format!("{e}"))?,
    })
}

fn insert_label(
    map: &mut LabelMap,
    line: usize,
    tweet_id: String,
    ann: RawAnnotation,
) -> Result<(), String> {
    if tweet_id.is_empty() {
        return Err(format!("line {line}: empty tweet_id"));
    }
    if map.contains_key(&tweet_id) {
        return Err(format!("line {line}: duplicate tweet_id {tweet_id}"));
    }
    map.insert(tweet_id, ann);
    Ok(())
}

fn parse_labels_csv(content: &str) -> Result<LabelMap, String> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(content.as_bytes());
    let headers = reader.headers().map_err(|e| e.to_string())?.clone();
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| format!("missing `{name}` column in header"))
    };
    let (id_col, rel_col, claim_col) = (column("tweet_id")?, column("relevance")?, column("claim")?);

    let mut map = LabelMap::new();
    for (i, row) in reader.records().enumerate() {
        let line = i + 2;
        let row = row.map_err(|e| format!("line {line}: {e}"))?;
        let field = |col: usize, name: &str| {
            row.get(col)
                .filter(|s| !s.is_empty())
                .ok_or_else(|| format!("line {line}: missing {name}"))
        };
        let ann = annotation(field(rel_col, "relevance")?, field(claim_col, "claim")?)
            .map_err(|e| format!("line {line}: {e}"))?;
        insert_label(&mut map, line, field(id_col, "tweet_id")?.to_string(), ann)?;
    }
    Ok(map)
}

fn parse_labels_jsonl(content: &str) -> Result<LabelMap, String> {
    let mut map = LabelMap::new();
    for (i, raw) in content.lines().enumerate() {
        let line = i + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let v: Value = serde_json::from_str(raw).map_err(|e| format!("line {line}: {e}"))?;
        let text = |key: &str| -> Result<String, String> {
            match v.get(key) {
                Some(Value::String(s)) => Ok(s.clone()),
                Some(Value::Number(n)) if key == "tweet_id" => Ok(n.to_string()),
                _ => Err(format!("line {line}: missing {key}")),
            }
        };
        let ann = annotation(&text("relevance")?, &text("claim")?)
            .map_err(|e| format!("line {line}: {e}"))?;
        insert_label(&mut map, line, text("tweet_id")?, ann)?;
    }
    Ok(map)
}

/// Read tweets from `reader`, merging labels.
pub fn read_corpus<R: BufRead>(
    reader: R,
    source: &Path,
    labels: Option<&LabelMap>,
    topic: &str,
) -> Result<(Corpus, IngestDiagnostics), IngestError> {
    let mut diag = IngestDiagnostics {
        n_label_entries: labels.map_or(0, HashMap::len),
        ..Default::default()
    };
    let mut tweets = Vec::new();
    let mut matched = 0usize;
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|source_err| IngestError::Io {
            path: source.to_path_buf(),
            source: source_err,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let (mut record, inline) = parse_line(&line).map_err(|e| IngestError::Record {
            path: source.to_path_buf(),
            line: i + 1,
            source: e,
        })?;
        match labels.and_then(|m| m.get(&record.tweet_id)) {
            Some(ann) => {
                record.label = merge_labels(*ann);
                diag.n_labeled_from_file += 1;
                matched += 1;
            }
            None if inline => diag.n_labeled_inline += 1,
            None => diag.n_unlabeled += 1,
        }
        tweets.push(record);
    }
    diag.n_tweets = tweets.len();
    // Duplicate tweet ids are rejected below, so `matched` counts distinct entries.
    let corpus = Corpus::from_records(topic, tweets)?;
    diag.n_label_entries_unmatched = diag.n_label_entries - matched;
    Ok((corpus, diag))
}

pub fn load_corpus(
    tweets_path: &Path,
    labels_path: Option<&Path>,
    topic: &str,
) -> Result<(Corpus, IngestDiagnostics), IngestError> {
    let labels = labels_path.map(load_labels).transpose()?;
    let file = File::open(tweets_path).map_err(|source| IngestError::Io {
        path: tweets_path.to_path_buf(),
        source,
    })?;
    let (mut corpus, diag) = read_corpus(BufReader::new(file), tweets_path, labels.as_ref(), topic)?;
    corpus.provenance.sources = std::iter::once(tweets_path.to_path_buf())
        .chain(labels_path.map(Path::to_path_buf))
        .collect();
    Ok((corpus, diag))
}

#[derive(Serialize)]
struct TweetLineOut<'a> {
    id: &'a str,
    author_id: &'a str,
    conversation_id: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    replied_to: Option<&'a str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    text: Option<&'a str>,
    label: ViewpointLabel,
}

/// Serialize tweets in the ingest schema, one object per line, with inline labels.
pub fn write_tweets_jsonl<W: Write>(tweets: &[TweetRecord], mut out: W) -> std::io::Result<()> {
    for t in tweets {
        let line = TweetLineOut {
            id: &t.tweet_id,
            author_id: &t.author_id,
            conversation_id: &t.conversation_id,
            replied_to: t.parent_id.as_deref(),
            text: t.text.as_deref(),
            label: t.label,
        };
        serde_json::to_writer(&mut out, &line)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}
