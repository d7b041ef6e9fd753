//! Seeded synthetic conversation corpora with known label dynamics.
//!
//! Trees grow one reply at a time. The parent of each new tweet is drawn
//! with weight `(1 + replies so far)^attachment`, its label from the reply
//! kernel column of the parent's label, and its author is either the
//! parent's author (a self-reply) or another member of the conversation.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Geometric};
use serde::{Deserialize, Serialize};

use crate::error::ConfigError;
use crate::ingest::{Corpus, TweetRecord};
use crate::label::ViewpointLabel;

const SUM_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SizeDistribution {
    /// `2 + G` where `G` counts failures before the first success.
    Geometric { p: f64 },
    Fixed { n: usize },
    /// Inclusive on both ends.
    Uniform { lo: usize, hi: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "AuthorsRepr", into = "AuthorsRepr")]
pub enum AuthorsPerConversation {
    Count(usize),
    /// Every tweet that is not a self-reply gets a fresh author.
    OnePerTweet,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum AuthorsRepr {
    Count(usize),
    Name(String),
}

impl TryFrom<AuthorsRepr> for AuthorsPerConversation {
    type Error = String;

    fn try_from(r: AuthorsRepr) -> Result<Self, Self::Error> {
        match r {
            AuthorsRepr::Count(n) => Ok(Self::Count(n)),
            AuthorsRepr::Name(s) if s == "one-per-tweet" => Ok(Self::OnePerTweet),
            AuthorsRepr::Name(s) => Err(format!(
                "expected an author count or \"one-per-tweet\", got {s:?}"
            )),
        }
    }
}

impl From<AuthorsPerConversation> for AuthorsRepr {
    fn from(a: AuthorsPerConversation) -> Self {
        match a {
            AuthorsPerConversation::Count(n) => AuthorsRepr::Count(n),
            AuthorsPerConversation::OnePerTweet => AuthorsRepr::Name("one-per-tweet".into()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorConfig {
    pub n_conversations: usize,
    pub size_distribution: SizeDistribution,
    /// Preferential-attachment exponent; 0 picks parents uniformly.
    #[serde(default)]
    pub attachment: f64,
    pub n_authors_per_conversation: AuthorsPerConversation,
    /// Root label probabilities, L1..L4.
    pub root_label_distribution: [f64; 4],
    /// `reply_kernel[child][parent]` = Q(child label | parent label); each
    /// column sums to one.
    pub reply_kernel: [[f64; 4]; 4],
    #[serde(default)]
    pub self_reply_prob: f64,
    pub seed: u64,
    /// Draw each conversation's authors from a shared pool of this many
    /// users instead of minting conversation-local ids.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub user_pool_size: Option<usize>,
    #[serde(default = "default_topic")]
    pub topic: String,
}

fn default_topic() -> String {
    "synthetic".to_string()
}

fn check_probs(name: &str, probs: &[f64]) -> Result<(), ConfigError> {
    if let Some(p) = probs.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(ConfigError::new(format!("{name} has probability {p} outside [0, 1]")));
    }
    let sum: f64 = probs.iter().sum();
    if (sum - 1.0).abs() > SUM_TOLERANCE {
        return Err(ConfigError::new(format!("{name} sums to {sum}, not 1")));
    }
    Ok(())
}

impl GeneratorConfig {
    /// Kernel column for a parent label.
    pub fn kernel_column(&self, parent: ViewpointLabel) -> [f64; 4] {
        let j = parent.index();
        [
            self.reply_kernel[0][j],
            self.reply_kernel[1][j],
            self.reply_kernel[2][j],
            self.reply_kernel[3][j],
        ]
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        match self.size_distribution {
            SizeDistribution::Geometric { p } if !(p > 0.0 && p <= 1.0) => {
                return Err(ConfigError::new(format!("geometric p must be in (0, 1], got {p}")))
            }
            SizeDistribution::Fixed { n } if n < 2 => {
                return Err(ConfigError::new(format!("fixed size must be at least 2, got {n}")))
            }
            SizeDistribution::Uniform { lo, hi } if lo < 2 || lo > hi => {
                return Err(ConfigError::new(format!(
                    "uniform size range needs 2 <= lo <= hi, got [{lo}, {hi}]"
                )))
            }
            _ => {}
        }
        if !(self.attachment.is_finite() && self.attachment >= 0.0) {
            return Err(ConfigError::new(format!(
                "attachment exponent must be finite and >= 0, got {}",
                self.attachment
            )));
        }
        if let AuthorsPerConversation::Count(k) = self.n_authors_per_conversation {
            if k < 2 {
                return Err(ConfigError::new(format!(
                    "need at least 2 authors per conversation, got {k}"
                )));
            }
            if let Some(pool) = self.user_pool_size {
                if pool < k {
                    return Err(ConfigError::new(format!(
                        "user pool of {pool} is smaller than {k} authors per conversation"
                    )));
                }
            }
        }
        if !(0.0..1.0).contains(&self.self_reply_prob) {
            return Err(ConfigError::new(format!(
                "self_reply_prob must be in [0, 1), got {}",
                self.self_reply_prob
            )));
        }
        check_probs("root_label_distribution", &self.root_label_distribution)?;
        for parent in ViewpointLabel::ALL {
            check_probs(
                &format!("reply_kernel column {parent}"),
                &self.kernel_column(parent),
            )?;
        }
        Ok(())
    }
}

fn categorical<R: Rng>(rng: &mut R, probs: &[f64]) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    // Rounding left `u` above the cumulative sum: take the last positive entry.
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(0)
}

fn draw_size<R: Rng>(rng: &mut R, dist: SizeDistribution) -> usize {
    match dist {
        SizeDistribution::Fixed { n } => n,
        SizeDistribution::Uniform { lo, hi } => rng.random_range(lo..=hi),
        SizeDistribution::Geometric { p } => {
            let g = Geometric::new(p).expect("validated p").sample(rng);
            2 + usize::try_from(g).unwrap_or(usize::MAX - 2)
        }
    }
}

struct ConversationBuilder<'a> {
    config: &'a GeneratorConfig,
    index: usize,
    authors: Vec<String>,
    tweets: Vec<TweetRecord>,
    weights: Vec<f64>,
    in_degree: Vec<u64>,
    total_weight: f64,
}

impl<'a> ConversationBuilder<'a> {
    fn tweet_id(&self, i: usize) -> String {
        format!("{:08}-{:06}", self.index, i)
    }

    fn fresh_author(&self, i: usize) -> String {
        format!("c{:08}-u{:06}", self.index, i)
    }

    fn pick_parent<R: Rng>(&self, rng: &mut R) -> usize {
        let target = rng.random::<f64>() * self.total_weight;
        let mut acc = 0.0;
        for (i, &w) in self.weights.iter().enumerate() {
            acc += w;
            if target < acc {
                return i;
            }
        }
        self.weights.len() - 1
    }

    fn pick_author<R: Rng>(&self, rng: &mut R, parent_author: &str, allow_self: bool) -> String {
        let i = self.tweets.len();
        if allow_self && rng.random::<f64>() < self.config.self_reply_prob {
            return parent_author.to_string();
        }
        match self.config.n_authors_per_conversation {
            AuthorsPerConversation::OnePerTweet => self.fresh_author(i),
            AuthorsPerConversation::Count(_) => {
                let others: Vec<&String> =
                    self.authors.iter().filter(|a| *a != parent_author).collect();
                others[rng.random_range(0..others.len())].clone()
            }
        }
    }

    fn grow<R: Rng>(mut self, rng: &mut R, size: usize) -> Vec<TweetRecord> {
        let root_author = match self.config.n_authors_per_conversation {
            AuthorsPerConversation::OnePerTweet => self.fresh_author(0),
            AuthorsPerConversation::Count(_) => {
                self.authors[rng.random_range(0..self.authors.len())].clone()
            }
        };
        let root_label = ViewpointLabel::ALL[categorical(rng, &self.config.root_label_distribution)];
        let root_id = self.tweet_id(0);
        self.push(TweetRecord::new(root_id.clone(), root_author, root_id, None, root_label));

        for i in 1..size {
            let parent = self.pick_parent(rng);
            let (parent_id, parent_author, parent_label) = {
                let p = &self.tweets[parent];
                (p.tweet_id.clone(), p.author_id.clone(), p.label)
            };
            let label =
                ViewpointLabel::ALL[categorical(rng, &self.config.kernel_column(parent_label))];
            // The first reply always comes from someone else, so every tree has two authors.
            let author = self.pick_author(rng, &parent_author, i > 1);
            let id = self.tweet_id(i);
            let conversation_id = self.tweets[0].conversation_id.clone();
            self.push(TweetRecord::new(id, author, conversation_id, Some(&parent_id), label));

            let old = self.weights[parent];
            self.in_degree[parent] += 1;
            let new = (1.0 + self.in_degree[parent] as f64).powf(self.config.attachment);
            self.weights[parent] = new;
            self.total_weight += new - old;
        }
        self.tweets
    }

    fn push(&mut self, t: TweetRecord) {
        self.tweets.push(t);
        self.weights.push(1.0);
        self.in_degree.push(0);
        self.total_weight += 1.0;
    }
}

/// Generate the tweets of a synthetic corpus, in conversation then tweet order.
pub fn generate_tweets(config: &GeneratorConfig) -> Result<Vec<TweetRecord>, ConfigError> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut tweets = Vec::new();
    for index in 0..config.n_conversations {
        let size = draw_size(&mut rng, config.size_distribution);
        let authors = match (config.n_authors_per_conversation, config.user_pool_size) {
            (AuthorsPerConversation::OnePerTweet, _) => Vec::new(),
            (AuthorsPerConversation::Count(k), None) => {
                (0..k).map(|j| format!("c{index:08}-u{j:06}")).collect()
            }
            (AuthorsPerConversation::Count(k), Some(pool)) => {
                let mut picked = sample(&mut rng, pool, k).into_vec();
                picked.sort_unstable();
                picked.into_iter().map(|u| format!("u{u:08}")).collect()
            }
        };
        let builder = ConversationBuilder {
            config,
            index,
            authors,
            tweets: Vec::with_capacity(size),
            weights: Vec::with_capacity(size),
            in_degree: Vec::with_capacity(size),
            total_weight: 0.0,
        };
        tweets.extend(builder.grow(&mut rng, size));
    }
    Ok(tweets)
}

pub fn generate_corpus(config: &GeneratorConfig) -> Result<Corpus, ConfigError> {
    let tweets = generate_tweets(config)?;
    Ok(Corpus::from_records(config.topic.clone(), tweets).expect("generated ids are unique"))
}

/// Printed by `vdk synth`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SynthSummary {
    pub n_tweets: usize,
    pub n_conversations: usize,
    pub label_shares: [f64; 4],
}

pub fn summarize(tweets: &[TweetRecord]) -> SynthSummary {
    let mut counts = [0usize; 4];
    let mut conversations = std::collections::BTreeSet::new();
    for t in tweets {
        counts[t.label.index()] += 1;
        conversations.insert(t.conversation_id.as_str());
    }
    let n = tweets.len();
    SynthSummary {
        n_tweets: n,
        n_conversations: conversations.len(),
        label_shares: counts.map(|c| if n == 0 { 0.0 } else { c as f64 / n as f64 }),
    }
}
