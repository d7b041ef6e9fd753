//! End-to-end analysis runs and their on-disk reports.
//!
//! Every report is rendered in memory first and then written through
//! temp-file + rename, so a failed run leaves no partial output.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::dyadic::{dyadic_conditionals, DyadicMatrix, STANCE_LABELS};
use crate::error::{Error, Result};
use crate::exposure::viewpoint_matrix;
use crate::graph::{
    build_conversations, cap_size, check_eligible, corpus_stats, tree_audit_line, ConversationTree,
    CorpusStats, Ineligible, ReconstructionDiagnostics, DEFAULT_MAX_NODES,
};
use crate::ingest::{load_corpus, Corpus, IngestDiagnostics, Provenance};
use crate::metrics::{
    fragmentation_scores, histogram, pool_distribution, representation_scores, FragmentationScore,
    Histogram, LabelDistribution, RepresentationScore, Undefined, Variant, DEFAULT_BIN_WIDTH,
};

pub const STATS_FILE: &str = "stats.csv";
pub const FRAGMENTATION_FILE: &str = "fragmentation.csv";
pub const FRAGMENTATION_HIST_FILE: &str = "fragmentation_hist.csv";
pub const REPRESENTATION_FILE: &str = "representation.csv";
pub const REPRESENTATION_HIST_FILE: &str = "representation_hist.csv";
pub const DYADIC_FILE: &str = "dyadic.json";
pub const DIAGNOSTICS_FILE: &str = "diagnostics.json";
pub const TREES_FILE: &str = "trees.jsonl";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum VariantSelection {
    #[default]
    Both,
    WithL1,
    WithoutL1,
}

impl VariantSelection {
    pub fn variants(self) -> &'static [Variant] {
        match self {
            VariantSelection::Both => &Variant::BOTH,
            VariantSelection::WithL1 => &Variant::BOTH[..1],
            VariantSelection::WithoutL1 => &Variant::BOTH[1..],
        }
    }
}

/// Knobs of the analysis itself, independent of where data comes from.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisOptions {
    pub max_tweets_per_conversation: usize,
    pub min_authors: usize,
    pub bin_width: f64,
    pub variants: VariantSelection,
    pub include_self_replies_in_dyadic: bool,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        Self {
            max_tweets_per_conversation: DEFAULT_MAX_NODES,
            min_authors: 2,
            bin_width: DEFAULT_BIN_WIDTH,
            variants: VariantSelection::Both,
            include_self_replies_in_dyadic: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub topic: String,
    pub tweets_path: PathBuf,
    pub labels_path: Option<PathBuf>,
    pub output_dir: PathBuf,
    pub options: AnalysisOptions,
    /// Also write `trees.jsonl` with the reconstructed trees.
    pub emit_trees: bool,
}

impl RunConfig {
    pub fn new(topic: impl Into<String>, tweets_path: impl Into<PathBuf>, output_dir: impl Into<PathBuf>) -> Self {
        Self {
            topic: topic.into(),
            tweets_path: tweets_path.into(),
            labels_path: None,
            output_dir: output_dir.into(),
            options: AnalysisOptions::default(),
            emit_trees: false,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct CapDiagnostics {
    pub max_tweets_per_conversation: usize,
    pub n_capped: usize,
    pub n_tweets_dropped: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct EligibilityDiagnostics {
    pub min_authors: usize,
    pub n_candidates: usize,
    pub n_singletons: usize,
    pub n_too_few_authors: usize,
    pub n_eligible: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct VariantDiagnostics {
    pub variant: Option<Variant>,
    pub n_user_instances: usize,
    pub n_fragmentation_defined: usize,
    /// Users whose exposure column is all zero under this variant.
    pub n_zero_exposure_users: usize,
    /// Users with exposure but no exposed peer in their conversation.
    pub n_no_peer_users: usize,
    pub n_representation_defined: usize,
    pub n_representation_undefined: usize,
    pub max_raw_kl: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VariantResult {
    pub variant: Variant,
    pub fragmentation: Vec<FragmentationScore>,
    pub fragmentation_hist: Histogram,
    pub pool: LabelDistribution,
    pub representation: Vec<RepresentationScore>,
    pub representation_hist: Histogram,
    pub diagnostics: VariantDiagnostics,
}

impl VariantResult {
    pub fn defined_fragmentation(&self) -> Vec<f64> {
        self.fragmentation.iter().filter_map(|s| s.score).collect()
    }
}

/// Everything a run computes.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub topic: String,
    pub provenance: Provenance,
    pub ingest: IngestDiagnostics,
    pub reconstruction: ReconstructionDiagnostics,
    pub capping: CapDiagnostics,
    pub eligibility: EligibilityDiagnostics,
    pub trees: Vec<ConversationTree>,
    pub stats: CorpusStats,
    pub variants: Vec<VariantResult>,
    pub dyadic: DyadicMatrix,
    pub include_self_replies_in_dyadic: bool,
}

impl Analysis {
    pub fn variant(&self, v: Variant) -> Option<&VariantResult> {
        self.variants.iter().find(|r| r.variant == v)
    }
}

/// Reconstruct, cap, then filter. Capping runs first so that the two-author
/// rule holds for the trees that are actually scored.
pub fn prepare_trees(
    corpus: &Corpus,
    options: &AnalysisOptions,
) -> Result<(Vec<ConversationTree>, ReconstructionDiagnostics, CapDiagnostics, EligibilityDiagnostics)> {
    let (trees, reconstruction) = build_conversations(corpus)?;
    let mut capping = CapDiagnostics {
        max_tweets_per_conversation: options.max_tweets_per_conversation,
        ..Default::default()
    };
    let mut eligibility = EligibilityDiagnostics {
        min_authors: options.min_authors,
        n_candidates: trees.len(),
        ..Default::default()
    };
    let mut kept = Vec::with_capacity(trees.len());
    for tree in trees {
        let before = tree.len();
        let tree = cap_size(tree, options.max_tweets_per_conversation)?;
        if tree.len() < before {
            capping.n_capped += 1;
            capping.n_tweets_dropped += before - tree.len();
        }
        match check_eligible(&tree, options.min_authors) {
            Ok(()) => kept.push(tree),
            Err(Ineligible::Singleton) => eligibility.n_singletons += 1,
            Err(Ineligible::TooFewAuthors) => eligibility.n_too_few_authors += 1,
        }
    }
    eligibility.n_eligible = kept.len();
    Ok((kept, reconstruction, capping, eligibility))
}

pub fn analyze_variant(
    trees: &[ConversationTree],
    variant: Variant,
    bin_width: f64,
) -> Result<VariantResult> {
    let mut fragmentation = Vec::new();
    for tree in trees {
        fragmentation.extend(fragmentation_scores(&viewpoint_matrix(tree), variant));
    }
    let pool = pool_distribution(trees, variant);
    let representation = representation_scores(trees, &pool, variant)?;

    let frag_values: Vec<f64> = fragmentation.iter().filter_map(|s| s.score).collect();
    let repr_values: Vec<f64> = representation.iter().filter_map(|s| s.score).collect();
    let fragmentation_hist = histogram(&frag_values, bin_width)?;
    let representation_hist = histogram(&repr_values, bin_width)?;

    let count = |reason| fragmentation.iter().filter(|s| s.undefined == Some(reason)).count();
    let diagnostics = VariantDiagnostics {
        variant: Some(variant),
        n_user_instances: fragmentation.len(),
        n_fragmentation_defined: frag_values.len(),
        n_zero_exposure_users: count(Undefined::ZeroExposure),
        n_no_peer_users: count(Undefined::NoPeers),
        n_representation_defined: repr_values.len(),
        n_representation_undefined: representation.len() - repr_values.len(),
        max_raw_kl: representation.iter().filter_map(|s| s.raw_kl).reduce(f64::max),
    };
    Ok(VariantResult {
        variant,
        fragmentation,
        fragmentation_hist,
        pool,
        representation,
        representation_hist,
        diagnostics,
    })
}

pub fn analyze_corpus(corpus: &Corpus, ingest: IngestDiagnostics, options: &AnalysisOptions) -> Result<Analysis> {
    // Validate the bin width up front so a bad value fails before any work.
    histogram(&[], options.bin_width)?;
    let (trees, reconstruction, capping, eligibility) = prepare_trees(corpus, options)?;
    log::info!(
        "{}: {} of {} conversations eligible",
        corpus.topic,
        eligibility.n_eligible,
        eligibility.n_candidates
    );
    let stats = corpus_stats(&trees);
    let variants = options
        .variants
        .variants()
        .iter()
        .map(|&v| analyze_variant(&trees, v, options.bin_width))
        .collect::<Result<Vec<_>>>()?;
    let dyadic = dyadic_conditionals(&trees, &STANCE_LABELS, options.include_self_replies_in_dyadic)?;
    Ok(Analysis {
        topic: corpus.topic.clone(),
        provenance: corpus.provenance.clone(),
        ingest,
        reconstruction,
        capping,
        eligibility,
        trees,
        stats,
        variants,
        dyadic,
        include_self_replies_in_dyadic: options.include_self_replies_in_dyadic,
    })
}

fn fmt_f64(x: f64) -> String {
    format!("{x}")
}

// Bin edges are multiples of the width; round away representation noise.
fn fmt_edge(x: f64) -> String {
    format!("{}", (x * 1e10).round() / 1e10)
}

fn csv_string(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for row in rows {
        w.write_record(&row).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 csv")
}

pub const STATS_HEADER: [&str; 9] = [
    "topic",
    "n_conversations",
    "n_nodes",
    "n_edges",
    "n_distinct_users",
    "share_l1",
    "share_l2",
    "share_l3",
    "share_l4",
];

pub fn render_stats(topic: &str, stats: &CorpusStats) -> String {
    let mut row = vec![
        topic.to_string(),
        stats.n_conversations.to_string(),
        stats.n_nodes.to_string(),
        stats.n_edges.to_string(),
        stats.n_distinct_users.to_string(),
    ];
    match stats.label_shares {
        Some(shares) => row.extend(shares.iter().map(|&s| fmt_f64(s))),
        None => row.extend(std::iter::repeat_n(String::new(), 4)),
    }
    csv_string(&STATS_HEADER, [row])
}

pub fn render_fragmentation(topic: &str, variants: &[VariantResult]) -> String {
    let rows = variants.iter().flat_map(|v| {
        v.fragmentation.iter().map(move |s| {
            vec![
                topic.to_string(),
                s.conversation_id.clone(),
                s.author_id.clone(),
                s.score.map(fmt_f64).unwrap_or_default(),
                s.is_defined().to_string(),
                v.variant.to_string(),
            ]
        })
    });
    csv_string(
        &["topic", "conversation_id", "author_id", "score", "defined", "variant"],
        rows,
    )
}

pub fn render_representation(topic: &str, variants: &[VariantResult]) -> String {
    let rows = variants.iter().flat_map(|v| {
        v.representation.iter().map(move |s| {
            vec![
                topic.to_string(),
                s.conversation_id.clone(),
                s.raw_kl.map(fmt_f64).unwrap_or_default(),
                s.score.map(fmt_f64).unwrap_or_default(),
                v.variant.to_string(),
            ]
        })
    });
    csv_string(&["topic", "conversation_id", "raw_kl", "score", "variant"], rows)
}

pub fn render_histograms<'a>(
    metric: &str,
    hists: impl IntoIterator<Item = (Variant, &'a Histogram)>,
) -> String {
    let rows = hists.into_iter().flat_map(|(variant, h)| {
        h.bins().into_iter().map(move |b| {
            vec![
                variant.to_string(),
                metric.to_string(),
                fmt_edge(b.lower),
                fmt_edge(b.upper),
                b.count.to_string(),
                fmt_f64(b.share),
            ]
        })
    });
    csv_string(
        &["variant", "metric", "bin_lower", "bin_upper", "count", "share"],
        rows,
    )
}

/// Field holding the wall-clock time of the run; the only nondeterministic
/// value in any report.
pub const RUN_TIMESTAMP_FIELD: &str = "run_timestamp_unix";

#[derive(Serialize)]
struct ProvenanceOut<'a> {
    sources: &'a [PathBuf],
    run_timestamp_unix: u64,
}

#[derive(Serialize)]
struct DiagnosticsOut<'a> {
    topic: &'a str,
    n_conversations: usize,
    ingest: &'a IngestDiagnostics,
    reconstruction: &'a ReconstructionDiagnostics,
    capping: &'a CapDiagnostics,
    eligibility: &'a EligibilityDiagnostics,
    variants: Vec<&'a VariantDiagnostics>,
    pools: Vec<&'a LabelDistribution>,
    dyadic_includes_self_replies: bool,
    provenance: ProvenanceOut<'a>,
}

pub fn render_diagnostics(a: &Analysis) -> String {
    let out = DiagnosticsOut {
        topic: &a.topic,
        n_conversations: a.trees.len(),
        ingest: &a.ingest,
        reconstruction: &a.reconstruction,
        capping: &a.capping,
        eligibility: &a.eligibility,
        variants: a.variants.iter().map(|v| &v.diagnostics).collect(),
        pools: a.variants.iter().map(|v| &v.pool).collect(),
        dyadic_includes_self_replies: a.include_self_replies_in_dyadic,
        provenance: ProvenanceOut {
            sources: &a.provenance.sources,
            run_timestamp_unix: a.provenance.ingested_at_unix,
        },
    };
    let mut s = serde_json::to_string_pretty(&out).expect("diagnostics serialize");
    s.push('\n');
    s
}

/// File name → contents for a full `analyze` run.
pub fn render_reports(a: &Analysis, emit_trees: bool) -> Vec<(&'static str, String)> {
    let mut files = vec![
        (STATS_FILE, render_stats(&a.topic, &a.stats)),
        (FRAGMENTATION_FILE, render_fragmentation(&a.topic, &a.variants)),
        (
            FRAGMENTATION_HIST_FILE,
            render_histograms("fragmentation", a.variants.iter().map(|v| (v.variant, &v.fragmentation_hist))),
        ),
        (REPRESENTATION_FILE, render_representation(&a.topic, &a.variants)),
        (
            REPRESENTATION_HIST_FILE,
            render_histograms("representation", a.variants.iter().map(|v| (v.variant, &v.representation_hist))),
        ),
        (DYADIC_FILE, a.dyadic.to_json() + "\n"),
        (DIAGNOSTICS_FILE, render_diagnostics(a)),
    ];
    if emit_trees {
        let mut lines = String::new();
        for t in &a.trees {
            lines.push_str(&tree_audit_line(t));
            lines.push('\n');
        }
        files.push((TREES_FILE, lines));
    }
    files
}

/// Write all files or none: each goes to a hidden temp file first, and
/// renames happen only after every temp file is complete.
pub fn write_atomically(dir: &Path, files: &[(&str, String)]) -> Result<()> {
    let io_err = |path: &Path| {
        let path = path.to_path_buf();
        move |source| Error::Output { path, source }
    };
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut staged: Vec<(PathBuf, PathBuf)> = Vec::with_capacity(files.len());
    let cleanup = |staged: &[(PathBuf, PathBuf)]| {
        for (tmp, _) in staged {
            let _ = fs::remove_file(tmp);
        }
    };
    for (name, contents) in files {
        let tmp = dir.join(format!(".{name}.tmp"));
        if let Err(e) = fs::write(&tmp, contents) {
            let _ = fs::remove_file(&tmp);
            cleanup(&staged);
            return Err(io_err(&tmp)(e));
        }
        staged.push((tmp, dir.join(name)));
    }
    for (i, (tmp, dest)) in staged.iter().enumerate() {
        if let Err(e) = fs::rename(tmp, dest) {
            cleanup(&staged[i..]);
            // Reports from this run that already landed would be inconsistent alone.
            for (_, done) in &staged[..i] {
                let _ = fs::remove_file(done);
            }
            return Err(io_err(dest)(e));
        }
    }
    Ok(())
}

/// Outcome of a command: the analysis plus the files written.
pub struct RunOutcome {
    pub analysis: Analysis,
    pub files: Vec<PathBuf>,
}

fn load(config: &RunConfig) -> Result<(Corpus, IngestDiagnostics)> {
    Ok(load_corpus(
        &config.tweets_path,
        config.labels_path.as_deref(),
        &config.topic,
    )?)
}

pub fn run_analyze(config: &RunConfig) -> Result<RunOutcome> {
    let (corpus, ingest) = load(config)?;
    let analysis = analyze_corpus(&corpus, ingest, &config.options)?;
    let files = render_reports(&analysis, config.emit_trees);
    write_atomically(&config.output_dir, &files)?;
    Ok(RunOutcome {
        files: files.iter().map(|(n, _)| config.output_dir.join(n)).collect(),
        analysis,
    })
}

/// Like [`run_analyze`] but writes only `stats.csv`.
pub fn run_stats(config: &RunConfig) -> Result<RunOutcome> {
    let (corpus, ingest) = load(config)?;
    let options = AnalysisOptions {
        variants: VariantSelection::Both,
        ..config.options.clone()
    };
    let (trees, reconstruction, capping, eligibility) = prepare_trees(&corpus, &options)?;
    let stats = corpus_stats(&trees);
    let files = vec![(STATS_FILE, render_stats(&config.topic, &stats))];
    write_atomically(&config.output_dir, &files)?;
    let dyadic = dyadic_conditionals(&[], &STANCE_LABELS, true)?;
    Ok(RunOutcome {
        files: vec![config.output_dir.join(STATS_FILE)],
        analysis: Analysis {
            topic: corpus.topic.clone(),
            provenance: corpus.provenance.clone(),
            ingest,
            reconstruction,
            capping,
            eligibility,
            trees,
            stats,
            variants: Vec::new(),
            dyadic,
            include_self_replies_in_dyadic: options.include_self_replies_in_dyadic,
        },
    })
}
