//! Reply-tree reconstruction and viewpoint-diversity metrics for labelled
//! conversation corpora.
//!
//! The pipeline is: [`ingest`] tweets and labels into a [`Corpus`],
//! rebuild reply trees with [`graph`], turn each tree into a user exposure
//! matrix with [`exposure`], and score it with [`metrics`] (Fragmentation
//! per user, Representation per conversation) and [`dyadic`] (reply-label
//! conditionals). [`synth`] generates corpora with known dynamics and
//! [`report`] wires everything into on-disk reports.

pub mod dyadic;
pub mod error;
pub mod exposure;
pub mod graph;
pub mod ingest;
pub mod label;
pub mod metrics;
pub mod report;
pub mod synth;

pub use error::{ConfigError, Error, GraphError, IngestError, MetricError, RecordError, Result};
pub use graph::{ConversationTree, CorpusStats};
pub use ingest::{Corpus, TweetRecord};
pub use label::{merge_labels, Claim, RawAnnotation, Relevance, ViewpointLabel};
pub use metrics::Variant;
