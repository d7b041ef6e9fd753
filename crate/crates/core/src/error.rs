use std::path::PathBuf;

/// Problems with a single tweet line.
#[derive(Debug, thiserror::Error)]
pub enum RecordError {
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("schema error: missing field `{0}`")]
    MissingField(&'static str),
    #[error("schema error: field `{field}` {reason}")]
    InvalidField { field: &'static str, reason: String },
    #[error("validation error: tweet {0} replies to itself")]
    SelfReply(String),
}

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {source}")]
    Record {
        path: PathBuf,
        line: usize,
        #[source]
        source: RecordError,
    },
    #[error("duplicate tweet id {0}")]
    DuplicateId(String),
    #[error("tweet {tweet_id} in conversation {conversation_id} replies to {parent_id}, which belongs to conversation {parent_conversation_id}")]
    CrossConversationParent {
        tweet_id: String,
        conversation_id: String,
        parent_id: String,
        parent_conversation_id: String,
    },
    #[error("labels file {path}: {message}")]
    Labels { path: PathBuf, message: String },
}

#[derive(Debug, thiserror::Error)]
pub enum GraphError {
    #[error("conversation {conversation_id} contains a reply cycle")]
    Cycle { conversation_id: String },
    #[error("conversation {conversation_id} is not a single reply tree: {reason}")]
    NotATree {
        conversation_id: String,
        reason: String,
    },
}

/// An invalid parameter or configuration value.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("configuration error: {0}")]
pub struct ConfigError(pub String);

impl ConfigError {
    pub fn new(msg: impl Into<String>) -> Self {
        Self(msg.into())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum MetricError {
    #[error("conversation {conversation_id} uses label {label} which has zero probability in the pool")]
    PoolSupport {
        conversation_id: String,
        label: crate::ViewpointLabel,
    },
    #[error("pool distribution covers {pool} labels but the analysis variant uses {expected}")]
    PoolShape { pool: usize, expected: usize },
}

/// Top-level error for the end-to-end pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error("cannot write {path}: {source}")]
    Output {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
