use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("file not found: {0}")]
    MissingFile(PathBuf),

    #[error("schema maps `{column}` but the input has no such column")]
    UnmappedColumn { column: String },

    #[error("corpus {0} contains no usable rows")]
    EmptyCorpus(PathBuf),

    #[error("claim `{0}` has no gold label")]
    Unlabeled(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    /// A provider call that may succeed if tried again later.
    #[error("provider `{provider}` failed (retriable): {message}")]
    Retriable { provider: String, message: String },

    #[error("provider `{provider}` failed: {message}")]
    Provider { provider: String, message: String },

    #[error("malformed payload from {source_name}: {message}")]
    MalformedPayload {
        source_name: String,
        message: String,
    },

    #[error("replay cache miss for {url} (key {key})")]
    CacheMiss { key: String, url: String },

    #[error("embedding dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("claim `{claim_id}`: {source}")]
    Claim {
        claim_id: String,
        #[source]
        source: Box<Error>,
    },

    #[error("summarization returned a blank response for claim `{0}`")]
    SummarizationFailed(String),

    #[error("knowledge base for claim `{0}` is empty")]
    EmptyKnowledgeBase(String),

    #[error("few-shot sampling needs at least {needed_verifiable} verifiable and {needed_non_verifiable} non-verifiable claims, found {verifiable}/{non_verifiable}")]
    InsufficientShots {
        needed_verifiable: usize,
        needed_non_verifiable: usize,
        verifiable: usize,
        non_verifiable: usize,
    },

    #[error("prediction and gold id sets differ: {0}")]
    IdMismatch(String),

    #[error("degenerate statistic: {0}")]
    Degenerate(String),

    #[error("all {0} claims failed")]
    AllClaimsFailed(usize),

    #[error("manifest check failed: {0}")]
    Manifest(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn is_retriable(&self) -> bool {
        match self {
            Error::Retriable { .. } => true,
            Error::Claim { source, .. } => source.is_retriable(),
            _ => false,
        }
    }

    /// Replay cache misses abort whole runs instead of being isolated per item.
    pub fn is_cache_miss(&self) -> bool {
        match self {
            Error::CacheMiss { .. } => true,
            Error::Claim { source, .. } => source.is_cache_miss(),
            _ => false,
        }
    }

    pub(crate) fn for_claim(self, claim_id: &str) -> Self {
        match self {
            e @ Error::Claim { .. } => e,
            e => Error::Claim {
                claim_id: claim_id.to_string(),
                source: Box::new(e),
            },
        }
    }
}
