use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty corpus")]
    EmptyCorpus,

    #[error("empty sequence{}", .0.as_deref().map(|id| format!(" `{id}`")).unwrap_or_default())]
    EmptySequence(Option<String>),

    #[error("token id {id} out of range for vocabulary of size {size}")]
    TokenOutOfRange { id: u32, size: usize },

    #[error("duplicate sequence id `{0}`")]
    DuplicateId(String),

    #[error("value {value} at index {index} is outside [{low}, {high}]")]
    OutOfRange {
        index: usize,
        value: f64,
        low: f64,
        high: f64,
    },

    #[error("length mismatch: {what} ({left} vs {right})")]
    LengthMismatch {
        what: &'static str,
        left: usize,
        right: usize,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("{topics} topics requested but corpus has only {tokens} tokens")]
    TooManyTopics { topics: usize, tokens: usize },

    #[error("LDA run {run}: {source}")]
    Run {
        run: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("cluster definition is not total over the topic set; missing topic ids {missing:?}, unknown topic ids {unknown:?}")]
    NotTotal {
        missing: Vec<usize>,
        unknown: Vec<usize>,
    },

    #[error("cluster definition has duplicate entries for topic ids {0:?}")]
    DuplicateTopic(Vec<usize>),

    #[error("cluster {cluster} is empty")]
    EmptyCluster { cluster: usize },

    #[error("training input contains novel sequence `{0}`")]
    NovelInTraining(String),

    #[error("non-finite loss at epoch {epoch}, batch {batch}")]
    NonFiniteLoss { epoch: usize, batch: usize },

    #[error("need both normal and novel samples (normal: {normal}, novel: {novel})")]
    SingleClass { normal: usize, novel: usize },

    #[error("silhouette needs at least two clusters, got {0}")]
    TooFewClusters(usize),

    #[error("malformed input: {0}")]
    Malformed(String),

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
