use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch in {what}: expected {expected}, got {actual}")]
    DimensionMismatch {
        what: String,
        expected: usize,
        actual: usize,
    },

    #[error("forward cache does not match the model: {0}")]
    CacheMismatch(String),

    #[error("missing gold rating for image {image_id} in topic {topic_id}")]
    MissingRating { topic_id: String, image_id: String },

    #[error("unknown topic id {0}")]
    UnknownTopic(String),

    #[error("negative pool exhausted for topic {topic_id}: need {needed}, only {available} eligible images")]
    PoolExhausted {
        topic_id: String,
        needed: usize,
        available: usize,
    },

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("linear system is singular; use a positive ridge penalty")]
    Singular,
}

impl Error {
    pub(crate) fn dim(what: impl Into<String>, expected: usize, actual: usize) -> Self {
        Error::DimensionMismatch {
            what: what.into(),
            expected,
            actual,
        }
    }

    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
