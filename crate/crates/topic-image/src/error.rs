use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("{}:{line}: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{}:{line}: token '{token}' has {actual} components, expected {expected}", path.display())]
    EmbeddingDimension {
        path: PathBuf,
        line: usize,
        token: String,
        expected: usize,
        actual: usize,
    },

    #[error("link error: {0}")]
    Link(String),

    #[error(transparent)]
    Core(#[from] topic_image_core::Error),

    #[error("model file: {0}")]
    Model(String),

    #[error("feature configuration mismatch: {0}")]
    FeatureMismatch(String),

    #[error("configuration: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Input files or data that violate the declared formats and invariants,
    /// as opposed to runtime failures.
    pub fn is_validation(&self) -> bool {
        use topic_image_core::Error as C;
        match self {
            Error::Parse { .. } | Error::EmbeddingDimension { .. } | Error::Link(_) => true,
            Error::Core(c) => matches!(
                c,
                C::Validation(_) | C::DimensionMismatch { .. } | C::UnknownTopic(_) | C::MissingRating { .. }
            ),
            _ => false,
        }
    }
}
