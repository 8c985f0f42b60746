use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the library.
///
/// `Invalid*`/`Unknown*` variants describe bad input data; `Io` and `Json`
/// wrap the underlying I/O and parse failures.
#[derive(Debug, Error)]
pub enum Error {
    #[error("span ({start}, {end}) is invalid: start must be < end")]
    EmptySpan { start: usize, end: usize },

    #[error("span ({start}, {end}) exceeds section length {len}")]
    SpanOutOfBounds { start: usize, end: usize, len: usize },

    #[error("invalid entity: {0}")]
    InvalidEntity(String),

    #[error("invalid document: {0}")]
    InvalidDocument(String),

    #[error("unknown entity class `{0}`")]
    UnknownClass(String),

    #[error("unknown tag `{0}`")]
    UnknownTag(String),

    #[error("invalid label space: {0}")]
    InvalidLabelSpace(String),

    #[error("threshold {0} is outside [0, 1]")]
    InvalidThreshold(f64),

    #[error("shape mismatch: expected {expected}, got {actual}")]
    ShapeMismatch { expected: String, actual: String },

    #[error("value {value} at token {token}, label {label} is outside [0, 1]")]
    ProbabilityOutOfRange { token: usize, label: usize, value: f64 },

    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },

    #[error("sentence {sentence}: {message}")]
    SentenceMismatch { sentence: usize, message: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("training aborted at epoch {epoch}: loss is not finite")]
    NonFiniteLoss { epoch: usize },

    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub fn file(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::File {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by argument values rather than by input data.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            Error::InvalidThreshold(_) | Error::InvalidArgument(_) | Error::InvalidLabelSpace(_)
        )
    }
}
