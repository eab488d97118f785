use thiserror::Error;

/// Errors raised by contract violations, bad configuration, and unsupported requests.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("search point has a non-finite coordinate at index {index}")]
    NonFinitePoint { index: usize },

    #[error("empty search point")]
    EmptyPoint,

    #[error("problem `{problem}` returned a non-finite fitness draw")]
    NonFiniteFitness { problem: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
