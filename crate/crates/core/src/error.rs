use thiserror::Error;

/// Errors raised by every fallible operation in the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("oracle guard: {0}")]
    OracleGuard(String),

    #[error("degree mismatch: factor expects degree {expected}, graph has degree {actual}")]
    DegreeMismatch { expected: usize, actual: usize },

    #[error("not a tree ball: {0}")]
    NotATree(String),

    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    #[error("estimation failure: {0}")]
    Estimation(String),

    #[error("matching peel failed at layer {layer} after {attempts} attempts")]
    PeelFailure { layer: usize, attempts: usize },

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}
