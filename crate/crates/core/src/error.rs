use thiserror::Error;

/// Errors raised by the numerical routines in this crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("insufficient history: index {index} needs {needed} steps of history, {available} available")]
    InsufficientHistory {
        index: usize,
        needed: usize,
        available: usize,
    },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("horizon exhausted: requested index {requested}, last index is {last}")]
    HorizonExhausted { requested: usize, last: usize },

    #[error(
        "fixed-point iteration did not contract at window length {window} (factor {factor:.3}); \
         driver norms {driver_norms:?}, field bound {field_bound:.3e}"
    )]
    ConvergenceFailure {
        window: usize,
        factor: f64,
        driver_norms: [f64; 3],
        field_bound: f64,
    },

    #[error("malformed driver archive: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
