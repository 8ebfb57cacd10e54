use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("selection exhausted: requested {requested} features but only {available} are distinct up to sign")]
    SelectionExhausted { requested: usize, available: usize },

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("malformed data: {0}")]
    Format(String),

    #[error("insufficient pool: class {class} has {available} items, need {required}")]
    InsufficientPool {
        class: i8,
        available: usize,
        required: usize,
    },

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    /// Errors that stem from the caller's data rather than the arithmetic.
    pub fn is_data_error(&self) -> bool {
        matches!(
            self,
            Error::Format(_) | Error::Io(_) | Error::InsufficientPool { .. } | Error::Empty(_)
        )
    }

    pub fn is_numeric_error(&self) -> bool {
        matches!(self, Error::NonFinite(_))
    }
}
