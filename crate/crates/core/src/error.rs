use std::io;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("shape mismatch: expected {expected} points per axis, found {found}")]
    ShapeMismatch { expected: usize, found: usize },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("Derrick ratio undefined for non-positive total energy {total:e}")]
    UndefinedRatio { total: f64 },

    #[error("non-finite {quantity} at site ({}, {}, {})", site[0], site[1], site[2])]
    NonFinite { quantity: &'static str, site: [usize; 3] },

    #[error("checkpoint integrity error at byte offset {offset}: {reason}")]
    Integrity { offset: u64, reason: String },

    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
