//! Error type shared by every module.

use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument is outside the domain of the operation.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    /// The input is larger than a configured cap.
    #[error("size limit exceeded: {what} has {got} elements, limit is {limit}")]
    SizeLimit {
        what: &'static str,
        got: usize,
        limit: usize,
    },
    /// Two input points are at distance zero.
    #[error("duplicate points {0} and {1} (distance 0)")]
    DuplicatePoint(usize, usize),
    /// The structure has no elements to operate on.
    #[error("empty structure: {0}")]
    EmptyStructure(String),
    /// The operation is not defined for the current state.
    #[error("invalid state: {0}")]
    InvalidState(String),
    /// A graph that must be connected is not.
    #[error("graph is disconnected: {0}")]
    Disconnected(String),
    /// A randomized generator ran out of its rejection budget.
    #[error("generation failed: {0}")]
    GenerationFailure(String),
    /// An instrumented self-check found a broken invariant.
    #[error("invariant violated: {0}")]
    Invariant(String),
    /// Malformed input data.
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}
