//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A caller-supplied parameter violates a documented precondition.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// An exhaustive enumeration would exceed the desk-scale budget.
    #[error("enumeration budget exceeded: {0}")]
    Resource(String),

    /// Register layouts of two states (or a label and a layout) disagree.
    #[error("register layout mismatch: {0}")]
    Layout(String),

    /// An operation precondition failed on the concrete state.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// A probabilistic step hit its (exponentially rare) bad event; the
    /// caller is expected to retry with fresh randomness.
    #[error("retry: {0}")]
    Retry(&'static str),

    /// Uncompute requested but the target register does not hold the
    /// claimed function of the sources.
    #[error("inconsistent state: {0}")]
    Inconsistent(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn is_retry(&self) -> bool {
        matches!(self, Error::Retry(_))
    }
}
