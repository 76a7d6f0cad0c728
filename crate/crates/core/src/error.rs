//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A builder or operation was handed parameters that violate its
    /// preconditions (empty ranges, zero counts, out-of-bounds budgets, ...).
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// Generation could not satisfy a structural constraint (e.g. the
    /// intersection generator failed to reach a unique satisfying entity).
    #[error("generation failed: {0}")]
    Generation(String),

    /// Input data violates an operation's contract (length mismatches,
    /// ids outside the vocabulary, empty loss masks, ...).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A numeric routine could not produce a usable result.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// Training diverged (NaN loss); the last good checkpoint is retained.
    #[error("training diverged at step {step}")]
    Diverged { step: u64 },

    /// Malformed persisted artifact (vocabulary file, checkpoint, run log).
    #[error("malformed {kind}: {detail}")]
    Malformed { kind: &'static str, detail: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::InvalidConfig(msg.into())
    }

    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn malformed(kind: &'static str, detail: impl Into<String>) -> Self {
        Error::Malformed {
            kind,
            detail: detail.into(),
        }
    }
}
