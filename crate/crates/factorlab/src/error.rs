//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed edge-list input; `line` is 1-based.
    #[error("input format error at line {line}: {msg}")]
    InputFormat { line: usize, msg: String },

    /// Graphs of mismatched order combined.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// A parameter outside its mathematical domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// An argument that violates an operation's precondition.
    #[error("argument error: {0}")]
    Argument(String),

    /// Instance too large for an exact desk-scale routine.
    #[error("size limit exceeded: {0}")]
    SizeLimit(String),

    /// A rejection-sampled construction ran out of retries.
    #[error("construction failed after {retries} retries: {msg}")]
    ConstructionFailure { retries: usize, msg: String },

    /// An input rejected by an up-front hypothesis check.
    #[error("rejected input: {0}")]
    RejectedInput(String),

    /// A verification step that should never fail on accepted runs did.
    #[error("internal error: {0}")]
    Internal(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
