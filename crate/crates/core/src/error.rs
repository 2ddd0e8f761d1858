use thiserror::Error;

use crate::pursuit::PursuitResult;

pub type Result<T> = std::result::Result<T, CscError>;

#[derive(Debug, Error)]
pub enum CscError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("index {index} out of range for length {len}")]
    Index { index: usize, len: usize },

    #[error("capacity exceeded: {0}")]
    Capacity(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("stripe {0} has no non-zeros")]
    EmptyStripe(usize),

    #[error("support submatrix is numerically singular (atom {atom})")]
    SingularSupport { atom: usize },

    /// The solver hit its iteration cap. The best iterate is still available.
    #[error("no convergence after {} iterations", .0.iterations)]
    NonConvergence(Box<PursuitResult>),

    #[error("deadline exceeded")]
    Timeout,

    #[error("no support reproduces the signal exactly")]
    NoSolution,

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl CscError {
    pub(crate) fn dim(msg: impl Into<String>) -> Self {
        CscError::Dimension(msg.into())
    }
}
