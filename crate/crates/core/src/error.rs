use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, KaczError>;

#[derive(Debug, Error)]
pub enum KaczError {
    /// A caller broke an operation's precondition (index range, lengths, ...).
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("row {row} has no nonzero entries")]
    ZeroRow { row: usize },

    #[error("non-finite value at position {index}")]
    NonFinite { index: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("system inconsistent: relative residual {relative_residual:.3e} of the least-squares solution exceeds tolerance")]
    Inconsistent { relative_residual: f64 },

    #[error("degenerate reference solution: RES undefined for x* = 0")]
    DegenerateReference,

    #[error("degenerate initial residual: RR undefined for b - Ax0 = 0")]
    DegenerateResidual,

    #[error("{path}:{line}: {message}")]
    MatrixMarket {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl KaczError {
    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        KaczError::Contract(msg.into())
    }
}
