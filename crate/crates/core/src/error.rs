use std::path::PathBuf;

use crate::learner::RunStats;

/// Errors produced by the hemilearn library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// No hemimetric is consistent with the supplied constraints.
    #[error("infeasible: {0}")]
    Infeasible(String),

    /// The enumeration oracle exceeded its visit budget.
    #[error("resource limit exceeded after {visits} candidate visits")]
    ResourceExhausted { visits: u64 },

    /// Every off-diagonal gap is already within precision.
    #[error("query policy exhausted: all gaps are within precision")]
    PolicyExhausted,

    /// A robust response wrapper hit its raw-query cap. When raised from a
    /// learner the partial run statistics are attached.
    #[error("raw query budget of {cap} exhausted")]
    BudgetExhausted {
        cap: u64,
        stats: Option<Box<RunStats>>,
    },

    #[error("degenerate parameters: {0}")]
    DegenerateParameters(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}
