use thiserror::Error;

use crate::subsolvers::SolveStatus;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid data: {0}")]
    Data(String),

    #[error("malformed CSV at line {line}, column {column}: {message}")]
    Csv {
        line: u64,
        column: usize,
        message: String,
    },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    #[error("need at least 2 observations, found {0}")]
    TooFewObservations(usize),

    #[error(
        "{n_assets} assets exceeds the cap of {cap}: co-kurtosis storage grows as O(N^4) \
         and would need {bytes} bytes"
    )]
    TooManyAssets {
        n_assets: usize,
        cap: usize,
        bytes: u128,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("eigendecomposition failed: {0}")]
    Eigen(String),

    #[error("{problem} subproblem returned {status} at iteration {iteration}")]
    Subsolver {
        problem: &'static str,
        iteration: usize,
        status: SolveStatus,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
