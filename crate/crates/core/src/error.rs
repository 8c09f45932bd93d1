use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("enumerating {k}! = {cost} permutations exceeds the cap of k <= {cap}")]
    Capacity { k: usize, cost: u128, cap: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("usage: {0}")]
    Usage(String),

    #[error("posterior ordinate at the pivot underflowed to zero; the pivot is not supported by the chain")]
    UnsupportedPivot,

    #[error("estimation failed: {0}")]
    EstimationFailure(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
