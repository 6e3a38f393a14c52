use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension {0} is not a power of two")]
    NotPowerOfTwo(usize),

    #[error("dimension {n} exceeds the materialization limit {limit}")]
    DimensionTooLarge { n: usize, limit: usize },

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("sketch dimension m={m} out of range for n={n}")]
    SketchDimension { m: usize, n: usize },

    #[error("{count} supports of size {s} exceed the enumeration budget {budget}")]
    BudgetExceeded { s: usize, count: u128, budget: u128 },

    #[error("MRIP level {level}: {source}")]
    Level { level: usize, source: Box<Error> },

    #[error("fixed-point iteration did not converge; upper bracket {upper}")]
    NoConvergence { upper: u64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("degenerate fit: need at least {needed} points, got {got}")]
    DegenerateFit { needed: usize, got: usize },

    #[error("empty input")]
    Empty,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
