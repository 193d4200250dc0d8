use thiserror::Error;

/// Reasons a dataset fails its shape invariants.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ValidationError {
    #[error("dataset is empty")]
    EmptyData,
    #[error("non-finite value at position {0}")]
    NonFiniteValue(usize),
    #[error("time index is not strictly increasing at position {0}")]
    NonMonotoneIndex(usize),
    #[error("grouped data needs at least 2 groups, got {0}")]
    TooFewGroups(usize),
    #[error("group {0} is empty")]
    EmptyGroup(usize),
    #[error("values and time index differ in length ({values} vs {index})")]
    LengthMismatch { values: usize, index: usize },
}

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Validation(#[from] ValidationError),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("division by zero: {0}")]
    DivisionByZero(String),

    #[error("degenerate statistic: {0}")]
    DegenerateStatistic(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid data for model: {0}")]
    InvalidData(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("degenerate split: {0}")]
    DegenerateSplit(String),

    #[error("too many folds: {0}")]
    TooManyFolds(String),

    #[error("values outside [0, 1] at position {0}")]
    OutOfRange(usize),

    #[error("singular matrix: {0}")]
    SingularMatrix(String),

    #[error("prior effective sample size is only defined for the Poisson-gamma model")]
    EssUndefined,

    #[error("POP-PC-v1 needs the data-generating distribution, which is only known in simulation")]
    TruthUnavailable,

    #[error("sampler produced non-finite draws: {0}")]
    NonFiniteDraw(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
