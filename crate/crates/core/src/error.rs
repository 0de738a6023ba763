use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("zero denominator")]
    ZeroDenominator,

    #[error("pole at evaluation point")]
    Pole,

    #[error("coordinate index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },

    #[error("chart mismatch")]
    ChartMismatch,

    #[error("invalid chart: {0}")]
    InvalidChart(String),

    #[error("degree mismatch: expected {expected}, found {found}")]
    DegreeMismatch { expected: i32, found: i32 },

    #[error("arity mismatch: expected {expected} arguments, found {found}")]
    ArityMismatch { expected: usize, found: usize },

    #[error("endomorphism not invertible")]
    NotInvertible,

    #[error("input is not a graded derivation: {0}")]
    NotADerivation(String),

    #[error("derivation degree {degree} outside [-1, {dim}]")]
    DegreeOutOfRange { degree: i32, dim: usize },

    #[error("rank-deficient generator set: rank {rank} < {count}")]
    RankDeficient { rank: usize, count: usize },

    #[error("not a direct sum (determinant {det})")]
    NotDirectSum { det: String },

    #[error("involutive closure did not stabilize within {cap} rounds (rank {rank})")]
    ClosureNotStabilized { cap: usize, rank: usize },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("odd-dimensional chart cannot carry a complex structure")]
    OddDimension,

    #[error("no real points located")]
    NoRealPoints,

    #[error("gradient identically null")]
    NullGradient,

    #[error("parse error at column {column}: {message}")]
    Parse { column: usize, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;
