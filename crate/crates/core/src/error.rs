use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension {0} outside the supported range 1..=24")]
    DimensionOutOfRange(usize),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("coordinate {coord} outside 1..={n}")]
    CoordinateOutOfRange { coord: usize, n: usize },
    #[error("bits set above dimension {n}")]
    StrayBits { n: usize },
    #[error("invalid truth table: {0}")]
    InvalidTable(String),
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("invalid permutation: {0}")]
    InvalidPermutation(String),
    #[error("invalid restriction: {0}")]
    InvalidRestriction(String),
    #[error("test function value {0} outside [0, 1]")]
    TestFunctionRange(f64),
    #[error("{kind} budget exhausted (limit {limit})")]
    BudgetExhausted { kind: &'static str, limit: u64 },
    #[error("operation needs a dense function")]
    NotDense,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("learner failure: {0}")]
    Learner(String),
    #[error("normalizer is zero: the function disagrees with every label on the support")]
    ZeroNormalizer,
    #[error("contract violation: {0}")]
    ContractViolation(String),
    #[error("insufficient samples: need {needed}, got {got}")]
    InsufficientSamples { needed: usize, got: usize },
    #[error("starved: {0}")]
    Starved(String),
}

pub type Result<T> = std::result::Result<T, Error>;
