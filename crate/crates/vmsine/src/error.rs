use thiserror::Error;

/// Errors produced by the vmsine library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite angle value: {0}")]
    NonFiniteAngle(f64),

    #[error("empty sample: need at least one observation")]
    EmptySample,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("degenerate mean direction in dimension {dim}: resultant length {resultant:.3e}")]
    DegenerateDirection { dim: usize, resultant: f64 },

    #[error("degenerate circular correlation: zero sine deviation in one column")]
    DegenerateCorrelation,

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("invalid normalization strategy: {0}")]
    StrategyInvalid(String),

    #[error("singular matrix: {0}")]
    SingularMatrix(String),

    #[error("non-positive density: {0}")]
    NonPositiveDensity(f64),

    #[error("degenerate subsample: {0}")]
    DegenerateSubsample(String),

    #[error("reweighting step failed: {0}")]
    StepFailure(String),

    #[error("estimation failed: {0}")]
    EstimationFailure(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
