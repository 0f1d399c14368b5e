use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("entry {index} is not a finite positive number (got {value})")]
    NonPositiveEntry { index: usize, value: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix must have at least 2 alternatives, got {n}")]
    TooSmall { n: usize },

    #[error("parameter `{name}` must be finite and positive (got {value})")]
    NonPositiveParameter { name: &'static str, value: f64 },

    #[error("invalid weight vector: {0}")]
    InvalidWeights(String),

    #[error("linear system is numerically singular")]
    SingularSystem,

    #[error("solution leaves the positive orthant: {weights:?}")]
    NonPositiveSolution { weights: Vec<f64> },

    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("size {n} not supported here (maximum {max})")]
    UnsupportedSize { n: usize, max: usize },

    #[error("value {value} is outside scale `{scale}`")]
    OutOfScale { value: f64, scale: String },

    #[error("unknown scale `{name}` (available: {available})")]
    UnknownScale { name: String, available: String },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("report serialization failed: {0}")]
    Serialization(String),
}
