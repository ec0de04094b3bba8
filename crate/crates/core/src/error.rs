use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A Cholesky pivot fell below the relative tolerance.
    #[error("matrix is not positive definite (pivot {pivot:e} at index {index}, tolerance {tolerance:e})")]
    NotPositiveDefinite {
        index: usize,
        pivot: f64,
        tolerance: f64,
    },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("combiner is the zero vector")]
    ZeroCombiner,
    #[error("one-bit antenna {index} has zero channel gain; its phase is undefined")]
    ZeroGainOneBitAntenna { index: usize },
    #[error("limiting one-bit covariance is singular (collinear one-bit phases)")]
    SingularLimitMatrix,
    #[error("{rejected} of {trials} channel draws were rejected as degenerate")]
    TooManyRejections { rejected: usize, trials: usize },
    #[error("invalid argument: {0}")]
    Domain(String),
    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("failed to build worker pool: {0}")]
    Workers(String),
}

impl Error {
    pub(crate) fn domain(message: impl Into<String>) -> Self {
        Error::Domain(message.into())
    }
}
