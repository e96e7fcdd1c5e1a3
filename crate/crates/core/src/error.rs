//! Error type shared by every module in the crate.

/// Errors surfaced by construction, factorization, and evaluation routines.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// A matrix exceeded the symmetry tolerance during factorization.
    #[error("matrix is not symmetric: |m[{row},{col}] - m[{col},{row}]| = {deviation:e} exceeds tolerance")]
    NotSymmetric {
        row: usize,
        col: usize,
        deviation: f64,
    },

    /// A Cholesky pivot was zero or negative.
    #[error("matrix is not positive definite: pivot {pivot:e} at index {index}")]
    NotPositiveDefinite { index: usize, pivot: f64 },

    /// Vector or matrix dimensions do not agree.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// An input contained a NaN or infinity.
    #[error("non-finite input in {context}")]
    NonFiniteInput { context: &'static str },

    /// The covariance of the linearized half-space system could not be factorized.
    #[error("linearized covariance is numerically degenerate")]
    DegenerateCovariance,

    /// A histogram window contained no samples.
    #[error("no samples fell inside the histogram window")]
    WindowEmpty,

    /// A probability estimate fell outside [0, 1] by more than its error estimate.
    #[error("probability estimate {value} is outside [0, 1] by more than its error estimate {error_estimate:e}")]
    ProbabilityOutOfRange { value: f64, error_estimate: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
