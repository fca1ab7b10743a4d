//! Error types shared by every estimator and the CLI.

use thiserror::Error;

/// Errors produced by the DOA toolkit.
#[derive(Debug, Error)]
pub enum DoaError {
    /// Input violated a documented precondition (dimensions, ranges, finiteness).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A matrix factorization failed because the operand is (numerically) singular.
    #[error("singular matrix: {0}")]
    SingularMatrix(String),

    /// The input carries no exploitable structure (e.g. white-noise-only covariance).
    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    /// The steering matrix A(θ) is numerically rank deficient.
    #[error("ill-conditioned manifold: {0}")]
    IllConditionedManifold(String),

    /// An estimator ran but could not produce the requested number of angles.
    #[error("estimation failed: {0}")]
    EstimationFailure(String),

    /// Configuration file or parameter error (CLI layer).
    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, DoaError>;

impl DoaError {
    /// True for errors that indicate a bad request rather than a failed computation.
    pub fn is_usage_error(&self) -> bool {
        matches!(
            self,
            DoaError::InvalidInput(_) | DoaError::Config(_) | DoaError::Io(_)
        )
    }
}
