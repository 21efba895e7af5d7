use thiserror::Error;

/// Errors raised by model construction, fitting, scoring and optimization.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum RegpError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The Gram matrix could not be factorized even at the largest jitter.
    #[error("Gram matrix of size {n} is singular (max relative jitter {max_jitter:e})")]
    SingularGram { n: usize, max_jitter: f64 },

    #[error("model fit failed: {0}")]
    FitFailed(String),

    #[error("EI order q = {0} is not supported (only q = 1 or 2)")]
    UnsupportedOrder(u32),

    #[error("invalid threshold: {0}")]
    InvalidThreshold(String),

    #[error("relaxation selection failed: {0}")]
    SelectionFailed(String),

    #[error("objective evaluation failed: {0}")]
    Objective(String),
}

pub type Result<T, E = RegpError> = std::result::Result<T, E>;
