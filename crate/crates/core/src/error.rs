use thiserror::Error;

/// Errors produced by model construction and the estimators.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum LstdError {
    #[error("invalid MRP: {0}")]
    InvalidMrp(String),

    #[error("invalid feature map: {0}")]
    InvalidFeatures(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The feature Gram matrix is numerically singular (features are not
    /// independent on the visited states).
    #[error("singular Gram matrix (condition number {condition_number:.3e})")]
    SingularGram { condition_number: f64 },

    #[error("singular cross matrix (condition number {condition_number:.3e})")]
    SingularCross { condition_number: f64 },

    /// The estimator's linear system is numerically singular; the
    /// pseudo-inverse estimator handles this case.
    #[error("singular system (condition number {condition_number:.3e}); retry with lstd_pinv")]
    SingularSystem { condition_number: f64 },

    #[error("trajectory carries no second-sample features")]
    MissingAltSample,

    #[error("no convergence after {iterations} iterations (residual {residual:.3e})")]
    MaxItersExceeded { iterations: usize, residual: f64 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("malformed document: {0}")]
    Document(String),
}

pub type Result<T> = std::result::Result<T, LstdError>;
