use lstd_core::LstdError;
use thiserror::Error;

/// Failures that map to a process exit code.
#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config error: {0}")]
    Config(String),

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("{failed} of {total} asserted checks failed")]
    ChecksFailed { failed: usize, total: usize },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl HarnessError {
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::ChecksFailed { .. } => 1,
            HarnessError::Config(_) | HarnessError::Io(_) => 2,
            HarnessError::Numeric(_) => 3,
        }
    }

    /// Malformed inputs are config errors; everything else the library
    /// reports happened while computing.
    pub fn from_core(e: LstdError) -> Self {
        match e {
            LstdError::InvalidMrp(_)
            | LstdError::InvalidFeatures(_)
            | LstdError::InvalidArgument(_)
            | LstdError::Unsupported(_)
            | LstdError::Document(_) => HarnessError::Config(e.to_string()),
            _ => HarnessError::Numeric(e.to_string()),
        }
    }
}

pub type Result<T> = std::result::Result<T, HarnessError>;
