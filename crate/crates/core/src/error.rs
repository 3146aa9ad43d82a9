use thiserror::Error;

/// Every fallible operation in the crate reports through this type.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum GleError {
    #[error("invalid parameter `{path}`: {reason}")]
    Domain { path: String, reason: String },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("non-finite state: {0}")]
    NonFinite(String),

    #[error("resource budget exceeded: {requested} > {limit} ({what})")]
    Budget {
        what: String,
        requested: u64,
        limit: u64,
    },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("solver did not converge: {solver} after {iterations} iterations, residual {residual:e}")]
    NoConvergence {
        solver: String,
        iterations: usize,
        residual: f64,
    },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("estimator failure: {0}")]
    Estimator(String),

    #[error("config error at `{path}`: {reason}")]
    Config { path: String, reason: String },

    #[error("io error: {0}")]
    Io(String),
}

impl GleError {
    pub fn domain(path: impl Into<String>, reason: impl Into<String>) -> Self {
        GleError::Domain {
            path: path.into(),
            reason: reason.into(),
        }
    }
}

impl From<std::io::Error> for GleError {
    fn from(e: std::io::Error) -> Self {
        GleError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, GleError>;
