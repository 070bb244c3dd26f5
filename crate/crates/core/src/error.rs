use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter fell outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// User-supplied data or configuration failed validation.
    #[error("validation error: {0}")]
    Validation(String),

    #[error("replicates required: {0}")]
    ReplicatesRequired(String),

    /// A conditional precision stayed non positive definite after jitter.
    #[error("numerical failure at iteration {iteration}: {message}")]
    Numerical { iteration: usize, message: String },

    #[error("singular matrix: {0}")]
    Singular(String),

    /// The chain produced a non-finite log posterior.
    #[error("sampler diverged at iteration {iteration} (last valid iteration: {last_valid:?}): {message}")]
    Divergence {
        iteration: usize,
        last_valid: Option<usize>,
        message: String,
    },

    #[error("unknown {kind} '{name}' (available: {available})")]
    UnknownStrategy {
        kind: &'static str,
        name: String,
        available: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn dim(msg: impl Into<String>) -> Self {
        Error::Dimension(msg.into())
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }
}
