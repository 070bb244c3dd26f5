use thiserror::Error;

pub type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Model(#[from] galqr::Error),

    #[error("invalid input: {0}")]
    Input(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("{failed} of {total} simulation replicates failed; partial results written to {partial}")]
    Partial {
        failed: usize,
        total: usize,
        partial: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl From<toml::de::Error> for CliError {
    fn from(e: toml::de::Error) -> Self {
        CliError::Config(e.to_string())
    }
}

impl CliError {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        CliError::Input(msg.into())
    }

    /// 2 for bad input or configuration, 3 for sampler divergence, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        use galqr::Error as E;
        match self {
            CliError::Input(_) | CliError::Config(_) => 2,
            CliError::Model(e) => match e {
                E::Domain(_)
                | E::Dimension(_)
                | E::Validation(_)
                | E::ReplicatesRequired(_)
                | E::UnknownStrategy { .. } => 2,
                E::Divergence { .. } | E::Numerical { .. } => 3,
                _ => 1,
            },
            _ => 1,
        }
    }
}
