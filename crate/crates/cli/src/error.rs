use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("design failed verification: {0}")]
    DesignFailed(String),
    #[error("verification failed: {0}")]
    VerifyFailed(String),
    #[error(transparent)]
    Internal(#[from] anyhow::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Internal(_) => 1,
            CliError::Input(_) => 2,
            CliError::DesignFailed(_) => 3,
            CliError::VerifyFailed(_) => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
