use thiserror::Error;

/// Failure of a command, with its process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{0}")]
    Runtime(mart_entropy::Error),
    #[error("unsupported: {0}")]
    Unsupported(mart_entropy::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("verification failed: {}", .0.join(", "))]
    VerifyFailed(Vec<String>),
}

impl From<mart_entropy::Error> for CliError {
    fn from(e: mart_entropy::Error) -> Self {
        if e.is_unsupported() {
            CliError::Unsupported(e)
        } else {
            CliError::Runtime(e)
        }
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::VerifyFailed(_) => 1,
            CliError::Config(_) => 2,
            CliError::Runtime(_) | CliError::Io(_) => 3,
            CliError::Unsupported(_) => 4,
        }
    }
}
