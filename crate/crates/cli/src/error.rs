use stratalloc::AllocError;

/// Errors surfaced by the command-line front end, each mapped to an exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// The certificate check failed.
    #[error("verification failed: {0}")]
    Verification(String),
    /// Malformed input files or arguments.
    #[error("{0}")]
    Input(String),
    /// `n` exceeds the total of the bounds.
    #[error("{0}")]
    Infeasible(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Verification(_) => 1,
            CliError::Input(_) => 2,
            CliError::Infeasible(_) => 3,
        }
    }
}

impl From<AllocError> for CliError {
    fn from(e: AllocError) -> Self {
        match e {
            AllocError::Infeasible { .. } => CliError::Infeasible(e.to_string()),
            other => CliError::Input(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Input(e.to_string())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
