use oldroyd_core::Error as CoreError;

use crate::config::ConfigErrors;

/// Failure of one CLI invocation; the variant fixes the exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Config(#[from] ConfigErrors),
    #[error("{0}")]
    Invalid(String),
    #[error("{0}")]
    Runtime(String),
    #[error("{0}")]
    Check(String),
}

impl CliError {
    pub fn code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config(_) | CliError::Invalid(_) => 1,
            CliError::Runtime(_) => 2,
            CliError::Check(_) => 3,
        }
    }

    /// Lines for standard error, each with the `ERROR <code>:` prefix.
    pub fn lines(&self) -> Vec<String> {
        let code = self.code();
        let body: Vec<String> = match self {
            CliError::Config(e) => e.0.iter().map(|i| i.to_string()).collect(),
            other => other.to_string().lines().filter(|l| !l.trim().is_empty()).map(str::to_string).collect(),
        };
        body.into_iter().map(|l| format!("ERROR {code}: {l}")).collect()
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        let msg = e.to_string();
        match e {
            CoreError::InvalidParameter { .. }
            | CoreError::GridMismatch
            | CoreError::NotSquareIntegrable(_)
            | CoreError::UnknownColumn(_)
            | CoreError::Series(_)
            | CoreError::Checkpoint(_) => CliError::Invalid(msg),
            CoreError::Fit(_) => CliError::Check(msg),
            CoreError::NoDecayCharacter { .. }
            | CoreError::QuadratureNonConvergence { .. }
            | CoreError::Cfl { .. }
            | CoreError::NonFinite { .. }
            | CoreError::Io(_) => CliError::Runtime(msg),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
