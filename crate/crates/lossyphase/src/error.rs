use std::fmt;

use lossyphase_core::Error as CoreError;

/// Failure of a command, carrying its process exit code.
#[derive(Debug)]
pub enum CliError {
    /// Unreadable or malformed input. Exit code 1.
    Input(String),
    /// Input parsed but outside the model's domain. Exit code 2.
    Domain(String),
    /// Broken internal invariant or failed output. Exit code 3.
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 1,
            CliError::Domain(_) => 2,
            CliError::Internal(_) => 3,
        }
    }

    pub fn input(msg: impl Into<String>) -> Self {
        CliError::Input(msg.into())
    }

    pub fn domain(msg: impl Into<String>) -> Self {
        CliError::Domain(msg.into())
    }

    pub fn internal(msg: impl Into<String>) -> Self {
        CliError::Internal(msg.into())
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Input(m) => write!(f, "input error: {m}"),
            CliError::Domain(m) => write!(f, "domain error: {m}"),
            CliError::Internal(m) => write!(f, "internal error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::NotUnitary(_)
            | CoreError::NotNormalized(_)
            | CoreError::UnnormalizedDistribution(_)
            | CoreError::DimensionMismatch { .. } => CliError::Internal(e.to_string()),
            _ => CliError::Domain(e.to_string()),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

pub(crate) fn write_error(path: &std::path::Path, e: impl fmt::Display) -> CliError {
    CliError::Internal(format!("cannot write {}: {e}", path.display()))
}

pub(crate) fn read_error(path: &std::path::Path, e: impl fmt::Display) -> CliError {
    CliError::Input(format!("cannot read {}: {e}", path.display()))
}
