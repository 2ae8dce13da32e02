use std::path::PathBuf;
use std::process::ExitCode;

use bessel_exit::Error;

/// Everything that can end a command early, with its process exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error(transparent)]
    Library(#[from] Error),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("validation failed: {0}")]
    ValidationFailed(String),

    #[error("simulation anomaly: {0}")]
    Anomaly(String),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn code(&self) -> u8 {
        match self {
            CliError::ValidationFailed(_) => 1,
            CliError::Usage(_) | CliError::Io { .. } => 2,
            CliError::Library(e) => match e {
                Error::Domain(_) | Error::Parse(_) => 3,
                Error::Truncation { .. } | Error::NoConvergence(_) | Error::Overflow(_) => 4,
                Error::Timeout { .. } | Error::InsufficientSamples { .. } => 5,
            },
            CliError::Anomaly(_) => 5,
        }
    }
}

impl From<CliError> for ExitCode {
    fn from(e: CliError) -> Self {
        ExitCode::from(e.code())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn codes() {
        assert_eq!(CliError::Library(Error::Domain("x".into())).code(), 3);
        assert_eq!(
            CliError::Library(Error::Truncation {
                terms: 1,
                tail: 1.0
            })
            .code(),
            4
        );
        assert_eq!(CliError::Usage("x".into()).code(), 2);
        assert_eq!(CliError::ValidationFailed("x".into()).code(), 1);
        assert_eq!(CliError::Anomaly("x".into()).code(), 5);
    }
}
