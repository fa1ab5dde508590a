use std::path::Path;

use autoeda_core::Error as CoreError;

/// Command failures, grouped by exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Data(String),
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error("numerical failure: {0}")]
    Numeric(String),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            source,
        }
    }

    pub fn data(path: &Path, msg: impl std::fmt::Display) -> Self {
        CliError::Data(format!("{}: {msg}", path.display()))
    }

    /// 0 success, 1 usage, 2 data, 3 numerical failure.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Io { .. } | CliError::Data(_) => 2,
            CliError::Numeric(_) => 3,
            CliError::Core(e) => match e {
                CoreError::NonFinite(_) => 3,
                CoreError::InvalidConfig(_) => 1,
                _ => 2,
            },
        }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
