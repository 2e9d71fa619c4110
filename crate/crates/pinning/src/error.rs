use std::path::PathBuf;

use pinning_core::Error as CoreError;

pub type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] CoreError),

    #[error("{0}")]
    Usage(String),

    #[error("{}:{line}: {message}", .path.display())]
    Input { path: PathBuf, line: usize, message: String },

    #[error("{}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("cannot write output: {0}")]
    Output(String),
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Output(e.to_string())
    }
}

/// Process exit codes.
pub mod exit {
    pub const OK: u8 = 0;
    pub const ARGUMENT: u8 = 2;
    pub const UNSUPPORTED: u8 = 3;
    pub const NUMERIC: u8 = 4;
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(e) => match e {
                CoreError::Argument(_) => exit::ARGUMENT,
                CoreError::UnsupportedSetting { .. }
                | CoreError::UnsupportedTruncation { .. }
                | CoreError::Precondition(_) => exit::UNSUPPORTED,
                CoreError::Numeric { .. } | CoreError::NotFound { .. } => exit::NUMERIC,
            },
            CliError::Usage(_) | CliError::Input { .. } => exit::ARGUMENT,
            CliError::Io { .. } | CliError::Output(_) => exit::NUMERIC,
        }
    }
}
