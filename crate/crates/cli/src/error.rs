use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Core(#[from] mixeig::Error),
    #[error("check failed: {0}")]
    CheckFailed(String),
}

impl CliError {
    /// 1 failed check, 2 numerical failure, 3 bad input or configuration.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::CheckFailed(_) => 1,
            CliError::Core(e) if !e.is_input_error() => 2,
            _ => 3,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Core(mixeig::Error::Io(e))
    }
}
