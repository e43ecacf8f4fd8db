use std::path::PathBuf;

use netbound::Error;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] Error),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("{0}")]
    Usage(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(e) => match e {
                Error::Parse(_) | Error::Invalid(_) | Error::NoisyComponent(_) => 2,
                Error::NonConvergence { .. } => 3,
                Error::NegativeSlack { .. } => 4,
                Error::EnumerationCap { .. } | Error::CombinationCap { .. } => 5,
                Error::MissingCandidates { .. } => 6,
                Error::Budget { .. } => 7,
            },
            CliError::Io { .. } | CliError::Usage(_) => 2,
        }
    }
}

pub fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> CliError {
    let path = path.into();
    move |source| CliError::Io { path, source }
}
