use std::path::PathBuf;

use emac_core::marl::MarlError;
use emac_core::EnvError;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("config: {0}")]
    Config(String),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Marl(#[from] MarlError),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error("{0}")]
    Usage(String),
}

impl HarnessError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        HarnessError::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = HarnessError> = std::result::Result<T, E>;
