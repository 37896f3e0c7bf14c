use std::io;
use std::path::{Path, PathBuf};

#[derive(Debug, thiserror::Error)]
pub enum KsprError {
    #[error(transparent)]
    Core(#[from] kspr_core::Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("dataset format: {0}")]
    Format(String),
    #[error("{0} exists; pass --force to overwrite")]
    Exists(PathBuf),
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl KsprError {
    pub fn io(path: &Path, source: io::Error) -> Self {
        Self::Io { path: path.to_path_buf(), source }
    }
}

pub type Result<T, E = KsprError> = std::result::Result<T, E>;
