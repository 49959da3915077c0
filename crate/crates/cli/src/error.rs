use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("line {line}: {reason}")]
    MalformedRow { line: u64, reason: String },
    #[error("mixed domain: {0}")]
    MixedDomain(String),
    #[error("no `group` column in header")]
    MissingGroupColumn,
    #[error("no feature columns besides `group`")]
    NoFeatures,
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{}: {err}", path.display())]
    Io { path: PathBuf, err: std::io::Error },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Core(#[from] kmax_core::Error),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, err: std::io::Error) -> Self {
        CliError::Io { path: path.into(), err }
    }
}
