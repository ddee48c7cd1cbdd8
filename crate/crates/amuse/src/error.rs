use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum IoError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}: {inner}", path.display())]
    InFile { path: PathBuf, inner: Box<IoError> },
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error("invalid trace: {0}")]
    Trace(String),
    #[error("invalid config: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] amuse_core::error::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl IoError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        IoError::Io { path: path.into(), source }
    }
}

pub type Result<T, E = IoError> = std::result::Result<T, E>;
