use std::io;
use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum IvusError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("short read")]
    ShortRead,
    #[error("unsupported PGM variant")]
    UnsupportedVariant,
    #[error("malformed header: {0}")]
    MalformedHeader(&'static str),
    #[error("maxval {0} is not supported, expected 255")]
    Maxval(u32),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] erel_core::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl IvusError {
    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        IvusError::Io { path: path.into(), source }
    }

    /// Stable identifier for error records.
    pub fn code(&self) -> &'static str {
        match self {
            IvusError::Io { .. } => "io",
            IvusError::ShortRead => "short_read",
            IvusError::UnsupportedVariant => "unsupported_variant",
            IvusError::MalformedHeader(_) => "malformed_header",
            IvusError::Maxval(_) => "unsupported_maxval",
            IvusError::Parse { .. } => "parse",
            IvusError::Config(_) => "config",
            IvusError::Core(e) => e.code(),
            IvusError::Json(_) => "json",
            IvusError::Csv(_) => "csv",
        }
    }

    /// Whether the error stems from user configuration rather than data.
    pub fn is_config(&self) -> bool {
        matches!(self, IvusError::Config(_) | IvusError::Core(erel_core::Error::InvalidParameter(_)) | IvusError::Core(erel_core::Error::InvalidPhantom(_)))
    }
}

pub type Result<T> = std::result::Result<T, IvusError>;
