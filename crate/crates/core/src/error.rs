use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid schema: {0}")]
    Schema(String),
    #[error("malformed csv: {0}")]
    Csv(String),
    #[error("non-binary label: column '{column}' has {count} distinct values")]
    NonBinaryLabel { column: String, count: usize },
    #[error("invalid config: {0}")]
    Config(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("length mismatch: {0}")]
    Length(String),
    #[error("parameter layout mismatch")]
    Layout,
    #[error("non-finite {0}")]
    NonFinite(String),
    #[error("rate '{rate}' undefined for group {group}")]
    UndefinedRate { rate: &'static str, group: u32 },
    #[error("group {0} has no rows")]
    EmptyGroup(u32),
    #[error("empty subset: {0}")]
    EmptySubset(String),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

/// Coarse classification used for CLI exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Config,
    Data,
    Numeric,
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Config(_) | Error::Schema(_) | Error::Json(_) => ErrorKind::Config,
            Error::NonFinite(_) => ErrorKind::Numeric,
            _ => ErrorKind::Data,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
