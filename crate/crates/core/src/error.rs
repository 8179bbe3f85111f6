use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("state error: {0}")]
    State(String),

    #[error("format error: {0}")]
    Format(String),

    #[error("truncated payload in {path}: expected {expected} bytes, found {actual}")]
    Length {
        path: String,
        expected: usize,
        actual: usize,
    },

    #[error("validation error: {0}")]
    Validation(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("file not found: {0}")]
    NotFound(PathBuf),

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        let path = path.into();
        if source.kind() == std::io::ErrorKind::NotFound {
            Error::NotFound(path)
        } else {
            Error::Io { path, source }
        }
    }

    /// Short machine-readable tag used by the CLI `error_code:` prefix.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Dimension(_) => "dimension_mismatch",
            Error::InvalidInput(_) => "invalid_input",
            Error::Domain(_) => "domain_error",
            Error::State(_) => "state_error",
            Error::Format(_) => "format_error",
            Error::Length { .. } => "truncated_payload",
            Error::Validation(_) => "validation_error",
            Error::Numerical(_) => "numerical_failure",
            Error::NotFound(_) => "file_not_found",
            Error::Io { .. } => "io_error",
            Error::Json(_) => "json_error",
        }
    }

    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::Numerical(_))
    }
}
