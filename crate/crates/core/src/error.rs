use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = HdcError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum HdcError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    #[error("{0}")]
    Domain(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("format error in {field} at byte offset {offset}: {message}")]
    Format {
        field: &'static str,
        offset: u64,
        message: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl HdcError {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        HdcError::Domain(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        HdcError::Config(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        HdcError::Io {
            path: path.into(),
            source,
        }
    }
}

pub(crate) fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(HdcError::Dimension { expected, found })
    }
}
