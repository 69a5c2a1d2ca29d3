use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the engine.
///
/// `Argument` covers caller mistakes (bad parameters, mismatched shapes);
/// `Format` covers malformed data, usually read from disk.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("format error: {0}")]
    Format(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }

    pub(crate) fn format(msg: impl Into<String>) -> Self {
        Error::Format(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Prefixes the message with a record id, keeping the variant.
    pub fn in_record(self, record_id: &str) -> Self {
        match self {
            Error::Argument(m) => Error::Argument(format!("record {record_id}: {m}")),
            Error::Format(m) => Error::Format(format!("record {record_id}: {m}")),
            Error::Io { path, source } => Error::Io {
                path,
                source: std::io::Error::new(source.kind(), format!("record {record_id}: {source}")),
            },
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
