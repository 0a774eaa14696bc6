//! Crate-wide error type and result alias.

use std::path::PathBuf;

use thiserror::Error;

/// Errors reported by simulator operations.
#[derive(Debug, Error)]
pub enum Error {
    /// A numeric or structural precondition was violated by the caller.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A data file exists but its contents do not match the expected format.
    #[error("format error in {path}: {message}")]
    Format { path: PathBuf, message: String },

    /// A configuration file entry is malformed or inconsistent.
    #[error("config error at line {line}: {message}")]
    Config { line: usize, message: String },

    /// An underlying I/O operation failed.
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub fn format(path: impl Into<PathBuf>, msg: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            message: msg.into(),
        }
    }

    pub fn config(line: usize, msg: impl Into<String>) -> Self {
        Error::Config {
            line,
            message: msg.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
