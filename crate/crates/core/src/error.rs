use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid decomposition: {0}")]
    Decomposition(String),

    #[error("invalid parameter `{key}`: {message}")]
    Parameter { key: String, message: String },

    #[error("solver failure: {0}")]
    Solver(String),

    #[error("dimension mismatch: {0}")]
    Mismatch(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn parameter(key: &str, message: impl Into<String>) -> Self {
        Error::Parameter {
            key: key.to_string(),
            message: message.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for the command line driver.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Solver(_) => 2,
            _ => 1,
        }
    }
}
