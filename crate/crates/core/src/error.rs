use std::path::PathBuf;

/// Errors produced by the library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("empty input: {0}")]
    EmptyInput(String),

    /// A measure is mathematically undefined for the given input.
    #[error("undefined: {0}")]
    Undefined(String),

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error on {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Self::InvalidArgument(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io {
            path: path.into(),
            source,
        }
    }

    /// `true` for errors caused by malformed or unusable input data rather
    /// than a bad argument.
    pub fn is_data_error(&self) -> bool {
        matches!(
            self,
            Self::Parse { .. } | Self::EmptyInput(_) | Self::Io { .. } | Self::Csv { .. }
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
