use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the encoding library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("degenerate MPM boundary: the two means are equal ({mu})")]
    DegenerateBoundary { mu: f64 },

    #[error("numeric failure: {reason} (achieved error estimate {estimate:e})")]
    NumericFailure { reason: String, estimate: f64 },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("training degenerate: {0}")]
    TrainingDegenerate(String),

    #[error("internal consistency error: {0}")]
    Internal(String),

    #[error("format error at byte offset {offset}: {reason}")]
    Format { offset: u64, reason: String },

    #[error("validation error: {0}")]
    Validation(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    InFile {
        path: PathBuf,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub(crate) fn in_file(self, path: impl Into<PathBuf>) -> Self {
        match self {
            e @ (Error::Io { .. } | Error::InFile { .. }) => e,
            other => Error::InFile { path: path.into(), source: Box::new(other) },
        }
    }

    /// The innermost error, with file context stripped.
    pub fn root(&self) -> &Error {
        match self {
            Error::InFile { source, .. } => source.root(),
            other => other,
        }
    }

    /// Process exit code used by the `d3` command line tool.
    ///
    /// 3 covers data and format problems, 4 numeric failures; argument
    /// errors surfacing from the library are also reported as data errors
    /// because usage errors are caught before any library call.
    pub fn exit_code(&self) -> i32 {
        match self.root() {
            Error::NumericFailure { .. } | Error::Internal(_) | Error::TrainingDegenerate(_) => 4,
            _ => 3,
        }
    }
}
