use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("arithmetic overflow: {0}")]
    Overflow(String),

    #[error("schema error: expected column `{expected}` at position {position}, found {found}")]
    Schema {
        expected: String,
        position: usize,
        found: String,
    },

    #[error("validation error at row {row}: {message}")]
    Validation { row: usize, message: String },

    #[error("parse error at row {row}, column `{column}`: {message}")]
    Parse {
        row: usize,
        column: String,
        message: String,
    },

    #[error("unknown user id {id}; valid ids: {valid:?}")]
    UnknownUser { id: i64, valid: Vec<i64> },

    #[error("unknown class {0}")]
    UnknownClass(i64),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("non-finite value at row {row}, feature {feature}")]
    NonFinite { row: usize, feature: usize },

    #[error("model format error at line {line}: {message}")]
    ModelFormat { line: usize, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn context(self, context: impl Into<String>) -> Self {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }

    /// Validation-class errors are caused by bad inputs or configuration;
    /// everything else is a failure while running.
    pub fn is_validation(&self) -> bool {
        match self {
            Error::InvalidArgument(_)
            | Error::Schema { .. }
            | Error::Validation { .. }
            | Error::Parse { .. }
            | Error::UnknownUser { .. }
            | Error::UnknownClass(_)
            | Error::Csv { .. } => true,
            Error::Io { source, .. } => source.kind() == std::io::ErrorKind::NotFound,
            Error::Context { source, .. } => source.is_validation(),
            _ => false,
        }
    }
}
