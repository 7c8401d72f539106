use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("duplicate trajectory id `{0}`")]
    DuplicateId(String),

    #[error("trajectory `{id}`: {message}")]
    InvalidTrajectory { id: String, message: String },

    #[error("trajectory too short to window (length {0}, need at least 3)")]
    TooShortToWindow(usize),

    #[error("trajectory too short: length {len}, need at least {min}")]
    TooShort { len: usize, min: usize },

    #[error("{0} is not symmetric positive definite")]
    NotSpd(&'static str),

    #[error("numerical failure at padded index {index}: {message}")]
    Numerical { index: usize, message: String },

    #[error("degenerate responsibilities")]
    DegenerateResponsibilities,

    #[error("EM iteration {iteration}: {source}")]
    Iteration {
        iteration: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("schema error in field `{field}`: {message}")]
    Schema { field: String, message: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn schema(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Schema {
            field: field.into(),
            message: message.into(),
        }
    }
}
