use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("empty mesh")]
    EmptyMesh,

    #[error("dimension mismatch in {what}: expected {expected}, got {actual}")]
    Dimension {
        what: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid body model: {0}")]
    InvalidBody(String),

    #[error("degenerate rotation: {0}")]
    DegenerateRotation(String),

    #[error("{}:{line}: {msg}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("{}: field `{field}`: {msg}", path.display())]
    Format {
        path: PathBuf,
        field: String,
        msg: String,
    },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn dim(what: &'static str, expected: usize, actual: usize) -> Self {
        Error::Dimension {
            what,
            expected,
            actual,
        }
    }
}
