use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A caller-supplied value violates a documented precondition.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Collinear or coincident points; no unique rigid fit exists.
    #[error("rank-deficient point set: {0}")]
    RankDeficient(String),

    /// The transform carries no recoverable joint (identity motion).
    #[error("degenerate motion: {0}")]
    DegenerateMotion(String),

    /// A file failed to parse or validate. `location` is a line number or byte offset.
    #[error("{path}: {location}: {field}: {message}")]
    Format {
        path: String,
        location: String,
        field: String,
        message: String,
    },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("unknown scene '{name}'; available scenes: {}", catalog.join(", "))]
    UnknownScene { name: String, catalog: Vec<String> },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn format(
        path: impl Into<String>,
        location: impl Into<String>,
        field: impl Into<String>,
        message: impl Into<String>,
    ) -> Self {
        Error::Format {
            path: path.into(),
            location: location.into(),
            field: field.into(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
