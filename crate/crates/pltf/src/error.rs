use std::io;
use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },
    #[error("{path}: {message}")]
    Format { path: String, message: String },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("AUC is undefined: {0}")]
    UndefinedMetric(String),
    #[error("degenerate split: {0}")]
    DegenerateSplit(String),
    #[error(transparent)]
    Model(#[from] pltf_core::Error),
    #[error("internal error: {0}")]
    Internal(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(path: impl AsRef<std::path::Path>, message: impl Into<String>) -> Self {
        Error::Format {
            path: path.as_ref().display().to_string(),
            message: message.into(),
        }
    }

    /// Process exit status: 1 for bad input or usage, 2 for numerical
    /// failure, 3 for a broken internal invariant.
    pub fn exit_code(&self) -> u8 {
        match self {
            Error::Model(e) if e.is_numerical() => 2,
            Error::Internal(_) => 3,
            _ => 1,
        }
    }
}
