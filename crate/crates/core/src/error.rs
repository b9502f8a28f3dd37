use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SefronError {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{path}: line {line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("data error: {0}")]
    Data(String),

    #[error("class {0} has not been initialized")]
    Uninitialized(usize),

    #[error("class {0} is already initialized")]
    AlreadyInitialized(usize),

    #[error("numeric guard tripped: {0}")]
    Numeric(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl SefronError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        SefronError::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            SefronError::Config(_) | SefronError::InvalidArgument(_) => 1,
            SefronError::Numeric(_) => 3,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, SefronError>;
