use std::path::PathBuf;

use hypertrain_core::Error as CoreError;

/// Process exit code for each failure class.
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;
pub const EXIT_IO: i32 = 4;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error at `{key}`: {msg}")]
    Config { key: String, msg: String },
    #[error("numeric failure: {0}")]
    Numeric(CoreError),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: {msg}", path.display())]
    Data { path: PathBuf, msg: String },
}

impl CliError {
    pub fn config(key: impl Into<String>, msg: impl Into<String>) -> Self {
        CliError::Config { key: key.into(), msg: msg.into() }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } => EXIT_CONFIG,
            CliError::Numeric(_) => EXIT_NUMERIC,
            CliError::Io { .. } | CliError::Data { .. } => EXIT_IO,
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        if e.is_numeric() {
            return CliError::Numeric(e);
        }
        let root = match &e {
            CoreError::Step { source, .. } => source.as_ref(),
            other => other,
        };
        let key = match root {
            CoreError::Config { key, .. } => (*key).to_string(),
            CoreError::Shape { op, .. } => (*op).to_string(),
            CoreError::Capability { what, .. } => (*what).to_string(),
            _ => "data".to_string(),
        };
        CliError::Config { key, msg: e.to_string() }
    }
}

pub type CliResult<T> = Result<T, CliError>;
