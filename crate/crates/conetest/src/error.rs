use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, AppError>;

/// Errors of the command-line layer; numerical errors pass through from the core.
#[derive(Debug, thiserror::Error)]
pub enum AppError {
    #[error(transparent)]
    Core(#[from] conetest_core::Error),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Malformed file content; `line` is 1-based.
    #[error("{}:{line}: {msg}", path.display())]
    Parse { path: PathBuf, line: u64, msg: String },

    #[error("{0}")]
    Usage(String),
}

impl AppError {
    pub fn usage(msg: impl Into<String>) -> Self {
        AppError::Usage(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        AppError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn category(&self) -> &'static str {
        match self {
            AppError::Core(e) => e.category(),
            AppError::Io { .. } => "io",
            AppError::Parse { .. } => "input",
            AppError::Usage(_) => "usage",
        }
    }
}
