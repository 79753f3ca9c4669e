use thiserror::Error;

/// Every failure the library can report.
///
/// The CLI maps these onto process exit codes via [`BclError::exit_code`].
#[derive(Debug, Error)]
pub enum BclError {
    #[error("shape error: {0}")]
    Shape(String),

    #[error("domain error: {0}")]
    Domain(String),

    /// Invalid configuration. `path` names the offending field
    /// (e.g. `trainer.dqn.gamma`) when one is known.
    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("protocol error: {0}")]
    Protocol(String),

    #[error("integrity error: {0}")]
    Integrity(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl BclError {
    pub fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        BclError::Config {
            path: path.into(),
            message: message.into(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            BclError::Config { .. } | BclError::Json(_) => 2,
            BclError::Numeric(_) => 3,
            BclError::Integrity(_) => 4,
            _ => 1,
        }
    }
}

pub type Result<T, E = BclError> = std::result::Result<T, E>;
