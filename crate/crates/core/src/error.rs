use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid entropy parameter: {0}")]
    InvalidEta(String),

    #[error("invalid MDP: {0}")]
    InvalidMdp(String),

    #[error("invalid environment spec: {0}")]
    InvalidSpec(String),

    #[error("invalid config field `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("value iteration did not converge after {iterations} sweeps (residual {residual:e}, tol {tol:e})")]
    NonConvergence {
        iterations: usize,
        residual: f64,
        tol: f64,
    },

    #[error("trial length mismatch: expected {expected} episodes, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("unknown preset `{0}`")]
    UnknownPreset(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn config(field: &str, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.to_string(),
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
