use std::path::{Path, PathBuf};

use crate::stages::Stage;

#[derive(Debug, thiserror::Error)]
pub enum ServiceError {
    #[error(transparent)]
    Core(#[from] corrobe_core::Error),

    #[error("no session in {0}; run `corrobe init` or `corrobe synth` first")]
    NoSession(PathBuf),

    #[error("session configuration: {0}")]
    Config(String),

    #[error("stage `{}` has not been run for {key}; run `corrobe {}` first", stage.command(), stage.command())]
    MissingStage { stage: Stage, key: String },

    #[error("not found: {0}")]
    NotFound(String),

    #[error("bad request: {0}")]
    BadRequest(String),

    #[error("I/O error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = ServiceError> = std::result::Result<T, E>;

impl ServiceError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        ServiceError::Io {
            path: path.to_owned(),
            source,
        }
    }

    pub fn missing(stage: Stage, key: impl Into<String>) -> Self {
        ServiceError::MissingStage { stage, key: key.into() }
    }
}
