use std::path::PathBuf;

use crate::stage::Stage;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    /// A stage's input is missing or was produced under a different config.
    #[error("stage `{stage}`: {message}")]
    Dependency { stage: Stage, message: String },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Core(#[from] topowalk::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Dependency { .. } => 3,
            _ => 1,
        }
    }

    pub(crate) fn dependency(stage: Stage, message: impl Into<String>) -> Self {
        CliError::Dependency {
            stage,
            message: message.into(),
        }
    }
}
