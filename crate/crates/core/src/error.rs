use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("non-finite value: {0}")]
    Numeric(String),

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("{0}")]
    Structural(String),

    #[error("no path: {0}")]
    NoPath(String),

    #[error("no route from node {from} to node {to}")]
    NoRoute { from: usize, to: usize },

    /// Training hit a non-finite loss; `checkpoint` holds the state before
    /// the offending batch.
    #[error("training diverged at epoch {epoch}, batch {batch}: {message}")]
    Diverged {
        epoch: u32,
        batch: u64,
        message: String,
        checkpoint: Box<crate::nn::Checkpoint>,
    },

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn parse(line: usize, column: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            column,
            message: message.into(),
        }
    }
}
