//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum WisError {
    #[error("empty corpus")]
    EmptyCorpus,

    #[error("id out of range: {id} (vocabulary size {size})")]
    IdOutOfRange { id: u32, size: usize },

    #[error("nothing to score: sequence has no generated tokens")]
    NothingToScore,

    #[error("text too short to detect on: {0} token(s), need at least 2")]
    TextTooShort(usize),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("malformed input at line {line}: {msg}")]
    Malformed { line: usize, msg: String },

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl WisError {
    pub fn config(msg: impl Into<String>) -> Self {
        WisError::Config(msg.into())
    }

    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        WisError::Io {
            path: path.into(),
            source,
        }
    }
}
