use thiserror::Error;

/// Errors raised across encoding, channel simulation, training and decoding.
#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("framing error: {0}")]
    Framing(String),
    #[error("training error: {0}")]
    Training(String),
    #[error("model error: {0}")]
    Model(String),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
