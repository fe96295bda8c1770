use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Query-text syntax or semantic error; `pos` is a byte offset.
    #[error("parse error at byte {pos}: {msg}")]
    Parse { pos: usize, msg: String },

    /// Data ingestion problems (malformed rows, arity mismatches, io).
    #[error("data error: {0}")]
    Data(String),

    /// Schema disagreement between two instances or query and instance.
    #[error("schema mismatch: {0}")]
    Schema(String),

    /// A resource guard refused to run the computation. Never a silent
    /// truncation: callers either get exact results or this.
    #[error("resource guard exceeded: {0}")]
    Guard(String),

    /// A feature combination with no registered handler.
    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("internal error: {0}")]
    Internal(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Data(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
