use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid address {0:?}: missing '@'")]
    InvalidAddress(String),

    #[error("duplicate message id {id:?} at line {line}")]
    DuplicateId { id: String, line: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("category {0} has no {1} training examples")]
    EmptyClass(String, &'static str),

    #[error("hash dimension mismatch: expected {expected} bits, found {found}")]
    HashMismatch { expected: u32, found: u32 },

    #[error("{0}")]
    Undefined(String),

    #[error("feature vector is already normalized")]
    AlreadyNormalized,

    #[error("not enough eligible senders: requested {requested}, found {available}")]
    NotEnoughSenders { requested: usize, available: usize },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }

    pub fn config(message: impl Into<String>) -> Self {
        Error::Config(message.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
