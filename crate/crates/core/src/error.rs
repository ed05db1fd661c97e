use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{source_name}: malformed XML at byte {offset}: {message}")]
    Xml {
        source_name: String,
        offset: u64,
        message: String,
    },

    #[error("{source_name}: invalid document at byte {offset}: {message}")]
    Format {
        source_name: String,
        offset: u64,
        message: String,
    },

    #[error("duplicate page id {id} (in {first} and {second})")]
    DuplicatePage {
        id: u32,
        first: String,
        second: String,
    },

    #[error("duplicate normalized title {title:?} for pages {first} and {second}")]
    DuplicateTitle {
        title: String,
        first: u32,
        second: u32,
    },

    #[error("conflicting definitions for category {id}: {first:?} vs {second:?}")]
    DuplicateCategory {
        id: u32,
        first: String,
        second: String,
    },

    #[error("{path}: {message}")]
    Store { path: PathBuf, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{source_name}:{line}: {message}")]
    Line {
        source_name: String,
        line: usize,
        message: String,
    },

    #[error("invalid parameters: {0}")]
    Params(String),

    #[error("run contains unknown topic {0:?}")]
    UnknownTopic(String),

    #[error("index does not match corpus: {0}")]
    IndexMismatch(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
