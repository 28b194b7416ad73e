use std::io;
use std::path::PathBuf;

use thiserror::Error;

/// Errors raised while reading, validating or processing corpora.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    /// A malformed or inconsistent line in an input file. `line` is 1-based.
    #[error("{file}:{line}: {message}")]
    Parse {
        file: String,
        line: usize,
        message: String,
    },

    /// Files that must be parallel have different numbers of sentences.
    #[error("line count mismatch: {first} has {first_count} sentences, {second} has {second_count}")]
    LineCount {
        first: String,
        first_count: usize,
        second: String,
        second_count: usize,
    },

    /// Sentence `index` (1-based) of a dependency file is not a valid tree.
    #[error("{file}: sentence {index}: {message}")]
    Tree {
        file: String,
        index: usize,
        message: String,
    },

    #[error("{0}")]
    Invalid(String),

    #[error("configuration: {0}")]
    Config(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn parse(file: impl Into<String>, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            file: file.into(),
            line,
            message: message.into(),
        }
    }

    pub fn invalid(message: impl Into<String>) -> Self {
        Error::Invalid(message.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
