use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Coarse classification used by the CLI to pick an exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Usage,
    Data,
    Internal,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("line {line}: {reason}")]
    Record { line: usize, reason: String },

    #[error("words present in both positive and negative lists: {}", .0.join(", "))]
    LexiconConflict(Vec<String>),

    #[error("tagger model: {0}")]
    TaggerModel(String),

    #[error("embedding file: {0}")]
    EmbeddingFormat(String),

    #[error("model file: {0}")]
    ModelFormat(String),

    #[error("empty vocabulary: no word reaches min_count={min_count}")]
    EmptyVocabulary { min_count: usize },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("non-finite value in feature {index}")]
    NonFinite { index: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid config `{key}`: {reason}")]
    Config { key: String, reason: String },

    #[error("domain `{domain}` has {count} reviews, fewer than k={k} folds")]
    TooFewReviews { domain: String, count: usize, k: usize },

    #[error("domain {domain}, fold {fold}: {source}")]
    Cell {
        domain: String,
        fold: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("{0}")]
    Internal(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn config(key: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            reason: reason.into(),
        }
    }

    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Config { .. } => ErrorKind::Usage,
            Error::Internal(_) => ErrorKind::Internal,
            Error::Cell { source, .. } => source.kind(),
            _ => ErrorKind::Data,
        }
    }
}
