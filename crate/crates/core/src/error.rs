use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Coarse error categories, used by the CLI to pick exit codes
/// (2 = usage/config, 3 = data, 4 = numerical).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Config,
    Data,
    Numerical,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed dataset file {path}: {reason}")]
    MalformedDataset { path: PathBuf, reason: String },

    #[error("corrupt record {index} in {path}: {reason}")]
    CorruptRecord {
        path: PathBuf,
        index: usize,
        reason: String,
    },

    #[error("format error in {path}: {reason}")]
    FormatError { path: PathBuf, reason: String },

    #[error("inconsistent dataset pair: {reason}")]
    InconsistentPair { reason: String },

    #[error("empty class directory {path}")]
    EmptyClassDir { path: PathBuf },

    #[error("dataset not found: {path}")]
    DatasetNotFound { path: PathBuf },

    #[error("dataset is empty{}", if context.is_empty() { String::new() } else { format!(" ({context})") })]
    EmptyDataset { context: String },

    #[error("shape mismatch in {context}: expected {expected}, got {actual}")]
    ShapeMismatch {
        context: &'static str,
        expected: String,
        actual: String,
    },

    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("matrix is not symmetric (max deviation {deviation:.3e})")]
    NotSymmetric { deviation: f64 },

    #[error("numerical failure in {context}: {reason}")]
    NumericalFailure {
        context: &'static str,
        reason: String,
    },

    #[error("{stage} stage failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub fn stage(stage: &'static str) -> impl FnOnce(Error) -> Error {
        move |source| Error::Stage {
            stage,
            source: Box::new(source),
        }
    }

    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::MalformedDataset { .. }
            | Error::CorruptRecord { .. }
            | Error::FormatError { .. }
            | Error::InconsistentPair { .. }
            | Error::EmptyClassDir { .. }
            | Error::EmptyDataset { .. }
            | Error::ShapeMismatch { .. }
            | Error::Io { .. } => ErrorKind::Data,
            Error::DatasetNotFound { .. } | Error::InvalidParameter { .. } => ErrorKind::Config,
            Error::NotSymmetric { .. } | Error::NumericalFailure { .. } => ErrorKind::Numerical,
            Error::Stage { source, .. } => source.kind(),
        }
    }
}
