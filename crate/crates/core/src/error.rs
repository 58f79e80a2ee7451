use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("validation error in `{field}`: {message}")]
    Validation { field: String, message: String },

    #[error("integrity error: checksum mismatch for {path}")]
    Integrity { path: PathBuf },

    #[error("load error for {path}: {message}")]
    Load { path: PathBuf, message: String },

    #[error("inconsistent predictions: row {row} stores class {stored} but the head argmax is {computed}")]
    InconsistentPredictions {
        row: usize,
        stored: usize,
        computed: usize,
    },

    #[error("parameter error: {0}")]
    Parameter(String),

    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    Dimension {
        context: String,
        expected: usize,
        actual: usize,
    },

    #[error("{method} requires nonnegative embeddings")]
    RequiresNonnegative { method: String },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("CMAW requires a word pool")]
    EmptyWordPool,

    #[error("label bank is empty")]
    EmptyLabelBank,

    #[error("configuration error for prompt type {prompt_type}: {message}")]
    PromptConfig { prompt_type: String, message: String },

    #[error("transport error for setting {setting}: {message}")]
    Transport { setting: String, message: String },

    #[error("statistics error: {0}")]
    Statistics(String),

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn validation(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Validation {
            field: field.into(),
            message: message.into(),
        }
    }

    pub(crate) fn dimension(context: impl Into<String>, expected: usize, actual: usize) -> Self {
        Error::Dimension {
            context: context.into(),
            expected,
            actual,
        }
    }
}
