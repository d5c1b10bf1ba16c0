use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch in {context}: expected {expected}, got {actual}")]
    Shape {
        context: &'static str,
        expected: String,
        actual: String,
    },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("unknown body part {0:?}")]
    UnknownPart(String),
    #[error("joint id {0} is out of range")]
    InvalidJoint(usize),
    #[error("step {step} outside [1, {max}]")]
    StepOutOfRange { step: usize, max: usize },
    #[error("non-finite value in {0}")]
    NonFinite(String),
    #[error("empty dataset: {0}")]
    EmptyDataset(String),
    #[error("malformed data in {path}: {reason}")]
    Data { path: PathBuf, reason: String },
    #[error("configuration error: {0}")]
    Config(String),
    #[error("language model transport failure: {0}")]
    Transport(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn shape(context: &'static str, expected: impl ToString, actual: impl ToString) -> Self {
        Error::Shape {
            context,
            expected: expected.to_string(),
            actual: actual.to_string(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn data(path: impl Into<PathBuf>, reason: impl ToString) -> Self {
        Error::Data {
            path: path.into(),
            reason: reason.to_string(),
        }
    }
}
