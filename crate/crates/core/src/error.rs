//! Error type shared across the crate.

use std::fmt;
use std::io;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// All failure modes surfaced by the toolkit.
#[derive(Debug)]
pub enum Error {
    /// Unrecognizable character sequence at the given byte offset.
    Lex { offset: usize, message: String },
    /// Source is outside the supported grammar subset.
    Parse { offset: usize, message: String },
    /// A context was requested at a stream index that is not a local-name occurrence.
    Occurrence { index: usize },
    /// A usage summary was requested for a name with zero occurrences.
    UnknownName { name: String },
    /// A corpus-level operation received no usable data.
    EmptyCorpus,
    /// Tensor or vector dimensions do not match.
    Shape(String),
    /// Gradients diverged to non-finite values during training.
    NonFiniteGradient,
    /// A ranked prediction list has been fully consumed.
    Exhausted,
    /// Model container is malformed or internally inconsistent.
    Model(String),
    /// A persisted model does not match its recorded digests or hyperparameters.
    ModelMismatch(String),
    /// Ground-truth and predicted maps cover different binding sets.
    MapMismatch(String),
    /// Bad configuration file or option value.
    Config(String),
    Io(io::Error),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Lex { offset, message } => write!(f, "lex error at byte {offset}: {message}"),
            Error::Parse { offset, message } => {
                write!(f, "parse error at byte {offset}: {message}")
            }
            Error::Occurrence { index } => {
                write!(f, "token at index {index} is not a local-name occurrence")
            }
            Error::UnknownName { name } => write!(f, "name {name} has no occurrences"),
            Error::EmptyCorpus => write!(f, "corpus is empty"),
            Error::Shape(msg) => write!(f, "shape mismatch: {msg}"),
            Error::NonFiniteGradient => write!(f, "non-finite gradient: training diverged"),
            Error::Exhausted => write!(f, "ranked predictions exhausted"),
            Error::Model(msg) => write!(f, "invalid model: {msg}"),
            Error::ModelMismatch(msg) => write!(f, "model mismatch: {msg}"),
            Error::MapMismatch(msg) => write!(f, "map mismatch: {msg}"),
            Error::Config(msg) => write!(f, "config error: {msg}"),
            Error::Io(e) => write!(f, "io error: {e}"),
        }
    }
}

impl std::error::Error for Error {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            Error::Io(e) => Some(e),
            _ => None,
        }
    }
}

impl From<io::Error> for Error {
    fn from(e: io::Error) -> Self {
        Error::Io(e)
    }
}

impl Error {
    /// True for errors caused by a bad or inconsistent model artifact, as
    /// opposed to bad input data.
    pub fn is_model_error(&self) -> bool {
        matches!(
            self,
            Error::Shape(_) | Error::NonFiniteGradient | Error::Model(_) | Error::ModelMismatch(_)
        )
    }
}
