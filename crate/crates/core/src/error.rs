use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Every failure the engine can report.
///
/// Variants are grouped so that a front end can map them onto a small set of
/// exit statuses without inspecting messages.
#[derive(Debug, Error)]
pub enum Error {
    #[error("npy format error: {0}")]
    Format(String),
    #[error("unsupported npy layout: {0}")]
    UnsupportedLayout(String),
    #[error("unsupported npy dtype `{0}` (expected `<f4` or `<f8`)")]
    UnsupportedDtype(String),
    #[error("corrupt file: {0}")]
    Corrupt(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("invalid shape: {0}")]
    InvalidShape(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("manifest error in field `{field}`: {reason}")]
    Manifest { field: &'static str, reason: String },
    #[error("index out of range: {0}")]
    Index(String),
    #[error("invalid policy: {0}")]
    Policy(String),
    #[error("empty feature selection for class {class_index} under policy `{policy}`; try a looser policy such as `percentile:50` or `topk:1`")]
    EmptySelection { class_index: usize, policy: String },
    #[error("invalid resample spec: {0}")]
    Spec(String),
    #[error("value out of range: {0}")]
    Range(String),
    #[error("no input files in {0}")]
    EmptyInput(PathBuf),
    #[error("image error in {path}: {reason}")]
    Image { path: PathBuf, reason: String },
    #[error("gif encoding error: {0}")]
    Gif(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn manifest(field: &'static str, reason: impl Into<String>) -> Self {
        Error::Manifest {
            field,
            reason: reason.into(),
        }
    }
}
