//! Crate-wide error type.

use std::path::PathBuf;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Thresholding failed: every pixel has the same intensity, so no
    /// threshold separates two classes.
    #[error("degenerate image: constant intensity, nothing to threshold")]
    DegenerateImage,

    /// An operation that needs foreground got an image with no ink pixels.
    #[error("blank input: image contains no ink pixels")]
    BlankInput,

    #[error("class {class}: {got} samples, need at least {need} for {kind} covariance")]
    InsufficientData {
        class: usize,
        got: usize,
        need: usize,
        kind: &'static str,
    },

    /// Covariance stayed singular even at the maximum ridge level.
    #[error("degenerate covariance for {scope}: singular even after maximum regularization")]
    DegenerateClass { scope: String },

    #[error("unknown class label {0}")]
    UnknownClass(usize),

    #[error("invalid sample: non-finite value in feature {index}")]
    InvalidSample { index: usize },

    #[error("sample {index}: {source}")]
    Batch {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("dataset structure: {0}")]
    Structure(String),

    #[error("model file {path}: {reason}")]
    Model { path: PathBuf, reason: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Image {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },

    #[error("{0}")]
    InvalidConfig(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn image(path: impl Into<PathBuf>, source: image::ImageError) -> Self {
        Error::Image {
            path: path.into(),
            source,
        }
    }
}
