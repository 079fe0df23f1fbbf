//! Handwritten numeral recognition from scanned glyph images.
//!
//! The pipeline: preprocess a grayscale scan into a normalized binary glyph
//! and its skeleton (`imaging`), measure a 17-value geometric feature vector
//! (`features`), classify with one of five Gaussian discriminant functions
//! (`classifier`), optionally fuse several classifiers by majority vote
//! (`combiner`), and evaluate over a labeled directory tree (`harness`).

pub mod classifier;
pub mod combiner;
pub mod error;
pub mod features;
pub mod harness;
pub mod imaging;

pub use error::{Error, Result};
