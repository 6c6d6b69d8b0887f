//! Crate-wide error type.

use std::path::PathBuf;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// An operation received an empty input it cannot work with.
    #[error("empty input")]
    EmptyInput,

    /// A value or configuration field failed validation.
    #[error("invalid {what}: {reason}")]
    Invalid { what: &'static str, reason: String },

    /// Two grids or vectors that must share a shape do not.
    #[error("dimension mismatch: {0}")]
    DimMismatch(String),

    /// A detection was asked for its offsets but carries none.
    #[error("detection has no offsets")]
    MissingOffsets,

    /// Tracker stepping requires strictly increasing frame indices.
    #[error("frame index {got} is not greater than previous frame {prev}")]
    NonMonotonicFrame { prev: usize, got: usize },

    /// Filesystem failure, annotated with the path involved.
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// A file exists but its contents violate the expected format.
    #[error("{path}: {reason}")]
    Format { path: PathBuf, reason: String },

    /// Evaluation found ground-truth sequences without predictions.
    #[error("missing predictions for sequences: {}", .0.join(", "))]
    MissingSequences(Vec<String>),

    /// Image encoding/decoding failure.
    #[error("{path}: {source}")]
    Image {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },
}

impl Error {
    pub fn invalid(what: &'static str, reason: impl Into<String>) -> Self {
        Error::Invalid {
            what,
            reason: reason.into(),
        }
    }

    pub fn format(path: impl Into<PathBuf>, reason: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            reason: reason.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by bad input values rather than I/O failures.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::EmptyInput
                | Error::Invalid { .. }
                | Error::DimMismatch(_)
                | Error::MissingOffsets
                | Error::NonMonotonicFrame { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
