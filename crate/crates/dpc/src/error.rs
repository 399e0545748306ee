//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Shapes do not compose (layer dimensions, vector lengths).
    #[error("shape mismatch: {0}")]
    Structural(String),

    /// An argument violates a documented precondition.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// A computation produced a non-finite value.
    #[error("numeric failure: {0}")]
    Numeric(String),

    /// Training diverged; carries the epoch where the loss left the finite range.
    #[error("training failed at epoch {epoch}: {detail}")]
    Training { epoch: usize, detail: String },

    /// Malformed input data; `location` names the row/column or byte offset.
    #[error("ingestion error at {location}: {detail}")]
    Ingestion { location: String, detail: String },

    /// A stored artifact could not be parsed.
    #[error("malformed file {path}: {detail}")]
    Format { path: String, detail: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn structural(msg: impl Into<String>) -> Self {
        Error::Structural(msg.into())
    }

    pub fn parameter(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }

    pub fn numeric(msg: impl Into<String>) -> Self {
        Error::Numeric(msg.into())
    }
}
