use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = PrismError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum PrismError {
    /// Invalid parameters or incompatible shapes in a configuration.
    #[error("configuration error: {0}")]
    Config(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    /// API misuse, e.g. differentiating a non-scalar.
    #[error("usage error: {0}")]
    Usage(String),

    #[error("non-finite value at tape node {node}: {context}")]
    Numeric { node: usize, context: String },

    #[error("training diverged at epoch {epoch}, batch {batch}: loss is {loss}")]
    Diverged { epoch: usize, batch: usize, loss: f64 },

    #[error("internal error: {0}")]
    Internal(String),

    #[error("{path}: {message}")]
    Data { path: PathBuf, message: String },

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl PrismError {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        PrismError::Config(msg.into())
    }

    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        PrismError::Shape(msg.into())
    }
}
