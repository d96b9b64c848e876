use thiserror::Error;

#[derive(Debug, Error)]
pub enum NetError {
    #[error("shape mismatch in {context}: expected {expected}, got {actual}")]
    ShapeMismatch {
        context: String,
        expected: String,
        actual: String,
    },
    #[error("tensor data length {len} does not match shape {shape:?} (product {product})")]
    BadTensor {
        len: usize,
        shape: Vec<usize>,
        product: usize,
    },
    #[error("empty {0}")]
    Empty(String),
    #[error("training diverged: non-finite loss at epoch {epoch}, batch {batch}")]
    Diverged { epoch: usize, batch: usize },
    #[error("unknown parameter group '{0}'")]
    UnknownGroup(String),
    #[error("mask for group '{group}' must be binary, found entry {value}")]
    NonBinaryMask { group: String, value: f64 },
    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, NetError>;
