use thiserror::Error;

/// Errors produced anywhere in the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// A tensor dimension does not match what the operation requires.
    #[error("shape mismatch in {op}: {detail}")]
    Shape { op: &'static str, detail: String },

    /// Convolution geometry produces a non-positive output size or is
    /// otherwise inconsistent (e.g. channels not divisible by groups).
    #[error("invalid geometry: {0}")]
    Geometry(String),

    /// A channel/feature partition does not sum to the expected width.
    #[error("invalid partition: {0}")]
    Partition(String),

    /// Backward called before forward, or similar lifecycle misuse.
    #[error("state error: {0}")]
    State(String),

    /// A configuration value is out of its legal range.
    #[error("invalid config: {0}")]
    Config(String),

    /// Hybrid unit selection could not tile the requested width.
    #[error("hybrid policy error: {0}")]
    Policy(String),

    /// A quantity that must be strictly positive was not.
    #[error("domain error: {0}")]
    Domain(String),

    /// A dataset file is malformed (bad magic, truncation, size mismatch).
    #[error("dataset format error in {path}: {detail}")]
    Format { path: String, detail: String },

    /// Training produced a non-finite loss; `layer` names the first layer
    /// whose activations went non-finite.
    #[error("non-finite loss at epoch {epoch}; first non-finite activation in layer '{layer}'")]
    NonFinite { epoch: usize, layer: String },

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
