use std::io;

use thiserror::Error;

/// Errors raised anywhere in the pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("unknown sentiment label {0:?}")]
    UnknownLabel(String),

    #[error("duplicate tweet id {0:?}")]
    DuplicateId(String),

    #[error("empty corpus")]
    EmptyCorpus,

    #[error("length mismatch: {what} ({left} vs {right})")]
    LengthMismatch { what: &'static str, left: usize, right: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("index {index} out of range for size {bound}")]
    IndexOutOfRange { index: usize, bound: usize },

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("training diverged at epoch {epoch}, batch {batch}: loss is {loss}")]
    Diverged { epoch: usize, batch: usize, loss: f64 },

    #[error("model file: bad magic bytes")]
    BadMagic,

    #[error("model file: unsupported format version {0}")]
    UnsupportedVersion(u32),

    #[error("model file: checksum mismatch")]
    Checksum,

    #[error("model file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
