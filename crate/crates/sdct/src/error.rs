use std::io;
use thiserror::Error;

/// Errors produced by the transform, optimizer and codec layers.
#[derive(Debug, Error)]
pub enum SdctError {
    #[error("invalid block size {0}: must be at least 2")]
    InvalidSize(usize),

    #[error("unsupported block size {0}: expected one of 8, 16, 32")]
    UnsupportedBlockSize(usize),

    #[error("angle vector has {got} entries, block size {n} needs {want}")]
    AngleLengthMismatch { n: usize, want: usize, got: usize },

    #[error("dimension mismatch: {0}")]
    SizeMismatch(String),

    #[error("no integer transform table for n={0}")]
    MissingIntegerTable(usize),

    #[error("integer transform table is malformed: {0}")]
    BadIntegerTable(String),

    #[error("bad magic bytes: not an SDC1 bitstream")]
    BadMagic,

    #[error("bitstream truncated: {0}")]
    Truncated(String),

    #[error("malformed subband tree: {0}")]
    MalformedTree(String),

    #[error("malformed bitstream: {0}")]
    MalformedStream(String),

    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("image format error: {0}")]
    ImageFormat(String),

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("rate-distortion curve error: {0}")]
    CurveError(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T> = std::result::Result<T, SdctError>;
