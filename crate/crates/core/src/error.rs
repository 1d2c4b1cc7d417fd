use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("pair-based method requires an even dimension, got {0}")]
    OddDimension(usize),
    #[error("exponential base must be greater than 1, got {0}")]
    BadBase(f64),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("expected {expected} positional matrices, got {actual}")]
    UnitCountMismatch { expected: usize, actual: usize },
    #[error("matrix is not square ({rows}x{cols})")]
    NonSquare { rows: usize, cols: usize },
    #[error("index {index} out of range for length {len}")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("discriminability needs at least two contexts")]
    SingleContext,
    #[error("normalizer {value:e} at query row {row} is below the floor")]
    ZeroNormalizer { row: usize, value: f64 },
    #[error("{method} does not support {pooling} features")]
    IncompatiblePooling { method: &'static str, pooling: &'static str },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("malformed pianoroll: {0}")]
    Format(String),
    #[error("pianoroll value {0} is not binary")]
    NonBinary(i64),
    #[error("length mismatch: target {target} vs prediction {pred}")]
    LengthMismatch { target: usize, pred: usize },
    #[error("steps_per_quarter {0} is too coarse for 16th-note bins")]
    ResolutionTooCoarse(usize),
    #[error("chord-based context requires chord annotations")]
    MissingAnnotation,
    #[error("chord annotation does not cover step {0}")]
    CoverageGap(usize),
    #[error("key context requires a key annotation")]
    MissingKey,
    #[error("empty input")]
    EmptyInput,
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
