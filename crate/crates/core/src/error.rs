//! Crate-wide error type.

use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("bad magic in {path}: expected {expected:?}")]
    BadMagic { path: PathBuf, expected: &'static str },

    #[error("unsupported format version {version} in {path}")]
    BadVersion { path: PathBuf, version: u16 },

    #[error("truncated payload in {path}: need {needed} bytes, found {found}")]
    Truncated {
        path: PathBuf,
        needed: usize,
        found: usize,
    },

    #[error("malformed {what} in {path}: {detail}")]
    Malformed {
        what: &'static str,
        path: PathBuf,
        detail: String,
    },

    #[error("frame dimension mismatch: {0}x{1} vs {2}x{3}")]
    DimensionMismatch(u32, u32, u32, u32),

    #[error("invalid dimensions {0}x{1}")]
    InvalidDimensions(u32, u32),

    #[error("empty sequence")]
    EmptySequence,

    #[error("sequence too short: {got} frames, need at least {need}")]
    SequenceTooShort { got: usize, need: usize },

    #[error("degenerate input for threshold statistics: profile length {len} < {need}")]
    DegenerateInput { len: usize, need: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("intensity {0} outside [0, 255]")]
    IntensityOutOfRange(f64),

    #[error("empty annotation set")]
    EmptyAnnotations,

    #[error("empty ground truth for sequence {0}")]
    EmptyGroundTruth(String),

    #[error("interval {start}:{end} exceeds horizon {horizon}")]
    IntervalBeyondHorizon { start: u32, end: u32, horizon: u32 },

    #[error("overlapping ground-truth intervals in sequence {0}")]
    OverlappingGroundTruth(String),

    #[error("annotation parse error at {path}:{line}: {detail}")]
    AnnotationParse {
        path: PathBuf,
        line: usize,
        detail: String,
    },

    #[error("empty model")]
    EmptyModel,

    #[error("empty training set")]
    EmptyTrainingSet,

    #[error("model file {path}: feature length {got} does not match 3*side^2 = {expected}")]
    FeatureLengthMismatch {
        path: PathBuf,
        got: usize,
        expected: usize,
    },

    #[error("image encode/decode failed for {path}: {source}")]
    Image {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
