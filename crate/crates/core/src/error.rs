use thiserror::Error;

/// Errors produced by mask construction, completion and corruption routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("mask dimensions must be nonzero, got {height}x{width}")]
    EmptyDimensions { height: usize, width: usize },

    #[error("expected {expected} mask elements, got {actual}")]
    BitCount { expected: usize, actual: usize },

    #[error("mask element at index {index} is {value}, expected 0 or 1")]
    NonBinary { index: usize, value: u8 },

    #[error("dimension mismatch: {left:?} vs {right:?}")]
    DimensionMismatch {
        left: (usize, usize),
        right: (usize, usize),
    },

    #[error("candidate of size {size} at ({row}, {col}) does not fit in a {height}x{width} mask")]
    CandidateOutOfRange {
        size: usize,
        row: usize,
        col: usize,
        height: usize,
        width: usize,
    },

    #[error("shape of size {n} at ({row}, {col}) needs {needed_height}x{needed_width} but canvas is {height}x{width}")]
    ShapeDoesNotFit {
        n: usize,
        row: usize,
        col: usize,
        needed_height: usize,
        needed_width: usize,
        height: usize,
        width: usize,
    },

    #[error("distortion threshold must lie in [0, 1), got {0}")]
    InvalidGamma(f64),

    #[error("invalid gamma schedule: {0}")]
    InvalidSchedule(String),

    #[error("invalid size set: {0}")]
    InvalidSizeSet(String),

    #[error("patch size {size} has no fully-contained placement in a {height}x{width} mask")]
    NoCandidate { size: usize, height: usize, width: usize },

    #[error("patch size must be at least 1")]
    ZeroSize,

    #[error("corruption model requires a nonzero ground-truth mask")]
    EmptyGroundTruth,
}

pub type Result<T> = std::result::Result<T, Error>;
