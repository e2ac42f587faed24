use thiserror::Error;

/// Errors raised by the geometric core.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("point cloud needs at least 2 points, got {0}")]
    TooFewPoints(usize),
    #[error("sample count must be at least 2, got {0}")]
    TooFewSamples(usize),
    #[error("ambient dimension must be at least 1")]
    ZeroDimension,
    #[error("buffer of length {len} does not hold a {rows}x{cols} matrix")]
    BadShape {
        rows: usize,
        cols: usize,
        len: usize,
    },
    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },
    #[error("all curve derivatives vanish; the shape cannot be normalized")]
    ZeroCurve,
    #[error("dimension mismatch: {left:?} vs {right:?}")]
    DimensionMismatch {
        left: (usize, usize),
        right: (usize, usize),
    },
    #[error("points are antipodal (distance {0}); the log map is undefined")]
    AntipodalPoints(f64),
    #[error("tangent vector is not based at the given point")]
    ForeignTangent,
    #[error("empty input")]
    EmptyInput,
    #[error("k = {k} exceeds the allowed maximum {max}")]
    KTooLarge { k: usize, max: usize },
    #[error("k must be at least 1")]
    ZeroK,
    #[error("filtrations cover {left} and {right} points")]
    SizeMismatch { left: usize, right: usize },
    #[error("protein {index}: structure has {structure} points, embedding has {embedding}")]
    LengthMismatch {
        index: usize,
        structure: usize,
        embedding: usize,
    },
    #[error("at least one random sample is required")]
    NoSamples,
}

pub type Result<T> = core::result::Result<T, Error>;
