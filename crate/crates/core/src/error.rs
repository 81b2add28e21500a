use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed input: {0}")]
    MalformedInput(String),

    #[error("dimension mismatch: expected {expected:?}, got {got:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        got: (usize, usize),
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("metric undefined: {0}")]
    UndefinedMetric(String),

    #[error("degenerate histogram: image has fewer than two distinct levels")]
    DegenerateHistogram,

    #[error("degenerate least-squares fit: dark frame is zero over all regions")]
    DegenerateFit,

    #[error("illumination shift moves the sub-aperture outside the spectrum (offset {offset:?}, crop {crop:?}, grid {grid:?})")]
    ShiftOutOfRange {
        offset: (i64, i64),
        crop: (usize, usize),
        grid: (usize, usize),
    },

    #[error("pupil radius {radius:.4} exceeds the grid Nyquist extent {nyquist:.4} (cycles/um)")]
    PupilTooLarge { radius: f64, nyquist: f64 },

    #[error("reconstruction diverged at iteration {iteration}")]
    Diverged { iteration: usize },

    #[error("{failed} of {total} images failed preprocessing")]
    TooManyFailures { failed: usize, total: usize },

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}
