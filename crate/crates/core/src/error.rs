use num_complex::Complex64 as C64;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid geometry: {0}")]
    Geometry(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("length mismatch: expected {expected}, got {got}")]
    Length { expected: usize, got: usize },

    #[error(
        "collective matrix is singular at δω = {delta_omega} (condition {condition:.3e}); \
         subradiant mode {mode:?}"
    )]
    SingularMatrix { delta_omega: f64, condition: f64, mode: Vec<C64> },

    #[error("step size {dt} exceeds the shortest retardation delay {min_delay}")]
    StepSize { dt: f64, min_delay: f64 },

    #[error("non-finite amplitude at t = {t} (emitter {emitter})")]
    NonFinite { t: f64, emitter: usize },

    #[error("mode spacing {spacing} too coarse for t_end; need at most {required}")]
    Recurrence { spacing: f64, required: f64 },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("could not draw strictly increasing positions after {0} attempts")]
    Resample(usize),

    #[error("invalid config: {0}")]
    Config(String),

    #[error("empty data: {0}")]
    Empty(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Toml(#[from] toml::de::Error),
}
