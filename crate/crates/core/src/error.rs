use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("non-finite value in {what} at index {index}")]
    NonFinite { what: &'static str, index: usize },

    #[error("invalid medium: {0}")]
    InvalidMedium(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("time step {dt} violates the CFL bound {bound}")]
    CflViolation { dt: f64, bound: f64 },

    #[error("NaN detected at step {step}")]
    NanDetected { step: usize },

    #[error("state is not normalized: norm = {norm}")]
    NotNormalized { norm: f64 },

    #[error("state is not transverse: longitudinal energy fraction {fraction:e}")]
    NotTransverse { fraction: f64 },

    #[error("zero-frequency mode carries nonzero amplitude {amplitude:e}")]
    ZeroFrequencyMode { amplitude: f64 },

    #[error("insufficient samples: {0}")]
    InsufficientSamples(String),

    #[error("grid too coarse: {0}")]
    GridTooCoarse(String),

    #[error("non-paraxial transverse wavevector: |q|/k = {ratio}")]
    NotParaxial { ratio: f64 },

    #[error("observation point inside source support: {0}")]
    InsideSupport(String),

    #[error("causality: {0}")]
    Causality(String),

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
