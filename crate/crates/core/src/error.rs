use thiserror::Error;

/// Errors produced anywhere in the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix contains non-finite entries")]
    NonFinite,

    #[error("matrix is not Hermitian (max |A - A*| = {defect:e})")]
    NotHermitian { defect: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is numerically rank deficient (sigma_min / sigma_max = {ratio:e})")]
    RankDeficient { ratio: f64 },

    #[error("invalid delay spec: {0}")]
    InvalidSpec(String),

    #[error("invalid singular value range: sigma_min = {sigma_min}, sigma_max = {sigma_max}")]
    InvalidRange { sigma_min: f64, sigma_max: f64 },

    #[error("bound only valid for sigma_max(W) < 1/2, got {sigma_max}")]
    OutOfRegime { sigma_max: f64 },

    #[error("index {index} out of range: {reason}")]
    IndexOutOfRange { index: usize, reason: String },

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("cell {cell} exceeds the dimension budget (m*n = {dim} > {limit})")]
    OutOfBudget { cell: String, dim: usize, limit: usize },

    #[error("Jacobi iteration did not converge after {sweeps} sweeps")]
    NoConvergence { sweeps: usize },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("I/O error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
