use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("design matrix is rank deficient (smallest singular value {sigma_min:.3e}, largest {sigma_max:.3e})")]
    RankDeficient { sigma_min: f64, sigma_max: f64 },

    #[error("invalid noise specification: {0}")]
    InvalidNoiseSpec(String),

    #[error("size limit exceeded: {size} > {limit}")]
    SizeLimitExceeded { size: usize, limit: usize },

    #[error("invalid inputs: {0}")]
    InvalidInputs(String),

    #[error("negative radius {0}")]
    NegativeRadius(f64),

    #[error("unsupported risk measure for this reformulation: {0}")]
    UnsupportedRisk(String),

    #[error("unsupported Wasserstein order q = {0} (only q = 1 has an exact reformulation)")]
    UnsupportedOrder(u32),

    #[error("invalid program: {0}")]
    InvalidProgram(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
