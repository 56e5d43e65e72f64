use thiserror::Error;

/// Errors surfaced by tensor arithmetic, structure validation and instance generation.
#[derive(Debug, Error)]
pub enum NordenError {
    #[error("contraction requires opposite variance")]
    VarianceMismatch,
    #[error("dimension mismatch: {0} vs {1}")]
    DimMismatch(usize, usize),
    #[error("slot {slot} out of range for rank {rank}")]
    SlotOutOfRange { slot: usize, rank: usize },
    #[error("expected rank {expected}, got {got}")]
    RankMismatch { expected: usize, got: usize },
    #[error("metric not symmetric")]
    MetricNotSymmetric,
    #[error("metric not invertible")]
    SingularMetric,
    #[error("metric numerically degenerate")]
    DegenerateMetric,
    #[error("signature must be (n,n)")]
    WrongSignature,
    #[error("dimension must be even and >= 2, got {0}")]
    OddDimension(usize),
    #[error("structure validation failed: {0}")]
    InvalidStructure(String),
    #[error("Jacobi identity violated (residual {0:.3e})")]
    JacobiViolation(f64),
    #[error("not a fundamental tensor of a Norden structure (residual {0:.3e})")]
    NotFundamental(f64),
    #[error("quasi-Kahler form requires class W3")]
    NotQuasiKahler,
    #[error("torsion must be antisymmetric in its first two slots (residual {0:.3e})")]
    NonAntisymmetricTorsion(f64),
    #[error("generation failed; increase budget")]
    GenerationFailed,
    #[error("no W3 instance found")]
    NoW3InstanceFound,
    #[error("model file error: {0}")]
    ModelFormat(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, NordenError>;
