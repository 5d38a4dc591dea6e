use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid field: {0}")]
    InvalidField(String),

    #[error("grid size mismatch: expected n = {expected}, found n = {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("mass constraint violated: mean(u) = {mean}, required {target}")]
    ConstraintViolation { mean: f64, target: f64 },

    #[error("field is not binary: value {value} at index {index}")]
    NonBinary { index: usize, value: f64 },

    #[error("lattice sum evaluated on a lattice point")]
    SingularPoint,

    #[error("under-resolved: {0}")]
    UnderResolved(String),

    #[error("negative measure density {min} (u < -1 somewhere)")]
    NegativeDensity { min: f64 },

    #[error("shape is not star-shaped: {0}")]
    NotStarShaped(String),

    #[error("kernel truncation lmax = {lmax} below required {required}")]
    KernelTruncation { lmax: usize, required: usize },

    #[error("construction overlap: {0}")]
    Overlap(String),

    #[error("gradient flow diverged: {0}")]
    Divergence(String),

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Stable machine-readable tag, used in CLI error objects and FFI status codes.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidField(_) => "invalid_field",
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::InvalidParameter(_) => "invalid_parameter",
            Error::ConstraintViolation { .. } => "constraint_violation",
            Error::NonBinary { .. } => "non_binary",
            Error::SingularPoint => "singular_point",
            Error::UnderResolved(_) => "under_resolved",
            Error::NegativeDensity { .. } => "negative_density",
            Error::NotStarShaped(_) => "not_star_shaped",
            Error::KernelTruncation { .. } => "kernel_truncation",
            Error::Overlap(_) => "overlap",
            Error::Divergence(_) => "divergence",
            Error::Config(_) => "config",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }
}
