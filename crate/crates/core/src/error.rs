use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid partition: {0}")]
    InvalidMesh(String),
    #[error("basis index {index} out of range for a space of dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },
    #[error("coordinate {0} lies outside [0, 1]")]
    OutOfDomain(f64),
    #[error("quadrature order must be at least 1")]
    ZeroOrder,
    #[error("Jacobi exponents must exceed -1 (got a = {a}, b = {b})")]
    InvalidExponent { a: f64, b: f64 },
    #[error("invalid interval [{0}, {1}]")]
    InvalidInterval(f64, f64),
    #[error("singularity order alpha = {0} must lie in (0, 1)")]
    InvalidAlpha(f64),
    #[error("panel distance {0} is not positive; use the singular or adjacent path")]
    NonPositiveDistance(f64),
    #[error("panels do not share an endpoint")]
    PanelsNotTouching,
    #[error("panels overlap or are in the wrong order")]
    PanelsOverlap,
    #[error("non-finite matrix entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
    #[error("non-finite load vector entry at {0}")]
    NonFiniteLoad(usize),
    #[error("singular system: pivot {value:e} at index {index}")]
    SingularSystem { index: usize, value: f64 },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("malformed data: {0}")]
    Malformed(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
