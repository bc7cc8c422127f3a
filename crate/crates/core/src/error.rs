use thiserror::Error;

/// Failures raised by the numerical core.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum SkError {
    #[error("matrix is singular or too ill-conditioned (|det| = {abs_det:e}, condition estimate = {cond:e})")]
    SingularMatrix { abs_det: f64, cond: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("requested {requested} items exceeds the cap of {cap}")]
    SizeOverflow { requested: u128, cap: u128 },

    #[error("symbol value {value:e} below threshold {threshold:e} at z = {z:?}")]
    DegenerateSymbol { value: f64, threshold: f64, z: Vec<f64> },

    #[error("Fourier-series reconstruction residual {residual:e} exceeds {tolerance:e}; increase the grid size")]
    ReconstructionFailure { residual: f64, tolerance: f64 },

    #[error("Gram matrix condition estimate {estimate:e} exceeds {limit:e}")]
    IllConditioned { estimate: f64, limit: f64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T, E = SkError> = std::result::Result<T, E>;
