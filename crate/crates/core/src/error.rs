use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DbarError {
    #[error("evaluation at the pole z = w = {0}")]
    Pole(Complex64),

    #[error("point {0} lies outside the slice")]
    Domain(Complex64),

    #[error("inverse conformal map did not converge at {0}")]
    Inversion(Complex64),

    #[error("invalid slice domain: {0}")]
    InvalidSlice(String),

    #[error("unsupported representation: {0}")]
    Representation(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("arithmetic overflow: {0}")]
    ArithmeticOverflow(String),

    #[error("invalid Sobolev index: {0}")]
    Index(String),

    #[error("derivative order {order} exceeds the supported grid resolution (max {max})")]
    Resolution { order: usize, max: usize },

    #[error("precondition violated: {message} (residual {residual:e})")]
    Precondition { message: String, residual: f64 },

    #[error("branch point of the datum at z2 = {0}")]
    BranchPoint(Complex64),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, DbarError>;
