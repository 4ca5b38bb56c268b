use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("visibility undefined: cross-polarized zero-delay area is zero")]
    UndefinedVisibility,

    #[error("insufficient histogram range: {found} side peaks, at least {required} required")]
    InsufficientRange { found: usize, required: usize },

    #[error("deconvolution unstable: instrument correction exceeds {guard}x at every fit delay")]
    DeconvolutionUnstable { guard: f64 },

    #[error("objective is not finite at {point:?}")]
    NonFiniteObjective { point: Vec<f64> },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}

pub(crate) fn ensure_finite(name: &str, value: f64) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("{name} must be finite, got {value}")))
    }
}
