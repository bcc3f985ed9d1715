use thiserror::Error;

/// Errors raised across the quantize / decode pipeline.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    Dimension { expected: usize, actual: usize },

    #[error("input out of quantizer range: |y| = {magnitude} exceeds alpha = {alpha} at index {index}")]
    InputRange {
        index: usize,
        magnitude: f64,
        alpha: f64,
    },

    #[error(
        "solver did not converge after {iterations} iterations (gap {gap:.3e}, residual {residual:.3e}, bound {bound:.3e})"
    )]
    Convergence {
        iterations: usize,
        gap: f64,
        residual: f64,
        bound: f64,
    },

    #[error("true spikes {first} and {second} have overlapping neighborhoods (distance {distance}, radius {radius})")]
    Ambiguity {
        first: usize,
        second: usize,
        distance: f64,
        radius: f64,
    },

    #[error("numerical anomaly: {0}")]
    Numerical(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
