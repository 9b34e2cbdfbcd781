use thiserror::Error;

/// Errors raised by model validation, evaluation and estimation.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum CascadeError {
    #[error("invalid base {0}: must be at least 2")]
    InvalidBase(u32),

    #[error("digit {digit} out of range for base {base}")]
    InvalidDigit { digit: u32, base: u32 },

    #[error("point {0} lies outside [0, 1)")]
    OutOfRange(f64),

    #[error("depth {depth} too large for base {base}")]
    DepthTooLarge { depth: u32, base: u32 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid weight law: {0}")]
    InvalidLaw(String),

    #[error("moment of order {p} is infinite")]
    InfiniteMoment { p: f64 },

    #[error("({re}, {im}) lies outside the extension domain of the Levy exponent")]
    OutsideDomain { re: f64, im: f64 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("realization does not cover level {level} at t = {t}")]
    NotCovered { level: u32, t: f64 },

    #[error("degenerate input: {0}")]
    Degenerate(String),
}

pub type Result<T> = std::result::Result<T, CascadeError>;
