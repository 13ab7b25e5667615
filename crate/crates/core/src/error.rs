use thiserror::Error;

/// Errors raised by grid construction, operators and the verification harness.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("grid size {0} must be a power of two and at least 8")]
    GridSize(usize),
    #[error("spatial dimension {0} is not supported (use 1 or 2)")]
    Dimension(usize),
    #[error("time nodes must contain at least two strictly increasing finite values")]
    TimeNodes,
    #[error("box half length must be positive and finite, got {0}")]
    HalfLength(f64),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("field contains a non-finite value")]
    NonFinite,
    #[error("exponent out of range: {0}")]
    Exponent(String),
    #[error("symbol evaluation failed at t = {t}: {reason}")]
    SymbolEval { t: f64, reason: String },
    #[error("expected t > s, got s = {s}, t = {t}")]
    TimeOrder { s: f64, t: f64 },
    #[error("dyadic block {j} outside the representable range [{min}, {max}]")]
    BlockRange { j: i32, min: i32, max: i32 },
    #[error("hypothesis violated: {0}")]
    Hypothesis(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("point outside the filtration box")]
    OutOfBox,
    #[error("i/o failure: {0}")]
    Io(String),
    #[error("malformed input: {0}")]
    Format(String),
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
