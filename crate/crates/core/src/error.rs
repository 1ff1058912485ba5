use thiserror::Error;

/// Errors raised by model evaluation, calibration and sensitivity analysis.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An input lies outside the domain of the operation (non-positive
    /// frequency, temperature, modulus, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// `alpha == beta` leaves the non-dimensional scaling undefined.
    #[error("degenerate exponents: alpha = beta = {0}")]
    DegenerateExponent(f64),

    /// A model output needed as a divisor or logarithm argument is zero.
    #[error("zero output: {0}")]
    ZeroOutput(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("invalid frequency grid: {0}")]
    Grid(String),

    #[error("dimension {requested} out of range 1..={max}")]
    Dimension { requested: usize, max: usize },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("order error at line {line}: frequencies must be strictly ascending")]
    Order { line: usize },

    #[error("empty data: {0}")]
    Empty(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
