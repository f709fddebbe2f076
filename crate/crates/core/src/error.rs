use thiserror::Error;

/// Errors raised by the algebra, dynamics and cochain layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("invalid grading operator: {0}")]
    InvalidGrading(String),

    #[error("invalid supercharge: {0}")]
    InvalidSupercharge(String),

    #[error("invalid perturbation: {0}")]
    InvalidPerturbation(String),

    #[error("argument in slot {slot} must be {expected}, found {found}")]
    ParityViolation {
        slot: usize,
        expected: &'static str,
        found: &'static str,
    },

    #[error("Witten index |Z| = {z:e} is below the admissible threshold {threshold:e}")]
    ZeroWittenIndex { z: f64, threshold: f64 },

    #[error("complex time has Im(z) = {im}, outside the closed strip [0, 1]")]
    StripViolation { im: f64 },

    #[error("chain integral needs {terms} terms, budget is {budget}")]
    ChainBudgetExceeded { terms: u128, budget: u128 },

    #[error("Gauss simplex quadrature is limited to n <= 6, requested n = {0}")]
    QuadratureCost(usize),

    #[error("invalid quadrature rule: {0}")]
    InvalidRule(String),

    #[error("series truncation order {order} exceeds cap {cap} (tail bound {tail:e})")]
    TruncationUnreachable { order: usize, cap: usize, tail: f64 },

    #[error("invalid degree {degree}: {reason}")]
    InvalidDegree { degree: usize, reason: &'static str },

    #[error("wrong number of arguments: degree {degree} needs {expected}, got {found}")]
    Arity {
        degree: usize,
        expected: usize,
        found: usize,
    },

    #[error("parameter out of range: {0}")]
    OutOfRange(String),

    #[error("malformed matrix: {0}")]
    MalformedMatrix(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("i/o failure: {0}")]
    Io(String),

    #[error("json: {0}")]
    Json(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Json(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
