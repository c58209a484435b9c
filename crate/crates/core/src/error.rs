use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("index out of range: {0}")]
    Index(String),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },
    #[error("budget exceeded: {0}")]
    Budget(String),
    #[error("search cap of {0} candidates exceeded")]
    SearchCap(u64),
    #[error("degenerate determinant at degree {0}")]
    Degenerate(usize),
    #[error("comparison undecidable at working precision: {0}")]
    Undecidable(String),
    #[error("certificate not unique: {0}")]
    NonUnique(String),
    #[error("quadrature estimate {estimate:e} exceeds tolerance {tol:e}")]
    NonConverged { estimate: f64, tol: f64 },
    #[error("divisibility violated: {0}")]
    Divisibility(String),
    #[error("io: {0}")]
    Io(String),
}

impl Error {
    pub fn parse(location: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            location: location.into(),
            message: message.into(),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
