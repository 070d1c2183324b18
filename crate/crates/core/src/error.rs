use alloc::string::String;
use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Input does not satisfy a structural invariant (shape, range, sum).
    Validation(String),
    /// A numeric precondition fails, e.g. a zero probability under a log.
    Domain(String),
    /// The one-coin moment estimator's denominator `2γ̂ - 1` is too small.
    Degenerate { gamma_hat: f64 },
    /// Exact enumeration would visit more than the allowed number of columns.
    Infeasible { columns: f64, limit: u64 },
    /// Fewer usable points than a fit needs.
    InsufficientData { usable: usize, required: usize },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Validation(msg) => write!(f, "invalid input: {msg}"),
            Error::Domain(msg) => write!(f, "domain error: {msg}"),
            Error::Degenerate { gamma_hat } => write!(
                f,
                "one-coin estimate is degenerate: |2*gamma_hat - 1| < 0.1 (gamma_hat = {gamma_hat})"
            ),
            Error::Infeasible { columns, limit } => {
                write!(f, "exact enumeration needs {columns} label columns, limit is {limit}")
            }
            Error::InsufficientData { usable, required } => {
                write!(f, "need at least {required} points with positive error, got {usable}")
            }
        }
    }
}

impl core::error::Error for Error {}

pub(crate) fn validation(msg: impl Into<String>) -> Error {
    Error::Validation(msg.into())
}

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
