//! Error type shared by every module in this crate.
//!
//! Variants are grouped by what the caller can do about them: fix the input
//! (`InvalidInput`, `Shape`, `Domain`), relax the request (`Infeasible`), or
//! treat the run as failed (`Numeric`, `Io`, `Placement`).

use std::fmt;

/// Crate-wide error type.
#[derive(Debug)]
pub enum Error {
    /// An argument violates a documented precondition (bad value, bad format).
    InvalidInput(String),
    /// Dimensions of the supplied operands do not match.
    Shape(String),
    /// A scalar argument lies outside the domain of the operation.
    Domain(String),
    /// The requested bound cannot be met; `minimum` is the best achievable value.
    Infeasible { requested: f64, minimum: f64, what: String },
    /// An iterative routine failed to converge or produced non-finite values.
    Numeric(String),
    /// File or directory I/O failed.
    Io(String),
    /// A randomized placement/rejection loop exhausted its attempt budget.
    Placement(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidInput(msg) => write!(f, "invalid input: {msg}"),
            Error::Shape(msg) => write!(f, "shape mismatch: {msg}"),
            Error::Domain(msg) => write!(f, "domain error: {msg}"),
            Error::Infeasible { requested, minimum, what } => write!(
                f,
                "infeasible: requested {what} = {requested} but the minimum achievable is {minimum}"
            ),
            Error::Numeric(msg) => write!(f, "numeric failure: {msg}"),
            Error::Io(msg) => write!(f, "i/o error: {msg}"),
            Error::Placement(msg) => write!(f, "placement failure: {msg}"),
        }
    }
}

impl std::error::Error for Error {}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn display_mentions_the_numbers() {
        let e = Error::Infeasible { requested: 0.01, minimum: 0.02, what: "r".into() };
        let s = e.to_string();
        assert!(s.contains("0.01") && s.contains("0.02"));
    }
}
