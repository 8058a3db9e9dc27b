//! Error taxonomy shared by the library and the CLI.
//!
//! Exit codes: 0 ok, 1 usage, 2 capacity, 3 integrity, 4 oracle unavailable,
//! 5 oracle disagreement.

use thiserror::Error;

#[derive(Error, Debug)]
pub enum Error {
    /// Malformed flags, ranges, or arguments.
    #[error("usage: {0}")]
    Usage(String),

    /// The request exceeds a configured ceiling (class-number range,
    /// modulus exponent, factoring budget). Never a silent answer.
    #[error("capacity: {0}")]
    Capacity(String),

    /// A mathematical invariant failed (parity of a valuation, exact
    /// division, bound violation). Signals a bug or bad input, aborts.
    #[error("integrity: {0}")]
    Integrity(String),

    /// The external CAS is missing, unparsable, or hit its escalation
    /// ceiling. Distinct from a mathematical disagreement.
    #[error("oracle unavailable: {0}")]
    OracleUnavailable(String),

    /// Native and oracle values differ.
    #[error("oracle disagreement: {0}")]
    Disagreement(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Usage(_) => 1,
            Error::Capacity(_) | Error::Io(_) => 2,
            Error::Integrity(_) => 3,
            Error::OracleUnavailable(_) => 4,
            Error::Disagreement(_) => 5,
        }
    }
}
