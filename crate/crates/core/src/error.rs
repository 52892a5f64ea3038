use thiserror::Error;

/// Failures shared by every module of the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("{0} is a perfect square")]
    SquareInput(u64),

    #[error("out of range: {0}")]
    Range(String),

    #[error("{x} is not invertible modulo {m}")]
    NotCoprime { x: u64, m: u64 },

    #[error("{0} is not prime")]
    NotPrime(u64),

    #[error("{divisor} does not divide {modulus}")]
    NotDivisor { divisor: u64, modulus: u64 },

    #[error("enumeration of {needed} items exceeds budget of {cap}")]
    BudgetExceeded { needed: u128, cap: u64 },

    #[error("i/o: {0}")]
    Io(String),

    #[error("malformed cache: {0}")]
    Cache(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn range_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Range(msg.into()))
}

/// Cap on the number of items an enumeration may visit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Budget(pub u64);

impl Budget {
    pub const DEFAULT: Budget = Budget(100_000_000);

    pub fn check(self, needed: u128) -> Result<()> {
        if needed > self.0 as u128 {
            Err(Error::BudgetExceeded {
                needed,
                cap: self.0,
            })
        } else {
            Ok(())
        }
    }
}

impl Default for Budget {
    fn default() -> Self {
        Budget::DEFAULT
    }
}
