use thiserror::Error;

/// Errors raised by the library. [`Error::exit_code`] maps them onto the CLI's exit codes.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("duplicate element {0}")]
    Duplicate(String),

    #[error("zero is not allowed in a multiplicative context")]
    ZeroInMultiplicative,

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("modulus mismatch: {0} vs {1}")]
    ModulusMismatch(u64, u64),

    #[error("cannot factor {0}: {1}")]
    Factorization(String, String),

    #[error("internal invariant violated: {0}")]
    Internal(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidInput(_) | Error::Duplicate(_) | Error::Io(_) | Error::Csv(_) => 2,
            Error::ZeroInMultiplicative
            | Error::Precondition(_)
            | Error::ModulusMismatch(..)
            | Error::Factorization(..) => 3,
            Error::Internal(_) => 1,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
