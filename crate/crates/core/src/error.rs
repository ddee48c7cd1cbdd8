use alloc::string::String;

/// Errors raised by the core library.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("validation failed: {0}")]
    Validation(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("empty input: {0}")]
    Empty(&'static str),
    #[error("brute-force oracle refused instance with {combinations} combinations (limit {limit})")]
    TooLarge { combinations: u128, limit: u128 },
    #[error("no assignment satisfies every row")]
    Infeasible,
    #[error("mismatched inputs: {0}")]
    Mismatch(String),
}

pub type Result<T, E = Error> = core::result::Result<T, E>;
