use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Argument outside the domain of a function (e.g. `t <= 0`).
    #[error("domain error: {0}")]
    Domain(String),
    /// The conjugate exponent requires `p_- > 1`.
    #[error("conjugate exponent undefined: p_- = {p_minus} <= 1")]
    ConjugateUndefined { p_minus: f64 },
    /// An integral diverges on the grid (non-integrable endpoint behaviour).
    #[error("divergent integral: {0}")]
    Divergent(String),
    /// A modular or norm overflowed to a non-finite value.
    #[error("overflow: {0}")]
    Overflow(String),
    /// Structurally invalid input (partition, step function, config value).
    #[error("invalid input: {0}")]
    Invalid(String),
    /// Config / exponent text that does not parse.
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
