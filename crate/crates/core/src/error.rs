use thiserror::Error;

/// Errors raised by the toolkit. Each variant maps onto a stable process
/// exit code (see [`Error::exit_code`]).
#[derive(Debug, Error)]
pub enum Error {
    /// A caller-supplied parameter violates its documented constraint.
    #[error("parameter error: {0}")]
    Parameter(String),
    /// Input data is malformed (NaN samples, bad file, mismatched grids).
    #[error("input error: {0}")]
    Input(String),
    /// An internal invariant was violated.
    #[error("internal error: {0}")]
    Internal(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }

    pub fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub fn internal(msg: impl Into<String>) -> Self {
        Error::Internal(msg.into())
    }

    /// 1 parameter error, 2 input/format error, 3 internal invariant violation.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parameter(_) => 1,
            Error::Input(_) | Error::Io(_) => 2,
            Error::Internal(_) => 3,
        }
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Input(format!("json: {e}"))
    }
}

impl From<toml::de::Error> for Error {
    fn from(e: toml::de::Error) -> Self {
        Error::Parameter(format!("config: {e}"))
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Input(format!("csv: {e}"))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
