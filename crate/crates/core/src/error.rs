use thiserror::Error;

/// Errors raised by the library. The CLI maps `Argument`/`Kind`/`Io`-like
/// failures to exit code 2 and numeric failures to exit code 3.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("operation not supported for this model kind: {0}")]
    Kind(String),

    #[error("no solution: {0}")]
    NoSolution(String),

    #[error("numeric failure: {message} (partial estimate {partial})")]
    Numeric { message: String, partial: f64 },

    #[error("optimization failed: {message} (best value {best_value} at {best_point:?})")]
    Optimization {
        message: String,
        best_point: Vec<f64>,
        best_value: f64,
    },

    #[error("problem too large for exact enumeration: {0}")]
    Scale(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("quality gate failed: {0}")]
    Quality(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }

    /// True for failures of a numerical routine, as opposed to bad input.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::Numeric { .. } | Error::Optimization { .. } | Error::NoSolution(_) | Error::Quality(_)
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
