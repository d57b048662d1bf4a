use std::io;

/// Errors raised by model construction, inference and I/O.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// An argument violated an operation's contract (dimension mismatch,
    /// invalid label, partition over the wrong variable set, ...).
    #[error("contract violation: {0}")]
    Contract(String),

    /// The operation refused to run, e.g. an enumeration above its cap.
    #[error("refused: {0}")]
    Refused(String),

    /// A configuration value is missing or out of range.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// Malformed input file.
    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    /// An internal invariant failed to hold at runtime.
    #[error("invariant failure: {0}")]
    Invariant(String),
}

pub type Result<T> = std::result::Result<T, Error>;

macro_rules! contract {
    ($cond:expr, $($arg:tt)+) => {
        // Bound first so a NaN comparison reads as a failed condition.
        let holds: bool = $cond;
        if !holds {
            return Err($crate::error::Error::Contract(format!($($arg)+)));
        }
    };
}

pub(crate) use contract;
