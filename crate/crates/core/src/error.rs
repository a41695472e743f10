//! Error type shared across the workbench.

use std::fmt;

#[derive(Debug)]
pub enum Error {
    /// Invalid argument or geometry at construction time.
    Argument(String),
    /// Invalid configuration: bad keys, missing files, mismatched models.
    Config(String),
    /// A field, auxiliary variable or prediction became non-finite.
    Instability { step: usize, detail: String },
    /// Training left the useful regime and cannot recover.
    Diverged { epoch: usize, loss: f64 },
    /// Malformed binary artifact (wrong magic, truncation, bad counts).
    Format(String),
    Io(std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Argument(msg) => write!(f, "invalid argument: {msg}"),
            Error::Config(msg) => write!(f, "configuration error: {msg}"),
            Error::Instability { step, detail } => {
                write!(f, "numerical instability at step {step}: {detail}")
            }
            Error::Diverged { epoch, loss } => {
                write!(f, "training diverged at epoch {epoch} (validation loss {loss:e})")
            }
            Error::Format(msg) => write!(f, "format error: {msg}"),
            Error::Io(e) => write!(f, "io error: {e}"),
        }
    }
}

impl std::error::Error for Error {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            Error::Io(e) => Some(e),
            _ => None,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e)
    }
}

impl Error {
    pub fn argument(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }

    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn format(msg: impl Into<String>) -> Self {
        Error::Format(msg.into())
    }
}
