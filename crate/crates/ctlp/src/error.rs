//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed or inconsistent input (dimensions, guards, parse failures).
    #[error("invalid input: {0}")]
    Input(String),

    /// Arguments outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Instance or trajectory deserialization failure; `path` is the field path.
    #[error("load error at {path}: {message}")]
    Load { path: String, message: String },

    /// A pointwise LP came back infeasible or unbounded.
    #[error("solve failed at node {node} (t = {t}): {status}")]
    SolveFailed { node: usize, t: f64, status: String },

    /// An operation required a regularity certificate that does not hold.
    #[error("certificate does not hold: {0}")]
    Certificate(String),
}

impl Error {
    pub fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn load(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Load {
            path: path.into(),
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
