use thiserror::Error;

use crate::simulate::Trajectory;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Input(String),

    #[error("unknown system `{0}` (run `examples` for the catalog)")]
    Catalog(String),

    #[error("descriptor parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("descriptor validation error in {location}: {message}")]
    Validation { location: String, message: String },

    #[error("resource limit: {0}")]
    Resource(String),

    #[error("unsupported dimension {dim}: {what} supports at most {max}")]
    UnsupportedDimension {
        dim: usize,
        max: usize,
        what: &'static str,
    },

    #[error("out of range: {0}")]
    Range(String),

    #[error("power-law fit failed: {0}")]
    Fit(String),

    #[error("trajectory diverged at t = {time} (|x| = {norm:e})")]
    Diverged {
        time: f64,
        norm: f64,
        partial: Box<Trajectory>,
    },

    #[error("internal error: {0}")]
    Internal(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }
}
