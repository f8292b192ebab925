use thiserror::Error;

/// Errors raised across the simulation, focusing and autofocus chain.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("{what} index {index} out of range (len {len})")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        len: usize,
    },

    #[error("degenerate geometry: {0}")]
    Geometry(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("signal error: {0}")]
    Signal(String),

    #[error("too few GCPs for inversion: {available} available, {required} required")]
    TooFewGcps { available: usize, required: usize },

    #[error("velocity component(s) {axes} unobservable from the GCP geometry (condition number {condition:.3e})")]
    Unobservable { axes: String, condition: f64 },

    #[error("format error: {0}")]
    Format(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
