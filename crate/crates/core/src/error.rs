use thiserror::Error;

/// Errors raised by the library.
///
/// The CLI maps these onto its exit-code contract through [`Error::class`].
#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed document: {0}")]
    Malformed(String),

    #[error("inhomogeneous term: multi-index {alpha:?} has order {found}, operator order is {expected}")]
    Inhomogeneous {
        alpha: Vec<u32>,
        found: usize,
        expected: usize,
    },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("L has trivial symbol")]
    TrivialSymbol,

    #[error("order m = {order} must satisfy 1 <= m < N = {dim}")]
    OrderOutOfRange { order: usize, dim: usize },

    #[error("empty sample: {0}")]
    EmptySample(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("ellipticity violated at xi = {xi:?} (smallest singular value {sigma:e})")]
    NotElliptic { xi: Vec<f64>, sigma: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("numerical failure: {0}")]
    Numerical(String),
}

/// Coarse classification used for process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Input,
    Numeric,
    Precondition,
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Malformed(_)
            | Error::Inhomogeneous { .. }
            | Error::DimensionMismatch(_)
            | Error::TrivialSymbol
            | Error::OrderOutOfRange { .. }
            | Error::EmptySample(_)
            | Error::InvalidArgument(_) => ErrorClass::Input,
            Error::NotElliptic { .. } | Error::Precondition(_) => ErrorClass::Precondition,
            Error::Numerical(_) => ErrorClass::Numeric,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
