use thiserror::Error;

/// Every fallible operation in the crate reports one of these.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum FracError {
    #[error("{op}: order {value} outside admissible range {range}")]
    OrderOutOfRange { op: &'static str, value: f64, range: &'static str },
    #[error("{op}: dimension {n} not supported ({supported})")]
    Dimension { op: &'static str, n: usize, supported: &'static str },
    #[error("{0}")]
    InvalidArgument(String),
    #[error("grid too coarse: {0}")]
    Unresolved(String),
    #[error("support touches the grid boundary: boundary magnitude {boundary} exceeds {allowed} (needs a wider margin)")]
    SupportTouchesBoundary { boundary: f64, allowed: f64 },
    #[error("grid holds {samples} samples, above the cap of {cap}")]
    GridTooLarge { samples: usize, cap: usize },
    #[error("quadrature did not converge: residual {residual:e}")]
    Quadrature { residual: f64 },
    #[error("unknown suite `{0}`")]
    UnknownSuite(String),
    #[error("io: {0}")]
    Io(String),
    #[error("parse: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, FracError>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(FracError::InvalidArgument(msg.into()))
}

pub(crate) fn check_open(op: &'static str, value: f64, lo: f64, hi: f64, range: &'static str) -> Result<()> {
    if value.is_finite() && value > lo && value < hi {
        Ok(())
    } else {
        Err(FracError::OrderOutOfRange { op, value, range })
    }
}
