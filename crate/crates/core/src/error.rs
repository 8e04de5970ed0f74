use thiserror::Error;

use crate::problem::ValidationReport;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid problem: {0}")]
    Validation(ValidationReport),

    #[error("invalid demand model: {0}")]
    InvalidDemand(String),

    #[error("invalid grid step {0}: must be finite and positive")]
    InvalidStep(f64),

    /// No sign change / crossing was found while bracketing outward.
    #[error("bracketing failed in period {period} while searching for {what}")]
    BracketFailure { period: usize, what: &'static str },

    /// A grid scan ran past its configured index span without the expected crossing.
    #[error("grid scan for {what} in period {period} exceeded {span} steps")]
    ScanOverflow {
        period: usize,
        what: &'static str,
        span: i64,
    },

    #[error("internal consistency fault: {0}")]
    InternalConsistency(String),

    #[error("relative error bound unavailable: value lower bound {0} is not positive")]
    DegenerateDenominator(f64),

    #[error("exact DP state window too small in period {period}")]
    WindowTooSmall { period: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
