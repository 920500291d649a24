use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("sequence index must be at least 1")]
    IndexZero,

    #[error("invalid value for `{field}`: {reason}")]
    InvalidParameter { field: String, reason: String },

    #[error("series {series} diverges")]
    Divergence { series: String },

    #[error("relative tolerance {tol:e} unreachable: {reason}")]
    ToleranceUnreachable { tol: f64, reason: String },

    #[error("scan exceeded its budget of {cap} indices; best lower bound so far is {lower_bound:e}")]
    ScanBudgetExceeded { cap: u64, lower_bound: f64 },

    #[error("weight family `{0}` has no growth certificate")]
    MissingGrowthCertificate(String),

    #[error("expected a lattice point of dimension {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("value not representable as f64: {0}")]
    Overflow(String),

    #[error("outside the domain of the formula: {0}")]
    Domain(String),
}

impl Error {
    pub(crate) fn invalid(field: &str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field: field.to_string(),
            reason: reason.into(),
        }
    }

    /// True for errors caused by malformed input rather than by the mathematics.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            Error::IndexZero | Error::InvalidParameter { .. } | Error::DimensionMismatch { .. }
        )
    }
}
