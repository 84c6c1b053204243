use thiserror::Error;

/// Errors raised by the simulation library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("operation requires a non-empty configuration")]
    EmptyConfiguration,

    #[error("rasterization oracle unresolved at resolution cap {cap}")]
    OracleUnresolved { cap: usize },

    #[error("threshold window unresolved: fitted curve stays inside ({lo}, {hi}) at a grid endpoint")]
    WindowUnresolved { lo: f64, hi: f64 },

    #[error("function table has {bits} bits, limit is {limit}")]
    TableTooLarge { bits: usize, limit: usize },

    #[error("function table is not monotone in the color bits")]
    NonMonotone,

    #[error("malformed input: {0}")]
    Malformed(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_prob(name: &str, v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must lie in [0, 1], got {v}")))
    }
}

pub(crate) fn check_nonneg(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must be finite and non-negative, got {v}")))
    }
}
