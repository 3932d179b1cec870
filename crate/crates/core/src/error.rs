use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument is outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("line-up enumeration too large: {pairs} line-up pairs exceed the cap of {cap}; use the Taylor approximation or Monte Carlo estimation")]
    EnumerationTooLarge { pairs: u128, cap: u128 },

    #[error("configuration error: {0}")]
    Config(String),

    /// The explicit scheme would be unstable with the requested step.
    #[error("CFL violation: dt = {dt:e} with max |a| = {max_speed:e}; admissible dt <= {admissible_dt:e}")]
    Cfl {
        max_speed: f64,
        dt: f64,
        admissible_dt: f64,
    },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("usage error: {0}")]
    Usage(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
}

pub(crate) fn ensure_finite(name: &str, value: f64) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} must be finite, got {value}")))
    }
}
