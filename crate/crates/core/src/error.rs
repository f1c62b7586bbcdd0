use thiserror::Error;

/// Errors raised by the simulation and oracle routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// The urn representation was requested for `a < 1` without the override flag.
    #[error("urn representation requires a >= 1 (got a = {a}); pass the sub-unit override to proceed")]
    SubUnitWeight { a: f64 },

    /// An effective urn mass went negative during a sub-unit run.
    #[error("negative effective {color} mass {mass} at site {site} (a = {a})")]
    NegativeMass {
        site: i64,
        a: f64,
        color: &'static str,
        mass: f64,
    },

    #[error("particles coincide at site {site}; the urn representation is only valid before the first meeting")]
    Decoupled { site: i64 },

    #[error("horizon {horizon} too large: up to {leaves} leaves (maximum horizon is {max})")]
    HorizonTooLarge { horizon: usize, leaves: u128, max: usize },

    #[error("ordering lP <= l <= r <= rP violated: {0}")]
    SandwichViolation(String),

    #[error("quadrature did not converge: estimate {estimate}, error bound {error_bound}")]
    Quadrature { estimate: f64, error_bound: f64 },

    #[error("mismatched inputs: {0}")]
    Mismatch(String),

    #[error("insufficient data: {0}")]
    Insufficient(String),
}

pub type Result<T> = std::result::Result<T, Error>;
