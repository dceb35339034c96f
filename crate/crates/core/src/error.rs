use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A payoff parameterisation breaks one of the standing sign assumptions.
    #[error("invalid policy: {0}")]
    InvalidPolicy(String),

    /// The responsible population's policy does not sustain the resource on its own.
    #[error("policy is not responsible: {0}")]
    NotResponsible(String),

    #[error("{name} = {value} is outside {domain}")]
    Domain {
        name: &'static str,
        value: f64,
        domain: &'static str,
    },

    #[error("state has {got} components, expected {expected}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("restricted strategy set is empty for abar_minus = {abar_minus}")]
    EmptyStrategySet { abar_minus: f64 },

    #[error("negative radicand {0} in closed-form root")]
    NegativeRadicand(f64),

    #[error("non-finite state at t = {t}")]
    NonFinite { t: f64 },

    #[error("agent index {index} out of range for {len} agents")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("invalid sweep: {0}")]
    Sweep(String),
}

pub(crate) fn check_unit(name: &'static str, value: f64) -> Result<()> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(Error::Domain {
            name,
            value,
            domain: "[0, 1]",
        })
    }
}

pub(crate) fn check_positive(name: &'static str, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain {
            name,
            value,
            domain: "(0, inf)",
        })
    }
}
