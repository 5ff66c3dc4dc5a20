use thiserror::Error;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("alpha {0} outside (0,1)")]
    AlphaOutOfRange(f64),
    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },
    #[error("invalid initial data: {0}")]
    InvalidData(&'static str),
    #[error("unbounded at t = 0")]
    UnboundedAtZero,
    #[error("undefined: zero datum at t = 0")]
    UndefinedAtZero,
    #[error("rho = {rho} lies inside the preserved gap [0, {gap}); u vanishes there")]
    GapPoint { rho: f64, gap: f64 },
    #[error("{what}: tolerance not reached within {iterations} iterations")]
    IterationBudget { what: &'static str, iterations: usize },
    #[error("CFL violated: h_t/h_rho = {ratio} is not below {bound}")]
    CflViolated { ratio: f64, bound: f64 },
    #[error("stability violated: h_t = {h_t} exceeds {limit} ({which})")]
    StabilityViolated {
        h_t: f64,
        limit: f64,
        which: &'static str,
    },
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("step too large: state left the validity region at t = {t}")]
    StepTooLarge { t: f64 },
    #[error("grid too small: {0}")]
    GridTooSmall(&'static str),
    #[error("oracle unavailable: {0}")]
    OracleUnavailable(&'static str),
}

pub(crate) fn positive(name: &'static str, value: f64) -> Result<f64> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(Error::InvalidParameter {
            name,
            value,
            reason: "must be positive and finite",
        })
    }
}

pub(crate) fn non_negative(name: &'static str, value: f64) -> Result<f64> {
    if value >= 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(Error::InvalidParameter {
            name,
            value,
            reason: "must be non-negative and finite",
        })
    }
}
