use thiserror::Error;

/// Errors raised by the models and the simulator.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of the model.
    #[error("domain error: {0}")]
    Domain(String),

    /// The substitute capacitor under-estimates the real device below the initial gap.
    #[error(
        "model inconsistency at gap {gap_m:e} m: substitute {substitute_f:e} F is smaller than real {real_f:e} F"
    )]
    ModelInconsistency {
        gap_m: f64,
        substitute_f: f64,
        real_f: f64,
    },

    /// A parameter set violates its invariants.
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// The integrator produced a non-finite value.
    #[error("numerical failure at t = {t}")]
    NumericalFailure { t: f64 },

    /// Not enough samples to evaluate a metric.
    #[error("trace too short: {0}")]
    TraceTooShort(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}

/// Checks that `value` is finite and strictly positive.
pub(crate) fn require_positive(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(invalid(
            name,
            format!("must be finite and > 0, got {value}"),
        ))
    }
}

/// Checks that `value` is finite and non-negative.
pub(crate) fn require_non_negative(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value >= 0.0 {
        Ok(())
    } else {
        Err(invalid(
            name,
            format!("must be finite and >= 0, got {value}"),
        ))
    }
}

/// Checks `0 < lower <= upper`.
pub(crate) fn require_ordered(name: &'static str, lower: f64, upper: f64) -> Result<()> {
    if lower > 0.0 && lower <= upper && upper.is_finite() {
        Ok(())
    } else {
        Err(invalid(name, format!("need 0 < {lower} <= {upper}")))
    }
}
