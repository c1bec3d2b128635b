use thiserror::Error;

/// Errors raised by the solvers, simulators and I/O helpers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum WaldError {
    /// An argument was non-finite, out of range, or violated a precondition.
    #[error("invalid parameter `{name}`: {reason}")]
    Parameter { name: &'static str, reason: String },

    /// An iterative solver failed to converge.
    #[error("{solver} did not converge: {detail} (residual {residual:e})")]
    Solver {
        solver: &'static str,
        detail: String,
        residual: f64,
    },

    /// A configuration is internally inconsistent (e.g. both working SDs are zero).
    #[error("configuration error: {0}")]
    Config(String),

    /// A numerical routine produced NaN or missed its tolerance.
    #[error("numerical error in {context}: achieved {achieved:e}, wanted {target:e}")]
    Numerical {
        context: &'static str,
        achieved: f64,
        target: f64,
    },

    /// Variance estimation could not produce usable standard deviations.
    #[error("variance estimation failed: {0}")]
    Estimation(String),

    #[error("I/O error on {path}: {message}")]
    Io { path: String, message: String },
}

pub type Result<T, E = WaldError> = std::result::Result<T, E>;

impl WaldError {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        WaldError::Parameter {
            name,
            reason: reason.into(),
        }
    }
}

/// Rejects NaN and infinities.
pub(crate) fn finite(name: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(WaldError::param(name, format!("must be finite, got {value}")))
    }
}

pub(crate) fn non_negative(name: &'static str, value: f64) -> Result<f64> {
    finite(name, value)?;
    if value < 0.0 {
        return Err(WaldError::param(name, format!("must be >= 0, got {value}")));
    }
    Ok(value)
}

pub(crate) fn positive(name: &'static str, value: f64) -> Result<f64> {
    finite(name, value)?;
    if value <= 0.0 {
        return Err(WaldError::param(name, format!("must be > 0, got {value}")));
    }
    Ok(value)
}
