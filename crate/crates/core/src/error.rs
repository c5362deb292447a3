use thiserror::Error;

use crate::quadrature::QuadResult;

/// Errors raised by the numerical routines of this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of the function.
    #[error("domain error: {0}")]
    Domain(String),

    /// The (family, horizon, drift) combination is not admissible.
    #[error("inadmissible specification: {0}")]
    Admissibility(String),

    /// The requested case has no implementation (closed form, derivative order, ...).
    #[error("unsupported: {0}")]
    Unsupported(String),

    /// A quadrature run stopped before meeting its tolerance. The best value
    /// found and an honest error estimate are carried along.
    #[error(
        "accuracy not reached: value {:.17e}, error estimate {:.3e} after {} evaluations",
        best.value, best.err_est, best.evals
    )]
    AccuracyNotReached { best: QuadResult },

    /// The integrand produced NaN.
    #[error("integrand returned NaN at x = {abscissa:e}")]
    NanIntegrand { abscissa: f64 },

    /// A semi-infinite integrand does not decay fast enough to trust the mapped rule.
    #[error("integrand tail does not decay: |f(q)|*q = {tail:e} at q = {at:e}")]
    TailNotDecaying { at: f64, tail: f64 },

    /// A time was requested that does not coincide with a grid node.
    #[error("time {t} is not aligned to the path grid (step {step})")]
    Alignment { t: f64, step: f64 },

    /// Invalid configuration value.
    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Best available quadrature result for an accuracy failure.
    pub fn best_effort(&self) -> Option<QuadResult> {
        match self {
            Error::AccuracyNotReached { best } => Some(*best),
            _ => None,
        }
    }
}
