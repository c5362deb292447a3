//! Joint density of (argmax, supremum) for drifted Brownian motion, and the marginal
//! density of the 3-dimensional Bessel bridge.
//!
//! Every density is assembled in log space and exponentiated once. The `log_*`
//! variants are public so that callers can fold further exponential weights into
//! the same exponent.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{integrate_2d, Abscissa, Domain, EndpointHint, QuadConfig, QuadResult};
use crate::specfun::{erfc, erfcx_deficit};

const LN_PI: f64 = 1.144_729_885_849_400_2;
const LN_2: f64 = std::f64::consts::LN_2;

/// Time horizon: finite `T > 0` or infinite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Horizon {
    Finite(f64),
    Infinite,
}

impl Horizon {
    pub fn finite(t: f64) -> Result<Self> {
        if t > 0.0 && t.is_finite() {
            Ok(Horizon::Finite(t))
        } else {
            Err(Error::Domain(format!("finite horizon must be a positive number, got {t}")))
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, Horizon::Infinite)
    }

    /// `T` for a finite horizon, `+inf` otherwise.
    pub fn value(self) -> f64 {
        match self {
            Horizon::Finite(t) => t,
            Horizon::Infinite => f64::INFINITY,
        }
    }
}

impl fmt::Display for Horizon {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Horizon::Finite(t) => write!(f, "{t}"),
            Horizon::Infinite => write!(f, "inf"),
        }
    }
}

impl FromStr for Horizon {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("inf") {
            return Ok(Horizon::Infinite);
        }
        let t: f64 = s
            .parse()
            .map_err(|_| Error::Domain(format!("cannot parse horizon '{s}' (expected a number or 'inf')")))?;
        Horizon::finite(t)
    }
}

/// Horizon and drift of `Y(t) = B(t) - a t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriftedSpec {
    pub horizon: Horizon,
    pub a: f64,
}

impl DriftedSpec {
    /// Requires `a > 0` on the infinite horizon, where the supremum is otherwise infinite.
    pub fn new(horizon: Horizon, a: f64) -> Result<Self> {
        if !a.is_finite() {
            return Err(Error::Domain(format!("drift must be finite, got {a}")));
        }
        if horizon.is_infinite() && !(a > 0.0) {
            return Err(Error::Admissibility(format!(
                "infinite horizon requires drift a > 0, got {a}"
            )));
        }
        Ok(DriftedSpec { horizon, a })
    }

    /// Joint density at `(t, y)`.
    pub fn density(&self, t: f64, y: f64) -> Result<f64> {
        match self.horizon {
            Horizon::Finite(big_t) => joint_density_finite(t, y, big_t, self.a),
            Horizon::Infinite => joint_density_infinite(t, y, self.a),
        }
    }
}

/// `p(t, y; T, a)`, density of (argmax, supremum) of `B(s) - a s` on `[0, T]`.
pub fn joint_density_finite(t: f64, y: f64, big_t: f64, a: f64) -> Result<f64> {
    if !(t > 0.0 && t < big_t) {
        return Err(Error::Domain(format!("argmax time {t} outside (0, {big_t})")));
    }
    Ok(log_joint_density_finite(t, big_t - t, y, a)?.exp())
}

/// `ln p(t, y; T, a)` with the remaining time `tau = T - t` passed separately, so that
/// callers holding an exact offset to `T` keep full precision near the endpoint.
pub fn log_joint_density_finite(t: f64, tau: f64, y: f64, a: f64) -> Result<f64> {
    if !(t > 0.0) || !(tau > 0.0) {
        return Err(Error::Domain(format!("argmax time {t} with remaining time {tau} is not interior")));
    }
    if !(y > 0.0) {
        return Err(Error::Domain(format!("supremum value {y} must be positive")));
    }
    Ok(log_head(t, y, a) + ln_tail_factor(tau, a))
}

/// `p(t, y; inf, a)` for `a > 0`.
pub fn joint_density_infinite(t: f64, y: f64, a: f64) -> Result<f64> {
    Ok(log_joint_density_infinite(t, y, a)?.exp())
}

/// `ln p(t, y; inf, a)`.
pub fn log_joint_density_infinite(t: f64, y: f64, a: f64) -> Result<f64> {
    if !(a > 0.0) {
        return Err(Error::Domain(format!("infinite horizon density requires a > 0, got {a}")));
    }
    if !(t > 0.0) {
        return Err(Error::Domain(format!("argmax time {t} must be positive")));
    }
    if !(y > 0.0) {
        return Err(Error::Domain(format!("supremum value {y} must be positive")));
    }
    Ok(0.5 * LN_2 + a.ln() + log_head(t, y, a))
}

// ln[ y e^{-(y+ta)^2/2t} / (sqrt(pi) t^{3/2}) ]
fn log_head(t: f64, y: f64, a: f64) -> f64 {
    let z = y + t * a;
    y.ln() - z * z / (2.0 * t) - 0.5 * LN_PI - 1.5 * t.ln()
}

// ln[ e^{-a^2 tau/2}/sqrt(pi tau) + (a/sqrt 2) erfc(-a sqrt(tau/2)) ]
fn ln_tail_factor(tau: f64, a: f64) -> f64 {
    let x = a.abs() * (0.5 * tau).sqrt();
    let lead = -x * x - 0.5 * (PI * tau).ln();
    if a >= 0.0 {
        let gauss = lead.exp();
        let plateau = a / std::f64::consts::SQRT_2 * erfc(-x);
        (gauss + plateau).ln()
    } else {
        // The two terms cancel to leading order; the Mills deficit keeps the difference exact.
        lead + erfcx_deficit(x).ln()
    }
}

/// Marginal density `g(x, s; t, y)` of the 3-dimensional Bessel bridge from 0 at time 0
/// to `y` at time `t`, evaluated at time `s`.
///
/// The support is the whole half line `x > 0`: the bridge may overshoot its end point,
/// and only with the full support does `g` integrate to one.
pub fn bridge_density(x: f64, s: f64, t: f64, y: f64) -> Result<f64> {
    if !(s > 0.0 && s < t) {
        return Err(Error::Domain(format!("bridge time {s} outside (0, {t})")));
    }
    if !(y > 0.0) {
        return Err(Error::Domain(format!("bridge end point {y} must be positive")));
    }
    bridge_density_remaining(x, s, t - s, y)
}

/// [`bridge_density`] with the remaining time `u = t - s` passed separately.
pub fn bridge_density_remaining(x: f64, s: f64, u: f64, y: f64) -> Result<f64> {
    if !(s > 0.0 && u > 0.0) {
        return Err(Error::Domain(format!("bridge time {s} with remaining time {u} is not interior")));
    }
    if !(y > 0.0) {
        return Err(Error::Domain(format!("bridge end point {y} must be positive")));
    }
    if !(x > 0.0) {
        return Ok(0.0);
    }
    let t = s + u;
    let ln_num = x.ln() - 1.5 * s.ln() - x * x / (2.0 * s);
    let ln_den = y.ln() - 1.5 * t.ln() - y * y / (2.0 * t);
    let d = x - y;
    let ln_kernel = -0.5 * (2.0 * PI * u).ln() - d * d / (2.0 * u) + (-(-2.0 * x * y / u).exp_m1()).ln();
    Ok((ln_num - ln_den + ln_kernel).exp())
}

/// `int int w(t, y, p(t, y)) dy dt` over the support of the joint density of `spec`.
pub fn integrate_joint<W>(spec: &DriftedSpec, weight: W, cfg: &QuadConfig) -> Result<QuadResult>
where
    W: Fn(f64, f64, f64) -> f64,
{
    let a = spec.a;
    let outer = match spec.horizon {
        Horizon::Finite(t) => {
            Domain::finite(0.0, t).with_hints(EndpointHint::Regular, EndpointHint::AlgebraicSingularity(-0.5))
        }
        Horizon::Infinite => Domain::semi_infinite(0.0, (2.0 / (a * a)).min(4.0)),
    };
    let density = |t: Abscissa, y: f64| match spec.horizon {
        // The distance to T is taken from the abscissa to keep (T - t) exact.
        Horizon::Finite(_) => log_joint_density_finite(t.x, t.from_hi, y, a).map(f64::exp),
        Horizon::Infinite => joint_density_infinite(t.x, y, a),
    };
    integrate_2d(
        |t, y| density(t, y.x).map_or(f64::NAN, |p| weight(t.x, y.x, p)),
        &outer,
        |t| {
            // The y-profile peaks near max(0, -a t) with width sqrt(t).
            let split = (-t.x * a).max(0.0) + t.x.sqrt();
            vec![Domain::finite(0.0, split), Domain::semi_infinite(split, t.x.sqrt())]
        },
        cfg,
    )
}

/// Total mass of the joint density, 1 up to quadrature error.
pub fn total_mass(spec: &DriftedSpec, cfg: &QuadConfig) -> Result<QuadResult> {
    integrate_joint(spec, |_, _, p| p, cfg)
}
