//! Level values and Hurst derivatives at `H = 1/2` of
//! `M_H(T, a) = E sup_{[0,T]} (B_H(t) - a t)` and
//! `P_H(T, a) = E exp(sup_{[0,T]} (sqrt 2 B_H(t) - a t^{2H}))`.
//!
//! Derivatives are integrals of explicit weights against the (argmax, supremum)
//! density:
//!
//! * `M' = int int (y (1 + ln t) + a t ln t - I(t, y)) p(t, y; T, a) dy dt`
//! * `P' = int int sqrt 2 (y (1 + ln t) - (a / sqrt 2) t ln t - I(t, y)) e^{sqrt 2 y} p(t, y; T, a / sqrt 2) dy dt`
//!
//! The inner integral runs over `y`, the outer over `t`, whose endpoint behaviour
//! (`ln t` at 0, `(T - t)^{-1/2}` at `T`) is handed to the tanh-sinh rule.

use std::f64::consts::{PI, SQRT_2};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::bessel_bridge::{i_functional, BridgePoint};
use crate::densities::{log_joint_density_finite, log_joint_density_infinite, Horizon};
use crate::error::{Error, Result};
use crate::quadrature::{integrate_2d, Abscissa, Domain, EndpointHint, QuadConfig, QuadResult};
use crate::specfun::{acoth, EULER_GAMMA};

/// Which sup-functional.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Family {
    /// Expected supremum of `B_H(t) - a t`.
    M,
    /// Exponential functional of `sqrt 2 B_H(t) - a t^{2H}`.
    P,
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::M => "M",
            Family::P => "P",
        })
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "m" => Ok(Family::M),
            "p" => Ok(Family::P),
            other => Err(Error::Config(format!("unknown family '{other}' (expected m or p)"))),
        }
    }
}

/// How a quantity is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    Quadrature,
    ClosedForm,
    MonteCarlo,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Quadrature => "quadrature",
            Method::ClosedForm => "closed_form",
            Method::MonteCarlo => "monte_carlo",
        })
    }
}

/// An admissible (family, horizon, drift, method) combination.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FunctionalSpec {
    pub family: Family,
    pub horizon: Horizon,
    pub a: f64,
    pub method: Method,
}

impl FunctionalSpec {
    /// Rejects `a <= 0` for `M` and `a <= 1` for `P` on the infinite horizon.
    pub fn new(family: Family, horizon: Horizon, a: f64, method: Method) -> Result<Self> {
        if !a.is_finite() {
            return Err(Error::Domain(format!("drift must be finite, got {a}")));
        }
        if horizon.is_infinite() {
            match family {
                Family::M if !(a > 0.0) => {
                    return Err(Error::Admissibility(format!(
                        "M on the infinite horizon requires a > 0, got a = {a}"
                    )))
                }
                Family::P if !(a > 1.0) => {
                    return Err(Error::Admissibility(format!(
                        "P on the infinite horizon requires a > 1, got a = {a}"
                    )))
                }
                _ => {}
            }
        }
        Ok(FunctionalSpec { family, horizon, a, method })
    }
}

/// A derivative value with its error estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivativeResult {
    pub value: f64,
    pub err_est: f64,
    pub method: Method,
    pub spec: FunctionalSpec,
    /// Integrand evaluations (quadrature) or 0 (closed form).
    pub evals: usize,
}

/// `M'_{1/2}(T, a)` by quadrature.
pub fn m_deriv(spec: &FunctionalSpec, cfg: &QuadConfig) -> Result<DerivativeResult> {
    expect_family(spec, Family::M)?;
    let r = integrate_weighted(Kernel::MDeriv, spec, cfg)?;
    Ok(derivative_result(r, spec, Method::Quadrature))
}

/// `P'_{1/2}(T, a)` by quadrature.
pub fn p_deriv(spec: &FunctionalSpec, cfg: &QuadConfig) -> Result<DerivativeResult> {
    expect_family(spec, Family::P)?;
    let r = integrate_weighted(Kernel::PDeriv, spec, cfg)?;
    Ok(derivative_result(r, spec, Method::Quadrature))
}

/// Derivative by the method named in the spec (quadrature or closed form).
pub fn deriv(spec: &FunctionalSpec, cfg: &QuadConfig) -> Result<DerivativeResult> {
    match (spec.method, spec.family) {
        (Method::Quadrature, Family::M) => m_deriv(spec, cfg),
        (Method::Quadrature, Family::P) => p_deriv(spec, cfg),
        (Method::ClosedForm, fam) => {
            let value = match fam {
                Family::M => m_deriv_closed(spec)?,
                Family::P => p_deriv_closed(spec)?,
            };
            Ok(DerivativeResult { value, err_est: 0.0, method: Method::ClosedForm, spec: *spec, evals: 0 })
        }
        (Method::MonteCarlo, _) => Err(Error::Unsupported(
            "Monte Carlo derivatives are provided by the path simulator".into(),
        )),
    }
}

/// Closed forms of `M'_{1/2}`: `sqrt(2T/pi) (ln T - 2)` for `a = 0` and finite `T`;
/// `-(gamma_E + ln(2 a^2)) / a` on the infinite horizon.
pub fn m_deriv_closed(spec: &FunctionalSpec) -> Result<f64> {
    expect_family(spec, Family::M)?;
    match spec.horizon {
        Horizon::Finite(t) if spec.a == 0.0 => Ok((2.0 * t / PI).sqrt() * (t.ln() - 2.0)),
        Horizon::Infinite => {
            let a = spec.a;
            Ok(-(EULER_GAMMA + (2.0 * a * a).ln()) / a)
        }
        Horizon::Finite(_) => Err(Error::Unsupported(format!(
            "no closed form for M' on a finite horizon with a = {} != 0",
            spec.a
        ))),
    }
}

/// Closed form of `P'_{1/2}(inf, a) = -2a/(a-1) (1 + 2 (a-2) acoth(1 - 2a))` for `a > 1`.
pub fn p_deriv_closed(spec: &FunctionalSpec) -> Result<f64> {
    expect_family(spec, Family::P)?;
    match spec.horizon {
        Horizon::Infinite => {
            let a = spec.a;
            Ok(-2.0 * a / (a - 1.0) * (1.0 + 2.0 * (a - 2.0) * acoth(1.0 - 2.0 * a)?))
        }
        Horizon::Finite(_) => Err(Error::Unsupported(
            "no closed form for P' on a finite horizon".into(),
        )),
    }
}

/// `M_{1/2}(T, a) = int int y p(t, y; T, a) dy dt`.
pub fn m_value_half(spec: &FunctionalSpec, cfg: &QuadConfig) -> Result<QuadResult> {
    expect_family(spec, Family::M)?;
    integrate_weighted(Kernel::MValue, spec, cfg)
}

/// `P_{1/2}(T, a) = int int e^{sqrt 2 y} p(t, y; T, a / sqrt 2) dy dt`.
pub fn p_value_half(spec: &FunctionalSpec, cfg: &QuadConfig) -> Result<QuadResult> {
    expect_family(spec, Family::P)?;
    integrate_weighted(Kernel::PValue, spec, cfg)
}

/// `P'_{1/2}(T, 1) / T`, whose large-`T` limit is `-2 gamma_E`.
pub fn wills_rate_deriv(t: f64, cfg: &QuadConfig) -> Result<QuadResult> {
    let spec = FunctionalSpec::new(Family::P, Horizon::finite(t)?, 1.0, Method::Quadrature)?;
    let d = p_deriv(&spec, cfg)?;
    Ok(QuadResult { value: d.value / t, err_est: d.err_est / t, evals: d.evals })
}

fn expect_family(spec: &FunctionalSpec, family: Family) -> Result<()> {
    // Re-validate: the fields are public.
    FunctionalSpec::new(spec.family, spec.horizon, spec.a, spec.method)?;
    if spec.family != family {
        return Err(Error::Config(format!("expected family {family}, got {}", spec.family)));
    }
    Ok(())
}

fn derivative_result(r: QuadResult, spec: &FunctionalSpec, method: Method) -> DerivativeResult {
    DerivativeResult { value: r.value, err_est: r.err_est, method, spec: *spec, evals: r.evals }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Kernel {
    MValue,
    MDeriv,
    PValue,
    PDeriv,
}

impl Kernel {
    fn is_p(self) -> bool {
        matches!(self, Kernel::PValue | Kernel::PDeriv)
    }
}

fn integrate_weighted(kernel: Kernel, spec: &FunctionalSpec, cfg: &QuadConfig) -> Result<QuadResult> {
    let a = spec.a;
    // Drift of the underlying Brownian motion and the exponential tilt in y.
    let (drift, tilt) = if kernel.is_p() { (a / SQRT_2, SQRT_2) } else { (a, 0.0) };
    // Inner mode of e^{tilt y} p(t, y): y* = t (tilt - drift).
    let slope = tilt - drift;
    let i_cfg = QuadConfig::default().with_rel_tol(1e-12).with_abs_tol(1e-300);
    let log_density = |t: Abscissa, y: f64| -> f64 {
        let lp = match spec.horizon {
            Horizon::Finite(_) => log_joint_density_finite(t.x, t.from_hi, y, drift),
            Horizon::Infinite => log_joint_density_infinite(t.x, y, drift),
        };
        lp.map(|v| v + tilt * y).unwrap_or(f64::NAN)
    };
    let bridge = |t: f64, y: f64| -> f64 {
        let pt = match BridgePoint::new(t, y) {
            Ok(pt) => pt,
            Err(_) => return f64::NAN,
        };
        match i_functional(pt, &i_cfg) {
            Ok(r) => r.value,
            Err(e) => e.best_effort().map_or(f64::NAN, |r| r.value),
        }
    };
    let f = |t: Abscissa, y: Abscissa| -> f64 {
        let (tt, yy) = (t.x, y.x);
        let ld = log_density(t, yy);
        if ld.is_nan() {
            return f64::NAN;
        }
        // Weights are at most polynomial in (t, y); below this the product underflows anyway.
        if ld < -745.0 {
            return 0.0;
        }
        let dens = ld.exp();
        let lt = tt.ln();
        let w = match kernel {
            Kernel::MValue => yy,
            Kernel::PValue => 1.0,
            Kernel::MDeriv => yy * (1.0 + lt) + a * tt * lt - bridge(tt, yy),
            Kernel::PDeriv => SQRT_2 * (yy * (1.0 + lt) - drift * tt * lt - bridge(tt, yy)),
        };
        w * dens
    };
    let inner = |t: Abscissa| -> Vec<Domain> {
        let tt = t.x;
        let width = tt.sqrt();
        let mode = (slope * tt).max(0.0);
        let lo = (mode - 10.0 * width).max(0.0);
        let hi = mode + width;
        let mut pieces = vec![Domain::finite(lo, hi), Domain::semi_infinite(hi, width)];
        if lo > 0.0 {
            pieces.push(Domain::finite(0.0, lo));
        }
        pieces
    };
    let lo_hint = match kernel {
        Kernel::MDeriv | Kernel::PDeriv => EndpointHint::Logarithmic,
        _ => EndpointHint::AlgebraicSingularity(-0.5),
    };
    let outer = match spec.horizon {
        Horizon::Finite(t) => Domain::finite(0.0, t).with_hints(lo_hint, EndpointHint::AlgebraicSingularity(-0.5)),
        Horizon::Infinite => Domain::semi_infinite(0.0, (1.0 / outer_decay_rate(kernel, a)).min(50.0))
            .with_hints(lo_hint, EndpointHint::Regular),
    };
    let mut outer_cfg = *cfg;
    if kernel.is_p() && spec.horizon.is_infinite() && a < 1.2 {
        outer_cfg.max_evals = outer_cfg.max_evals.saturating_mul(4);
    }
    integrate_2d(f, &outer, inner, &outer_cfg)
}

// Exponential decay rate in t of the y-marginal of the integrand on the infinite horizon.
fn outer_decay_rate(kernel: Kernel, a: f64) -> f64 {
    if kernel.is_p() {
        if a < 2.0 {
            a - 1.0
        } else {
            a * a / 4.0
        }
    } else {
        a * a / 2.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(family: Family, horizon: Horizon, a: f64) -> FunctionalSpec {
        FunctionalSpec::new(family, horizon, a, Method::Quadrature).unwrap()
    }

    fn cfg() -> QuadConfig {
        QuadConfig::default().with_rel_tol(1e-8)
    }

    #[test]
    fn admissibility() {
        assert!(FunctionalSpec::new(Family::M, Horizon::Infinite, 0.0, Method::Quadrature).is_err());
        assert!(FunctionalSpec::new(Family::P, Horizon::Infinite, 1.0, Method::Quadrature).is_err());
        assert!(FunctionalSpec::new(Family::P, Horizon::Infinite, 1.0001, Method::Quadrature).is_ok());
        assert!(FunctionalSpec::new(Family::P, Horizon::Finite(1.0), -3.0, Method::Quadrature).is_ok());
        let e = FunctionalSpec::new(Family::P, Horizon::Infinite, 0.5, Method::Quadrature).unwrap_err();
        assert!(matches!(e, Error::Admissibility(_)));
    }

    #[test]
    fn closed_form_examples() {
        let e2 = spec(Family::M, Horizon::Finite(std::f64::consts::E.powi(2)), 0.0);
        assert!(m_deriv_closed(&e2).unwrap().abs() < 1e-15);
        let m = spec(Family::M, Horizon::Infinite, 1.0 / SQRT_2);
        assert!((m_deriv_closed(&m).unwrap() + SQRT_2 * EULER_GAMMA).abs() < 1e-14);
        let m1 = spec(Family::M, Horizon::Infinite, 1.0);
        assert!((m_deriv_closed(&m1).unwrap() + 1.270_362_845_461_478_2).abs() < 1e-14);
        let m4 = spec(Family::M, Horizon::Finite(4.0), 0.0);
        assert!((m_deriv_closed(&m4).unwrap() - (8.0 / PI).sqrt() * (4f64.ln() - 2.0)).abs() < 1e-15);
        let p2 = spec(Family::P, Horizon::Infinite, 2.0);
        assert_eq!(p_deriv_closed(&p2).unwrap(), -4.0);
        let p15 = spec(Family::P, Horizon::Infinite, 1.5);
        assert!((p_deriv_closed(&p15).unwrap() + 9.295_836_866_004_33).abs() < 1e-12);
        let p4 = spec(Family::P, Horizon::Infinite, 4.0);
        assert!((p_deriv_closed(&p4).unwrap() + 1.132_362_280_257_168_5).abs() < 1e-13);
        assert!(m_deriv_closed(&spec(Family::M, Horizon::Finite(1.0), 0.5)).is_err());
        assert!(p_deriv_closed(&spec(Family::P, Horizon::Finite(1.0), 2.0)).is_err());
    }

    #[test]
    fn closed_form_p_matches_logarithmic_expression() {
        // acoth(1 - 2a) = 0.5 ln((a - 1)/a) for a > 1.
        for &a in &[1.1, 1.5, 3.0, 7.0] {
            let s = spec(Family::P, Horizon::Infinite, a);
            let via_log = -2.0 * a / (a - 1.0) * (1.0 + (a - 2.0) * ((a - 1.0) / a).ln());
            assert!((p_deriv_closed(&s).unwrap() - via_log).abs() < 1e-12 * via_log.abs());
        }
    }

    #[test]
    fn level_values() {
        let c = cfg();
        let m = m_value_half(&spec(Family::M, Horizon::Finite(1.0), 0.0), &c).unwrap();
        assert!((m.value - (2.0 / PI).sqrt()).abs() < 1e-7, "{m:?}");
        let m = m_value_half(&spec(Family::M, Horizon::Infinite, 1.0), &c).unwrap();
        assert!((m.value - 0.5).abs() < 1e-7, "{m:?}");
        for &a in &[1.5, 2.0, 4.0] {
            let p = p_value_half(&spec(Family::P, Horizon::Infinite, a), &c).unwrap();
            assert!((p.value * (a - 1.0) / a - 1.0).abs() < 1e-7, "a={a}: {p:?}");
        }
    }

    #[test]
    fn finite_level_value_with_drift_matches_reflection_formula() {
        // E sup_{[0,T]} (B - a t) = int_0^inf P(sup > y) dy with the first-passage law.
        use crate::quadrature::integrate_semi_infinite;
        use crate::specfun::erfc;
        let (big_t, a): (f64, f64) = (2.0, 0.7);
        let tail = |y: f64| {
            let s = big_t.sqrt();
            0.5 * erfc((y + a * big_t) / (SQRT_2 * s)) + 0.5 * (-2.0 * a * y).exp() * erfc((y - a * big_t) / (SQRT_2 * s))
        };
        let want = integrate_semi_infinite(tail, 0.0, &QuadConfig::default().with_rel_tol(1e-12)).unwrap().value;
        let got = m_value_half(&spec(Family::M, Horizon::Finite(big_t), a), &cfg()).unwrap().value;
        assert!((got - want).abs() < 1e-7 * want, "{got} vs {want}");
    }

    #[test]
    fn m_deriv_zero_drift() {
        let s = spec(Family::M, Horizon::Finite(1.0), 0.0);
        let d = m_deriv(&s, &cfg()).unwrap();
        let want = m_deriv_closed(&s).unwrap();
        assert!(((d.value - want) / want).abs() < 1e-6, "{d:?} vs {want}");
    }

    #[test]
    fn p_deriv_infinite_at_two() {
        let s = spec(Family::P, Horizon::Infinite, 2.0);
        let d = p_deriv(&s, &cfg()).unwrap();
        assert!(((d.value + 4.0) / 4.0).abs() < 1e-6, "{d:?}");
    }

    #[test]
    fn wrong_family_is_rejected() {
        let s = spec(Family::P, Horizon::Infinite, 2.0);
        assert!(m_deriv(&s, &cfg()).is_err());
        assert!(m_value_half(&s, &cfg()).is_err());
    }

    #[test]
    fn small_horizon_rate_is_finite() {
        let r = wills_rate_deriv(0.01, &cfg()).unwrap();
        assert!(r.value.is_finite());
    }
}
