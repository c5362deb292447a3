//! The Bessel-bridge functional
//! `I(t, y) = E[ int_0^t (Y(t) - Y(t - s)) / s ds | argmax t, supremum y ]`.
//!
//! The primary route integrates the reduced one-dimensional form
//! `sqrt(2/pi) (t/y) int_0^inf G(y q / sqrt t) / (q (1 + q^2)^2) dq`, whose inner
//! integral is the closed form `G`. The literal double integral is kept as an oracle.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{integrate_2d, integrate_domain, Abscissa, Domain, QuadConfig, QuadResult};
use crate::specfun::erf;

const SQRT_2PI: f64 = 2.506_628_274_631_000_5;
// Below this q the integrand is replaced by its limit.
const Q_PATCH: f64 = 1e-10;

/// Argmax time and supremum value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BridgePoint {
    pub t: f64,
    pub y: f64,
}

impl BridgePoint {
    pub fn new(t: f64, y: f64) -> Result<Self> {
        if t > 0.0 && y > 0.0 && t.is_finite() && y.is_finite() {
            Ok(BridgePoint { t, y })
        } else {
            Err(Error::Domain(format!("bridge point needs t > 0 and y > 0, got ({t}, {y})")))
        }
    }
}

/// `G(b) = int_0^inf x^2 (e^{-(x-b)^2/2} - e^{-(x+b)^2/2}) dx`
/// `     = 2b e^{-b^2/2} + (1 + b^2) sqrt(2 pi) erf(b / sqrt 2)`.
pub fn inner_closed_form(b: f64) -> f64 {
    2.0 * b * (-0.5 * b * b).exp() + (1.0 + b * b) * SQRT_2PI * erf(b / std::f64::consts::SQRT_2)
}

/// The reduced q-integrand `G(y q / sqrt t) / (q (1 + q^2)^2)`, with its limit
/// `4 y / sqrt t` below `q = 1e-10`.
pub fn reduced_integrand(q: f64, pt: BridgePoint) -> f64 {
    let r = pt.y / pt.t.sqrt();
    if q < Q_PATCH {
        return 4.0 * r;
    }
    let w = 1.0 + q * q;
    inner_closed_form(r * q) / (q * w * w)
}

/// `I(t, y)` through the reduced one-dimensional integral.
pub fn i_functional(pt: BridgePoint, cfg: &QuadConfig) -> Result<QuadResult> {
    let pre = (2.0 / PI).sqrt() * pt.t / pt.y;
    // The integrand turns over near q ~ sqrt(t)/y and decays like q^{-3} beyond max(1, that).
    let knee = (pt.t.sqrt() / pt.y).min(1.0);
    let dom = Domain::semi_infinite(0.0, knee);
    let r = integrate_domain(|ab: Abscissa| reduced_integrand(ab.x, pt), &dom, cfg);
    scale(r, pre)
}

/// `I(t, y)` through the literal double integral over `(q, x)`.
pub fn i_oracle_2d(pt: BridgePoint, cfg: &QuadConfig) -> Result<QuadResult> {
    let pre = (2.0 / PI).sqrt() * pt.t / pt.y;
    let r = pt.y / pt.t.sqrt();
    let knee = (pt.t.sqrt() / pt.y).min(1.0);
    let outer = Domain::semi_infinite(0.0, knee);
    let f = |q: Abscissa, x: Abscissa| {
        let (q, x) = (q.x, x.x);
        let b = r * q;
        let w = 1.0 + q * q;
        // e^{-(x-b)^2/2} - e^{-(x+b)^2/2} = e^{-(x-b)^2/2} (1 - e^{-2xb})
        let d = x - b;
        let diff = (-0.5 * d * d).exp() * -(-2.0 * x * b).exp_m1();
        x * x * diff / (q * w * w)
    };
    let inner = |q: Abscissa| {
        // Bracket the unit-width bump at x = b so that no piece can step over it.
        let b = r * q.x;
        if b > 1e12 {
            // The outer weight G(b)/q^5 is below 1e-30 of the total here.
            return Vec::new();
        }
        let lo = (b - 10.0).max(0.0);
        let mut pieces = vec![Domain::finite(lo, b + 1.0), Domain::semi_infinite(b + 1.0, 1.0)];
        if lo > 0.0 {
            pieces.push(Domain::finite(0.0, lo));
        }
        pieces
    };
    scale(integrate_2d(f, &outer, inner, cfg), pre)
}

fn scale(r: Result<QuadResult>, c: f64) -> Result<QuadResult> {
    let apply = |q: QuadResult| QuadResult {
        value: q.value * c,
        err_est: q.err_est * c.abs(),
        evals: q.evals,
    };
    match r {
        Ok(q) => Ok(apply(q)),
        Err(Error::AccuracyNotReached { best }) => Err(Error::AccuracyNotReached { best: apply(best) }),
        Err(e) => Err(e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::integrate_semi_infinite;

    fn cfg() -> QuadConfig {
        QuadConfig::default().with_rel_tol(1e-11)
    }

    fn i(t: f64, y: f64) -> f64 {
        i_functional(BridgePoint::new(t, y).unwrap(), &cfg()).unwrap().value
    }

    #[test]
    fn reference_value() {
        // Independent evaluation with a separate spline-free quadrature in double precision.
        assert!((i(1.0, 1.0) - 2.803_816_025_3).abs() < 1e-9);
    }

    #[test]
    fn small_q_limit() {
        let pt = BridgePoint::new(1.0, 1.0).unwrap();
        let v = reduced_integrand(1e-8, pt);
        assert!((v - 4.0).abs() < 1e-6);
        assert_eq!(reduced_integrand(1e-12, pt), 4.0);
    }

    #[test]
    fn inner_closed_form_matches_quadrature() {
        for &b in &[0.1, 1.0, 5.0] {
            let f = |x: f64| {
                let d = x - b;
                x * x * (-0.5 * d * d).exp() * -(-2.0 * x * b).exp_m1()
            };
            let direct = integrate_semi_infinite(f, 0.0, &QuadConfig::default().with_rel_tol(1e-12)).unwrap();
            let closed = inner_closed_form(b);
            assert!(((direct.value - closed) / closed).abs() < 1e-10, "b={b}");
        }
    }

    #[test]
    fn scaling_law() {
        for &(t, y, c) in &[(1.0, 1.0, 4.0), (2.0, 1.5, 9.0), (0.3, 2.0, 0.25)] {
            let lhs = i(c * t, c.sqrt() * y);
            let rhs = c.sqrt() * i(t, y);
            assert!(((lhs - rhs) / rhs).abs() < 1e-8, "(t,y,c)=({t},{y},{c})");
        }
    }

    #[test]
    fn increasing_in_t() {
        for &y in &[0.5, 1.0, 2.0] {
            let v: Vec<f64> = [0.5, 1.0, 2.0].iter().map(|&t| i(t, y)).collect();
            assert!(v[0] < v[1] && v[1] < v[2], "y={y}: {v:?}");
        }
    }

    #[test]
    fn oracle_agrees_and_is_positive() {
        let c = QuadConfig::default().with_rel_tol(1e-9);
        for &(t, y) in &[(1.0, 1.0), (0.5, 2.0), (2.0, 0.5)] {
            let pt = BridgePoint::new(t, y).unwrap();
            let o = i_oracle_2d(pt, &c).unwrap().value;
            let p = i_functional(pt, &c).unwrap().value;
            assert!(o > 0.0);
            assert!(((o - p) / p).abs() < 1e-7, "({t},{y}): {o} vs {p}");
        }
    }

    #[test]
    fn bad_point() {
        assert!(BridgePoint::new(0.0, 1.0).is_err());
        assert!(BridgePoint::new(1.0, -1.0).is_err());
    }
}
