//! The acceptance suite: closed-form, quadrature and Monte Carlo cross-checks,
//! each reported as measured against expected with its bound.

use std::f64::consts::{FRAC_PI_8, PI};
use std::fmt;

use serde::Serialize;

use crate::bessel_bridge::{i_functional, i_oracle_2d, BridgePoint};
use crate::densities::{integrate_joint, DriftedSpec, Horizon};
use crate::error::Result;
use crate::functionals::{deriv, m_value_half, p_value_half, wills_rate_deriv, Family, FunctionalSpec, Method};
use crate::pwz_sim::{
    mc_coupled_fd, mc_deriv_direct, mc_level, pwz_deriv_eval, pwz_eval, sample_brownian, truncation_horizon,
    FieldEngine, GridShape, McConfig, McEstimate,
};
use crate::quadrature::{integrate_domain, Abscissa, Domain, EndpointHint, QuadConfig};
use crate::specfun::{d_derivatives_at_half, d_of_h, HurstParam, EULER_GAMMA};

/// Which criteria to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Level {
    /// Deterministic criteria only.
    Fast,
    /// Everything, including the Monte Carlo runs.
    Full,
}

/// Deliberate defects for exercising the failure path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Fault {
    /// Normalization integrates the negated joint density.
    WrongSignDensity,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ValidationOptions {
    pub level: Level,
    pub seed: u64,
    pub n_paths: usize,
    pub fault: Option<Fault>,
}

impl ValidationOptions {
    pub fn new(level: Level, seed: u64) -> Self {
        ValidationOptions { level, seed, n_paths: 100_000, fault: None }
    }
}

/// One comparison, normally passed iff `deviation <= bound`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub label: String,
    pub measured: f64,
    pub expected: f64,
    pub deviation: f64,
    pub bound: f64,
    pub passed: bool,
    pub note: Option<String>,
}

impl Check {
    fn new(label: impl Into<String>, measured: f64, expected: f64, deviation: f64, bound: f64) -> Self {
        Check {
            label: label.into(),
            measured,
            expected,
            deviation,
            bound,
            passed: deviation <= bound,
            note: None,
        }
    }

    fn rel(label: impl Into<String>, measured: f64, expected: f64, tol: f64) -> Self {
        Check::new(label, measured, expected, ((measured - expected) / expected).abs(), tol)
    }

    fn abs(label: impl Into<String>, measured: f64, expected: f64, tol: f64) -> Self {
        Check::new(label, measured, expected, (measured - expected).abs(), tol)
    }

    fn failed(label: impl Into<String>, expected: f64, err: impl fmt::Display) -> Self {
        Check {
            label: label.into(),
            measured: f64::NAN,
            expected,
            deviation: f64::NAN,
            bound: 0.0,
            passed: false,
            note: Some(err.to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriterionReport {
    pub id: u32,
    pub title: String,
    pub checks: Vec<Check>,
}

impl CriterionReport {
    pub fn passed(&self) -> bool {
        !self.checks.is_empty() && self.checks.iter().all(|c| c.passed)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub level: Level,
    pub seed: u64,
    pub criteria: Vec<CriterionReport>,
}

impl ValidationReport {
    pub fn all_passed(&self) -> bool {
        self.criteria.iter().all(CriterionReport::passed)
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.criteria {
            let tag = if c.passed() { "PASS" } else { "FAIL" };
            writeln!(f, "[{tag}] criterion {:>2}: {}", c.id, c.title)?;
            for k in &c.checks {
                write!(
                    f,
                    "    {} {}: measured {:.17e}, expected {:.17e}, deviation {:.3e}, bound {:.3e}",
                    if k.passed { "ok  " } else { "FAIL" },
                    k.label,
                    k.measured,
                    k.expected,
                    k.deviation,
                    k.bound
                )?;
                if let Some(n) = &k.note {
                    write!(f, " ({n})")?;
                }
                writeln!(f)?;
            }
        }
        let passed = self.criteria.iter().filter(|c| c.passed()).count();
        writeln!(f, "{passed}/{} criteria passed", self.criteria.len())
    }
}

/// Criterion identifiers run at each level.
pub fn criteria_for(level: Level) -> Vec<u32> {
    match level {
        Level::Fast => vec![1, 2, 3, 4, 5, 6, 7, 8, 9, 11, 12],
        Level::Full => (1..=13).collect(),
    }
}

/// Runs every criterion of the level, in order.
pub fn run(opts: &ValidationOptions) -> ValidationReport {
    let criteria = criteria_for(opts.level).into_iter().map(|id| run_criterion(id, opts)).collect();
    ValidationReport { level: opts.level, seed: opts.seed, criteria }
}

/// Runs one criterion by number (1 to 13).
pub fn run_criterion(id: u32, opts: &ValidationOptions) -> CriterionReport {
    let (title, checks) = match id {
        1 => ("finite-horizon M' at a = 0 against sqrt(2T/pi)(ln T - 2)", c1()),
        2 => ("infinite-horizon M' against -(gamma + ln 2a^2)/a", c2()),
        3 => ("infinite-horizon P' against the acoth closed form", c3()),
        4 => ("joint density normalization", c4(opts.fault)),
        5 => ("Bessel-bridge functional: reduced form against double integral, scaling", c5()),
        6 => ("quadrature test integrals", c6()),
        7 => ("level values at H = 1/2 against classical laws", c7()),
        8 => ("numerical derivatives of D(H) at 1/2", c8()),
        9 => ("field at H = 1/2 reproduces the path", c9(opts.seed)),
        10 => ("Monte Carlo level and derivative estimators at T = 1, a = 0", c10(opts)),
        11 => ("pathwise Richardson ratio of H-differences against the derivative field", c11(opts.seed)),
        12 => ("P'(T, 1)/T approaches -2 gamma", c12()),
        13 => ("P_H(inf, 2) decreases from H = 0.4 to H = 0.6", c13(opts)),
        _ => ("unknown criterion", vec![Check::failed("id", f64::NAN, format!("no criterion {id}"))]),
    };
    CriterionReport { id, title: title.to_string(), checks }
}

fn quad_cfg() -> QuadConfig {
    QuadConfig::default().with_rel_tol(1e-10)
}

fn deriv_check(label: String, family: Family, horizon: Horizon, a: f64, expected: f64, tol: f64) -> Check {
    let r = FunctionalSpec::new(family, horizon, a, Method::Quadrature).and_then(|s| deriv(&s, &quad_cfg()));
    match r {
        Ok(d) => Check::rel(label, d.value, expected, tol),
        Err(e) => Check::failed(label, expected, e),
    }
}

fn c1() -> Vec<Check> {
    [0.25, 1.0, 4.0]
        .iter()
        .map(|&t: &f64| {
            let want = (2.0 * t / PI).sqrt() * (t.ln() - 2.0);
            deriv_check(format!("T = {t}"), Family::M, Horizon::Finite(t), 0.0, want, 1e-6)
        })
        .collect()
}

fn c2() -> Vec<Check> {
    [0.5, 1.0, 2.0]
        .iter()
        .map(|&a: &f64| {
            let want = -(EULER_GAMMA + (2.0 * a * a).ln()) / a;
            deriv_check(format!("a = {a}"), Family::M, Horizon::Infinite, a, want, 1e-6)
        })
        .collect()
}

fn c3() -> Vec<Check> {
    [1.5, 2.0, 4.0]
        .iter()
        .map(|&a: &f64| {
            let want = if a == 2.0 {
                -4.0
            } else {
                // acoth(1 - 2a) = 0.5 ln((a - 1) / a)
                -2.0 * a / (a - 1.0) * (1.0 + (a - 2.0) * ((a - 1.0) / a).ln())
            };
            deriv_check(format!("a = {a}"), Family::P, Horizon::Infinite, a, want, 1e-6)
        })
        .collect()
}

fn c4(fault: Option<Fault>) -> Vec<Check> {
    let specs = [
        (Horizon::Finite(1.0), 0.0),
        (Horizon::Finite(1.0), 1.0),
        (Horizon::Finite(1.0), -1.0),
        (Horizon::Finite(2.0), 0.5),
        (Horizon::Infinite, 0.5),
        (Horizon::Infinite, 1.0),
        (Horizon::Infinite, 2.0),
    ];
    let sign = if fault == Some(Fault::WrongSignDensity) { -1.0 } else { 1.0 };
    specs
        .iter()
        .map(|&(h, a)| {
            let label = format!("T = {h}, a = {a}");
            let r = DriftedSpec::new(h, a).and_then(|s| integrate_joint(&s, |_, _, p| sign * p, &quad_cfg()));
            match r {
                Ok(m) => Check::abs(label, m.value, 1.0, 1e-7),
                Err(e) => Check::failed(label, 1.0, e),
            }
        })
        .collect()
}

fn c5() -> Vec<Check> {
    let cfg = QuadConfig::default().with_rel_tol(1e-9);
    let fine = QuadConfig::default().with_rel_tol(1e-11);
    let mut out = Vec::new();
    for &t in &[0.5, 1.0, 2.0] {
        for &y in &[0.5, 1.0, 2.0] {
            let label = format!("I({t}, {y})");
            let r = BridgePoint::new(t, y).and_then(|p| Ok((i_functional(p, &cfg)?, i_oracle_2d(p, &cfg)?)));
            out.push(match r {
                Ok((reduced, oracle)) => Check::rel(label, reduced.value, oracle.value, 1e-6),
                Err(e) => Check::failed(label, f64::NAN, e),
            });
        }
    }
    for &(t, y, c) in &[(1.0, 1.0, 4.0), (2.0, 1.5, 9.0), (0.3, 2.0, 0.25)] {
        let label = format!("I({c} * {t}, sqrt({c}) * {y}) / sqrt({c})");
        let r = (|| -> Result<(f64, f64)> {
            let lhs = i_functional(BridgePoint::new(c * t, c.sqrt() * y)?, &fine)?.value;
            let rhs = i_functional(BridgePoint::new(t, y)?, &fine)?.value;
            Ok((lhs / c.sqrt(), rhs))
        })();
        out.push(match r {
            Ok((l, r)) => Check::rel(label, l, r, 1e-8),
            Err(e) => Check::failed(label, f64::NAN, e),
        });
    }
    out
}

fn c6() -> Vec<Check> {
    let cfg = QuadConfig::default().with_rel_tol(1e-12);
    let log_dom = Domain::finite(0.0, 1.0).with_hints(EndpointHint::Logarithmic, EndpointHint::AlgebraicSingularity(-0.5));
    let want1 = 4.0 * 2f64.ln() - 4.0;
    let first = integrate_domain(|s: Abscissa| s.x.ln() / s.from_hi.sqrt(), &log_dom, &cfg);
    let want2 = FRAC_PI_8;
    let second = integrate_domain(
        |q: Abscissa| {
            let w = 1.0 + q.x * q.x;
            q.x * q.x.atan() / (w * w)
        },
        &Domain::semi_infinite(0.0, 1.0),
        &cfg,
    );
    vec![
        match first {
            Ok(r) => Check::abs("int_0^1 ln s / sqrt(1 - s) ds", r.value, want1, 1e-10),
            Err(e) => Check::failed("int_0^1 ln s / sqrt(1 - s) ds", want1, e),
        },
        match second {
            Ok(r) => Check::abs("int_0^inf q atan q / (1 + q^2)^2 dq", r.value, want2, 1e-10),
            Err(e) => Check::failed("int_0^inf q atan q / (1 + q^2)^2 dq", want2, e),
        },
    ]
}

fn c7() -> Vec<Check> {
    let cfg = quad_cfg();
    let cases = [
        ("M(1, 0)", Family::M, Horizon::Finite(1.0), 0.0, (2.0 / PI).sqrt()),
        ("M(inf, 1)", Family::M, Horizon::Infinite, 1.0, 0.5),
        ("P(inf, 2)", Family::P, Horizon::Infinite, 2.0, 2.0),
    ];
    cases
        .iter()
        .map(|&(label, fam, h, a, want)| {
            let r = FunctionalSpec::new(fam, h, a, Method::Quadrature).and_then(|s| match fam {
                Family::M => m_value_half(&s, &cfg),
                Family::P => p_value_half(&s, &cfg),
            });
            match r {
                Ok(v) => Check::rel(label, v.value, want, 1e-6),
                Err(e) => Check::failed(label, want, e),
            }
        })
        .collect()
}

/// `n`-th derivative at `x` from central stencils with steps `h` and `h/2`,
/// combined by one Richardson step (error `O(h^4)`).
pub fn richardson_derivative(f: impl Fn(f64) -> f64, x: f64, n: u32, h: f64) -> f64 {
    let stencil = |h: f64| match n {
        1 => (f(x + h) - f(x - h)) / (2.0 * h),
        2 => (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h),
        3 => (f(x + 2.0 * h) - 2.0 * f(x + h) + 2.0 * f(x - h) - f(x - 2.0 * h)) / (2.0 * h * h * h),
        _ => f64::NAN,
    };
    (4.0 * stencil(0.5 * h) - stencil(h)) / 3.0
}

fn c8() -> Vec<Check> {
    let d = |h: f64| d_of_h(HurstParam::new(h).expect("h near 1/2"));
    (1..=3)
        .map(|n| {
            let label = format!("D^({n})(1/2)");
            match d_derivatives_at_half(n) {
                Ok(want) => Check::abs(label, richardson_derivative(d, 0.5, n, 0.01), want, 1e-5),
                Err(e) => Check::failed(label, f64::NAN, e),
            }
        })
        .collect()
}

fn c9(seed: u64) -> Vec<Check> {
    let shape = match GridShape::new(1.0, 10_000) {
        Ok(s) => s,
        Err(e) => return vec![Check::failed("grid", 0.0, e)],
    };
    let path = sample_brownian(&shape, seed, 0);
    let b = path.positive_values();
    let fast = FieldEngine::new(&shape).value(&path, HurstParam::HALF);
    let mut direct = 0.0f64;
    let mut grid = 0.0f64;
    for m in 1..=shape.n_steps {
        let t = m as f64 * shape.step();
        let x = pwz_eval(&path, HurstParam::HALF, t).unwrap_or(f64::NAN);
        direct = direct.max((x - b[m]).abs());
        grid = grid.max((fast[m] - b[m]).abs());
    }
    vec![
        Check::new("pointwise evaluation, max |X - B|", direct, 0.0, direct, 1e-12),
        Check::new("grid evaluation, max |X - B|", grid, 0.0, grid, 1e-12),
    ]
}

fn mc_check(label: &str, r: Result<McEstimate>, want: f64, bound: impl Fn(&McEstimate) -> f64) -> (Check, Option<McEstimate>) {
    match r {
        Ok(e) => {
            let mut c = Check::abs(label, e.mean, want, bound(&e));
            c.note = Some(format!("stderr {:.3e}, {} paths", e.stderr, e.n));
            (c, Some(e))
        }
        Err(err) => (Check::failed(label, want, err), None),
    }
}

fn c10(opts: &ValidationOptions) -> Vec<Check> {
    let cfg = McConfig::new(Horizon::Finite(1.0), HurstParam::HALF, opts.n_paths, opts.seed);
    let step = 1.0 / cfg.n_steps as f64;
    let level_want = (2.0 / PI).sqrt();
    let deriv_want = -2.0 * (2.0 / PI).sqrt();
    let (lv, _) = mc_check("level M(1, 0)", mc_level(&cfg, Family::M, 0.0), level_want, |e| {
        3.0 * e.stderr + 0.6 * step.sqrt()
    });
    let (fd, fd_est) = mc_check("coupled difference, delta = 0.01", mc_coupled_fd(&cfg, Family::M, 0.0, 0.01), deriv_want, |e| {
        (3.0 * e.stderr).max(0.05)
    });
    let (dd, dd_est) = mc_check("direct estimator", mc_deriv_direct(&cfg, 0.0), deriv_want, |e| (3.0 * e.stderr).max(0.05));
    let agree = match (fd_est, dd_est) {
        (Some(a), Some(b)) => {
            let sigma = (a.stderr * a.stderr + b.stderr * b.stderr).sqrt();
            Check::abs("difference vs direct", a.mean, b.mean, 3.0 * sigma)
        }
        _ => Check::failed("difference vs direct", f64::NAN, "an estimator failed"),
    };
    vec![lv, fd, dd, agree]
}

fn c11(seed: u64) -> Vec<Check> {
    let shape = match GridShape::new(1.0, 256) {
        Ok(s) => s,
        Err(e) => return vec![Check::failed("grid", 0.9, e)],
    };
    let hp = |h: f64| HurstParam::new(h).expect("h near 1/2");
    let n = 100;
    let mut inside = 0;
    for p in 0..n {
        let path = sample_brownian(&shape, seed, p);
        let x1 = pwz_deriv_eval(&path, HurstParam::HALF, 1.0).unwrap_or(f64::NAN);
        let cd = |d: f64| {
            let up = pwz_eval(&path, hp(0.5 + d), 1.0).unwrap_or(f64::NAN);
            let down = pwz_eval(&path, hp(0.5 - d), 1.0).unwrap_or(f64::NAN);
            (up - down) / (2.0 * d)
        };
        let ratio = (cd(0.02) - x1) / (cd(0.01) - x1);
        if (3.0..=5.0).contains(&ratio) {
            inside += 1;
        }
    }
    let frac = inside as f64 / n as f64;
    // Fraction of ratios in [3, 5] must reach 0.9.
    vec![Check::new("fraction of paths with ratio in [3, 5]", frac, 0.9, 0.9 - frac, 0.0)]
}

fn c12() -> Vec<Check> {
    let limit = -2.0 * EULER_GAMMA;
    let cfg = quad_cfg();
    let mut out = Vec::new();
    let mut prev: Option<f64> = None;
    for &t in &[10.0, 50.0, 100.0] {
        let label = format!("T = {t}");
        match wills_rate_deriv(t, &cfg) {
            Ok(r) => {
                let gap = (r.value - limit).abs();
                let mut c = match prev {
                    Some(p) => {
                        let mut c = Check::new(format!("{label}, gap below previous"), r.value, limit, gap, p);
                        c.passed = gap < p;
                        c
                    }
                    None => Check::new(format!("{label}, gap"), r.value, limit, gap, f64::INFINITY),
                };
                c.note = Some(format!("error estimate {:.3e}", r.err_est));
                out.push(c);
                if t == 100.0 {
                    out.push(Check::abs(format!("{label}, within 0.1 of the limit"), r.value, limit, 0.1));
                }
                prev = Some(gap);
            }
            Err(e) => out.push(Check::failed(label, limit, e)),
        }
    }
    out
}

fn c13(opts: &ValidationOptions) -> Vec<Check> {
    let (lo, hi) = (0.4, 0.6);
    let trunc = match truncation_horizon(Family::P, 2.0, lo, hi) {
        Ok(t) => t,
        Err(e) => return vec![Check::failed("truncation", f64::NAN, e)],
    };
    // The same seed drives both runs: common random numbers.
    let run = |h: f64| {
        let cfg = McConfig::new(Horizon::Infinite, HurstParam::new(h)?, opts.n_paths, opts.seed)
            .with_n_steps(2048)
            .with_truncation(trunc);
        mc_level(&cfg, Family::P, 2.0)
    };
    match (run(lo), run(hi)) {
        (Ok(a), Ok(b)) => {
            let sigma = (a.stderr * a.stderr + b.stderr * b.stderr).sqrt();
            let mut c = Check::new("P_0.6 - P_0.4 against 3 combined stderr", b.mean, a.mean, b.mean - a.mean, 3.0 * sigma);
            c.note = Some(format!(
                "P_0.4 = {:.5} +- {:.5}, P_0.6 = {:.5} +- {:.5}, grid end {trunc:.3}",
                a.mean, a.stderr, b.mean, b.stderr
            ));
            vec![c]
        }
        (Err(e), _) | (_, Err(e)) => vec![Check::failed("P_H(inf, 2)", f64::NAN, e)],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn richardson_recovers_polynomial_derivatives() {
        let f = |x: f64| x.powi(5);
        assert!((richardson_derivative(|x: f64| x.powi(4), 1.0, 1, 0.1) - 4.0).abs() < 1e-10);
        assert!((richardson_derivative(f, 1.0, 2, 0.1) - 20.0).abs() < 1e-9);
        assert!((richardson_derivative(f, 1.0, 3, 0.1) - 60.0).abs() < 1e-8);
    }

    #[test]
    fn d_derivatives_pass() {
        let r = run_criterion(8, &ValidationOptions::new(Level::Fast, 1));
        assert!(r.passed(), "{r:?}");
    }

    #[test]
    fn wrong_sign_density_fails() {
        let opts = ValidationOptions { fault: Some(Fault::WrongSignDensity), ..ValidationOptions::new(Level::Fast, 1) };
        assert!(!run_criterion(4, &opts).passed());
    }

    #[test]
    fn unknown_criterion_fails() {
        assert!(!run_criterion(14, &ValidationOptions::new(Level::Fast, 1)).passed());
    }

    #[test]
    fn levels() {
        assert_eq!(criteria_for(Level::Full).len(), 13);
        assert!(!criteria_for(Level::Fast).contains(&10));
    }
}
