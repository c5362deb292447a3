//! Monte Carlo on the Mandelbrot-van Ness field driven by one two-sided Brownian path.
//!
//! A path is sampled on a uniform grid over `[-L, T]` with step `T / n` and on a
//! geometric grid over `[-S, -L]`. The field
//! `X_H(t) = int_{-S}^0 f_H(t, s) dB(s) + f_H(t, -S) B(-S) + int_0^t g_H(t, s) dB(s)`
//! is evaluated on the piecewise-linear interpolant of the path. Every `dB`-integral
//! then reduces to cell averages of the kernel against the path increments, which
//! is the Riemann-integral form of the field applied to the interpolant. The cell
//! averages have closed forms in `H`; their exact `H`-derivatives give the derivative
//! field, and at `H = 1/2` the field is the path itself.
//!
//! Near-field sums are causal convolutions, done by FFT. The far negative side is
//! analytic in `t` on `[0, T]` and is interpolated from Chebyshev points.

use std::f64::consts::SQRT_2;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::densities::Horizon;
use crate::error::{Error, Result};
use crate::functionals::{Family, FunctionalSpec, Method};
use crate::specfun::{d_of_h, HurstParam};

/// Neglected-mass level targeted by the horizon truncation of infinite-horizon runs.
pub const TRUNCATION_TOL: f64 = 1e-4;
// Tail constants C in P(argmax > T) <= C e^{-gamma T^beta}, calibrated on the
// exact argmax law of drifted Brownian motion (sup over T of the ratio, rounded up).
const TAIL_CONST_M: f64 = 0.85;
const TAIL_CONST_P: f64 = 0.80;

const DEFAULT_STEPS: usize = 1024;
const DEFAULT_NEG_FACTOR: f64 = 100.0;
const DEFAULT_GROWTH: f64 = 1.05;
const CHEB_POINTS: usize = 24;

/// Layout of the sampling grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridShape {
    /// `T`, the right end of the grid.
    pub pos_extent: f64,
    /// Number of uniform cells on `[0, T]`.
    pub n_steps: usize,
    /// Number of uniform cells on the negative side, left of 0.
    pub near_steps: usize,
    /// `S >= 0`, the left end is `-S`.
    pub neg_extent: f64,
    /// Ratio between consecutive far-side cell widths.
    pub growth: f64,
}

impl GridShape {
    /// Uniform grid on `[-T, T]` extended geometrically to `-100 T`.
    pub fn new(pos_extent: f64, n_steps: usize) -> Result<Self> {
        if !(pos_extent > 0.0 && pos_extent.is_finite()) || n_steps == 0 {
            return Err(Error::Config(format!(
                "grid needs T > 0 and at least one step, got T = {pos_extent}, n = {n_steps}"
            )));
        }
        Ok(GridShape {
            pos_extent,
            n_steps,
            near_steps: n_steps,
            neg_extent: DEFAULT_NEG_FACTOR * pos_extent,
            growth: DEFAULT_GROWTH,
        })
    }

    /// Same positive side with left end `-s`.
    pub fn with_neg_extent(mut self, s: f64) -> Result<Self> {
        if !(s >= 0.0 && s.is_finite()) {
            return Err(Error::Config(format!("negative extent must be finite and >= 0, got {s}")));
        }
        let step = self.step();
        self.neg_extent = s;
        self.near_steps = self.n_steps.min((s / step + 1e-9).floor() as usize);
        if (s - self.near_steps as f64 * step).abs() <= 1e-9 * step {
            self.neg_extent = self.near_steps as f64 * step;
        }
        Ok(self)
    }

    /// Same positive side, no negative side.
    pub fn one_sided(self) -> Self {
        GridShape { near_steps: 0, neg_extent: 0.0, ..self }
    }

    pub fn step(&self) -> f64 {
        self.pos_extent / self.n_steps as f64
    }

    /// Negative node times in increasing order, `-S` first, 0 excluded.
    fn negative_nodes(&self) -> Vec<f64> {
        let step = self.step();
        let near = self.near_steps as f64 * step;
        let mut dist = Vec::new();
        let mut cur = near;
        let mut width = step;
        while self.neg_extent - cur > 1e-12 * self.neg_extent {
            width *= self.growth;
            let next = cur + width;
            // Absorb a short remainder into the last cell.
            cur = if self.neg_extent - next < 0.5 * width { self.neg_extent } else { next };
            dist.push(cur);
        }
        let mut nodes: Vec<f64> = dist.iter().rev().map(|d| -d).collect();
        nodes.extend((1..=self.near_steps).rev().map(|k| -(k as f64) * step));
        nodes
    }

    fn positive_node_index(&self, t: f64) -> Result<usize> {
        if !(t > 0.0 && t <= self.pos_extent * (1.0 + 1e-12)) {
            return Err(Error::Domain(format!("time {t} is outside (0, {}]", self.pos_extent)));
        }
        let step = self.step();
        let m = (t / step).round();
        if (m * step - t).abs() > 1e-9 * t.max(step) {
            return Err(Error::Alignment { t, step });
        }
        Ok(m as usize)
    }
}

/// One sampled two-sided Brownian path.
#[derive(Debug, Clone, PartialEq)]
pub struct PathGrid {
    shape: GridShape,
    times: Vec<f64>,
    values: Vec<f64>,
    // increments[i] = B(times[i + 1]) - B(times[i]) as drawn.
    increments: Vec<f64>,
    origin: usize,
}

impl PathGrid {
    pub fn shape(&self) -> &GridShape {
        &self.shape
    }

    pub fn step(&self) -> f64 {
        self.shape.step()
    }

    pub fn pos_extent(&self) -> f64 {
        self.shape.pos_extent
    }

    pub fn neg_extent(&self) -> f64 {
        self.shape.neg_extent
    }

    /// All node times, increasing from `-S` to `T`.
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    /// Path values at [`PathGrid::times`].
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Index of the node at time 0.
    pub fn origin(&self) -> usize {
        self.origin
    }

    /// Values at `0, step, ..., T`.
    pub fn positive_values(&self) -> &[f64] {
        &self.values[self.origin..]
    }

    /// Index into [`PathGrid::positive_values`] of an aligned time in `(0, T]`.
    pub fn node_index(&self, t: f64) -> Result<usize> {
        self.shape.positive_node_index(t)
    }

    fn far_cells(&self) -> usize {
        self.origin - self.shape.near_steps
    }

    // Increments of the uniform cells on [-L, T].
    fn uniform_increments(&self) -> &[f64] {
        &self.increments[self.far_cells()..]
    }
}

/// Samples the path with index `path` of the run seeded by `seed`.
///
/// Increments are drawn from node 0 outward on each side, from two independent
/// counter-based streams, so a path depends on nothing but `(seed, path)`.
pub fn sample_brownian(shape: &GridShape, seed: u64, path: u64) -> PathGrid {
    let neg = shape.negative_nodes();
    let n = shape.n_steps;
    let step = shape.step();
    let origin = neg.len();
    let mut times = neg;
    times.extend((0..=n).map(|k| k as f64 * step));
    let mut values = vec![0.0; times.len()];
    let mut increments = vec![0.0; times.len() - 1];

    let mut rng = stream(seed, path, 0);
    let sd = step.sqrt();
    for k in 0..n {
        let z: f64 = StandardNormal.sample(&mut rng);
        let dz = sd * z;
        increments[origin + k] = dz;
        values[origin + k + 1] = values[origin + k] + dz;
    }
    let mut rng = stream(seed, path, 1);
    for i in (0..origin).rev() {
        let z: f64 = StandardNormal.sample(&mut rng);
        let dz = (times[i + 1] - times[i]).sqrt() * z;
        values[i] = values[i + 1] + dz;
        increments[i] = -dz;
    }
    PathGrid { shape: *shape, times, values, increments, origin }
}

fn stream(seed: u64, path: u64, side: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(path.wrapping_mul(2).wrapping_add(side));
    rng
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Kind {
    // (t - s)^{H - 1/2}
    Value,
    // log(t - s) (t - s)^{H - 1/2}
    Deriv,
}

// j^b - (j - 1)^b for j >= 1.
fn pow_diff(j: usize, b: f64) -> f64 {
    if j == 1 {
        return 1.0;
    }
    let jf = j as f64;
    jf.powf(b) * -(b * (-1.0 / jf).ln_1p()).exp_m1()
}

// j^b ln j - (j - 1)^b ln(j - 1) for j >= 1.
fn pow_log_diff(j: usize, b: f64) -> f64 {
    let jf = j as f64;
    let prev = if j > 1 { (jf - 1.0).powf(b) * (jf - 1.0).ln() } else { 0.0 };
    jf.powf(b) * jf.ln() - prev
}

// Average of the kernel over a cell of the uniform grid at distance [(j-1) step, j step].
fn uniform_weight(kind: Kind, h: f64, step: f64, j: usize) -> f64 {
    let b = 1.0 + h;
    match kind {
        Kind::Value if h == 0.0 => 1.0,
        Kind::Value => step.powf(h) * pow_diff(j, b) / b,
        Kind::Deriv => {
            step.powf(h) * ((step.ln() - 1.0 / b) * pow_diff(j, b) + pow_log_diff(j, b)) / b
        }
    }
}

// Antiderivative in distance of the kernel, vanishing at 0.
fn antideriv(kind: Kind, h: f64, x: f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    let b = 1.0 + h;
    match kind {
        Kind::Value => x.powf(b) / b,
        Kind::Deriv => x.powf(b) * (x.ln() - 1.0 / b) / b,
    }
}

fn point_kernel(kind: Kind, h: f64, x: f64) -> f64 {
    match kind {
        Kind::Value => x.powf(h),
        Kind::Deriv => x.ln() * x.powf(h),
    }
}

// Average over the far cell at distances [b, a] of f(t, s) = k(t - s) - k(-s).
fn far_weight(kind: Kind, h: f64, t: f64, a: f64, b: f64) -> f64 {
    let anti = |x| antideriv(kind, h, x);
    (anti(t + a) - anti(t + b) - anti(a) + anti(b)) / (a - b)
}

fn boundary_weight(kind: Kind, h: f64, t: f64, s: f64) -> f64 {
    point_kernel(kind, h, t + s) - point_kernel(kind, h, s)
}

// Field at positive node m by direct summation.
fn field_direct(path: &PathGrid, kind: Kind, h: f64, m: usize) -> f64 {
    let o = path.origin;
    if kind == Kind::Value && h == 0.0 {
        return path.values[o + m];
    }
    let step = path.step();
    let t = m as f64 * step;
    let near = path.shape.near_steps;
    let c0 = o - near;
    let mut acc = 0.0;
    for q in c0..o + m {
        acc += uniform_weight(kind, h, step, o + m - q) * path.increments[q];
    }
    for q in c0..o {
        acc -= uniform_weight(kind, h, step, o - q) * path.increments[q];
    }
    for q in 0..c0 {
        let (a, b) = (-path.times[q], -path.times[q + 1]);
        acc += far_weight(kind, h, t, a, b) * path.increments[q];
    }
    let s = path.shape.neg_extent;
    if s > 0.0 {
        acc += boundary_weight(kind, h, t, s) * path.values[0];
    }
    acc
}

/// `X_H(t)` from one path, by direct summation. `t` must be a grid node in `(0, T]`.
/// Multiply by `D(H)` for `B_H(t)`.
pub fn pwz_eval(path: &PathGrid, h: HurstParam, t: f64) -> Result<f64> {
    let m = path.node_index(t)?;
    Ok(field_direct(path, Kind::Value, h.offset(), m))
}

/// `dX_H(t)/dH` from one path, by direct summation, including the negative side.
pub fn pwz_deriv_eval(path: &PathGrid, h: HurstParam, t: f64) -> Result<f64> {
    let m = path.node_index(t)?;
    Ok(field_direct(path, Kind::Deriv, h.offset(), m))
}

/// Chebyshev interpolation and FFT plans shared by every path of one grid shape.
struct GridPlan {
    shape: GridShape,
    far: Vec<(f64, f64)>,
    cheb: Vec<f64>,
    // (n + 1) x CHEB_POINTS barycentric interpolation matrix.
    interp: Vec<f64>,
    len: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl GridPlan {
    fn new(shape: &GridShape) -> Self {
        let neg = shape.negative_nodes();
        let c0 = neg.len() - shape.near_steps;
        let far: Vec<(f64, f64)> = (0..c0)
            .map(|q| {
                let hi = if q + 1 < neg.len() { neg[q + 1] } else { 0.0 };
                (-neg[q], -hi)
            })
            .collect();
        let t_max = shape.pos_extent;
        let mpts = CHEB_POINTS;
        let cheb: Vec<f64> = (0..mpts)
            .map(|i| 0.5 * t_max * (1.0 - (std::f64::consts::PI * i as f64 / (mpts - 1) as f64).cos()))
            .collect();
        let bary: Vec<f64> = (0..mpts)
            .map(|i| {
                let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
                if i == 0 || i == mpts - 1 {
                    0.5 * sign
                } else {
                    sign
                }
            })
            .collect();
        let n = shape.n_steps;
        let step = shape.step();
        let mut interp = vec![0.0; (n + 1) * mpts];
        for m in 0..=n {
            let t = if m == n { t_max } else { m as f64 * step };
            let row = &mut interp[m * mpts..(m + 1) * mpts];
            if let Some(i) = cheb.iter().position(|&x| x == t) {
                row[i] = 1.0;
                continue;
            }
            let mut den = 0.0;
            for i in 0..mpts {
                let w = bary[i] / (t - cheb[i]);
                row[i] = w;
                den += w;
            }
            row.iter_mut().for_each(|r| *r /= den);
        }
        let total = shape.near_steps + n;
        let len = (2 * total).next_power_of_two();
        let mut planner = FftPlanner::new();
        GridPlan {
            shape: *shape,
            far,
            cheb,
            interp,
            len,
            fwd: planner.plan_fft_forward(len),
            inv: planner.plan_fft_inverse(len),
        }
    }
}

/// Kernel-dependent weights for one `(H, kind)` on one grid.
struct KernelPlan {
    identity: bool,
    hat: Vec<Complex64>,
    near: Vec<f64>,
    // CHEB_POINTS x (far cells + 1): far-cell weights, then the boundary weight.
    cheb_w: Vec<f64>,
}

impl KernelPlan {
    fn new(grid: &GridPlan, kind: Kind, h: f64) -> Self {
        let shape = &grid.shape;
        let step = shape.step();
        if kind == Kind::Value && h == 0.0 {
            return KernelPlan { identity: true, hat: Vec::new(), near: Vec::new(), cheb_w: Vec::new() };
        }
        let total = shape.near_steps + shape.n_steps;
        let weights: Vec<f64> = (1..=total).map(|j| uniform_weight(kind, h, step, j)).collect();
        let scale = 1.0 / grid.len as f64;
        let mut hat = vec![Complex64::new(0.0, 0.0); grid.len];
        for (z, w) in hat.iter_mut().zip(&weights) {
            *z = Complex64::new(w * scale, 0.0);
        }
        grid.fwd.process(&mut hat);
        let near = weights[..shape.near_steps].to_vec();
        let cols = grid.far.len() + 1;
        let mut cheb_w = vec![0.0; grid.cheb.len() * cols];
        for (i, &t) in grid.cheb.iter().enumerate() {
            let row = &mut cheb_w[i * cols..(i + 1) * cols];
            for (c, &(a, b)) in grid.far.iter().enumerate() {
                row[c] = far_weight(kind, h, t, a, b);
            }
            row[cols - 1] = if shape.neg_extent > 0.0 {
                boundary_weight(kind, h, t, shape.neg_extent)
            } else {
                0.0
            };
        }
        KernelPlan { identity: false, hat, near, cheb_w }
    }
}

#[derive(Default)]
struct Scratch {
    buf: Vec<Complex64>,
    work: Vec<Complex64>,
}

impl GridPlan {
    // Fields on the positive nodes for up to two kernels, sharing one FFT pair.
    fn fields(&self, path: &PathGrid, k1: &KernelPlan, k2: Option<&KernelPlan>, s: &mut Scratch) -> [Vec<f64>; 2] {
        let n = self.shape.n_steps;
        let near = self.shape.near_steps;
        let o = path.origin;
        let ks = [Some(k1), k2];
        let needs_fft = ks.iter().flatten().any(|k| !k.identity);
        if needs_fft {
            let u = path.uniform_increments();
            s.buf.clear();
            s.buf.extend(u.iter().map(|&x| Complex64::new(x, 0.0)));
            s.buf.resize(self.len, Complex64::new(0.0, 0.0));
            let need = self.fwd.get_inplace_scratch_len().max(self.inv.get_inplace_scratch_len());
            s.work.resize(need, Complex64::new(0.0, 0.0));
            self.fwd.process_with_scratch(&mut s.buf, &mut s.work);
            let zero = Complex64::new(0.0, 0.0);
            let i = Complex64::new(0.0, 1.0);
            for (idx, z) in s.buf.iter_mut().enumerate() {
                let a = match k1.identity {
                    true => zero,
                    false => k1.hat[idx],
                };
                let b = match k2 {
                    Some(k) if !k.identity => k.hat[idx],
                    _ => zero,
                };
                *z *= a + i * b;
            }
            self.inv.process_with_scratch(&mut s.buf, &mut s.work);
        }
        let mut out = [Vec::new(), Vec::new()];
        for (slot, k) in ks.iter().enumerate() {
            let Some(k) = k else { continue };
            if k.identity {
                out[slot] = path.values[o..].to_vec();
                continue;
            }
            let part = |z: Complex64| if slot == 0 { z.re } else { z.im };
            let u = path.uniform_increments();
            let konst: f64 = (0..near).map(|q| k.near[near - q - 1] * u[q]).sum();
            let cols = self.far.len() + 1;
            let far_inc = &path.increments[..self.far.len()];
            let v: Vec<f64> = (0..self.cheb.len())
                .map(|r| {
                    let row = &k.cheb_w[r * cols..(r + 1) * cols];
                    let mut acc = row[cols - 1] * path.values[0];
                    for (w, x) in row.iter().zip(far_inc) {
                        acc += w * x;
                    }
                    acc
                })
                .collect();
            let mpts = self.cheb.len();
            let mut f = vec![0.0; n + 1];
            for m in 1..=n {
                let row = &self.interp[m * mpts..(m + 1) * mpts];
                let far: f64 = row.iter().zip(&v).map(|(a, b)| a * b).sum();
                f[m] = part(s.buf[near + m - 1]) - konst + far;
            }
            out[slot] = f;
        }
        out
    }
}

/// Evaluates the field and its `H`-derivative at every positive node of a path.
pub struct FieldEngine {
    plan: GridPlan,
    scratch: std::cell::RefCell<Scratch>,
}

impl FieldEngine {
    pub fn new(shape: &GridShape) -> Self {
        FieldEngine { plan: GridPlan::new(shape), scratch: Default::default() }
    }

    /// `X_H` at `0, step, ..., T`.
    pub fn value(&self, path: &PathGrid, h: HurstParam) -> Vec<f64> {
        self.run(path, Kind::Value, h)
    }

    /// `dX_H/dH` at `0, step, ..., T`.
    pub fn deriv(&self, path: &PathGrid, h: HurstParam) -> Vec<f64> {
        self.run(path, Kind::Deriv, h)
    }

    fn run(&self, path: &PathGrid, kind: Kind, h: HurstParam) -> Vec<f64> {
        let k = KernelPlan::new(&self.plan, kind, h.offset());
        let [f, _] = self.plan.fields(path, &k, None, &mut self.scratch.borrow_mut());
        f
    }
}

/// Monte Carlo run parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    pub n_paths: usize,
    pub seed: u64,
    /// Hurst index of level estimates. Derivative estimators work at `H = 1/2`.
    pub h: HurstParam,
    pub horizon: Horizon,
    /// Grid end for infinite horizons; `None` sizes it from the tail bound.
    pub horizon_truncation: Option<f64>,
    /// Uniform cells on `[0, T]`.
    pub n_steps: usize,
    /// `S / T` for the negative side.
    pub neg_extent_factor: f64,
    /// Remove the leading grid-maximum bias by extrapolation over coarser sub-grids.
    pub extrapolate: bool,
}

impl McConfig {
    pub fn new(horizon: Horizon, h: HurstParam, n_paths: usize, seed: u64) -> Self {
        McConfig {
            n_paths,
            seed,
            h,
            horizon,
            horizon_truncation: None,
            n_steps: DEFAULT_STEPS,
            neg_extent_factor: DEFAULT_NEG_FACTOR,
            extrapolate: true,
        }
    }

    pub fn with_n_steps(mut self, n: usize) -> Self {
        self.n_steps = n;
        self
    }

    pub fn with_truncation(mut self, t: f64) -> Self {
        self.horizon_truncation = Some(t);
        self
    }

    pub fn with_extrapolation(mut self, on: bool) -> Self {
        self.extrapolate = on;
        self
    }

    /// Grid end used for `family` and drift `a` when `H` ranges over `[h_lo, h_hi]`.
    pub fn effective_horizon(&self, family: Family, a: f64, h_lo: f64, h_hi: f64) -> Result<f64> {
        match self.horizon {
            Horizon::Finite(t) => Ok(t),
            Horizon::Infinite => match self.horizon_truncation {
                Some(t) if t > 0.0 && t.is_finite() => Ok(t),
                Some(t) => Err(Error::Config(format!("horizon truncation must be positive, got {t}"))),
                None => truncation_horizon(family, a, h_lo, h_hi),
            },
        }
    }

    fn check(&self, stride: usize) -> Result<()> {
        if self.n_paths == 0 {
            return Err(Error::Config("n_paths must be positive".into()));
        }
        if self.extrapolate && self.n_steps % stride != 0 {
            return Err(Error::Config(format!(
                "extrapolation needs n_steps divisible by {stride}, got {}",
                self.n_steps
            )));
        }
        if !(self.neg_extent_factor >= 0.0 && self.neg_extent_factor.is_finite()) {
            return Err(Error::Config("neg_extent_factor must be finite and >= 0".into()));
        }
        Ok(())
    }

    fn shape(&self, t: f64) -> Result<GridShape> {
        GridShape::new(t, self.n_steps)?.with_neg_extent(self.neg_extent_factor * t)
    }
}

/// Grid end `T` with `C e^{-gamma T^beta} < 1e-4` for the argmax of the family's
/// drifted process, over Hurst indices in `[h_lo, h_hi]`.
///
/// `M`: `gamma = a^2 / 2`, `beta = 2 - 2 h_hi`; `P`: `gamma = a^2 / 4`, `beta = 2 h_lo`.
pub fn truncation_horizon(family: Family, a: f64, h_lo: f64, h_hi: f64) -> Result<f64> {
    if !(a > 0.0) {
        return Err(Error::Admissibility(format!("infinite horizon needs positive drift, got a = {a}")));
    }
    let (c, gamma, beta) = match family {
        Family::M => (TAIL_CONST_M, 0.5 * a * a, 2.0 - 2.0 * h_hi),
        Family::P => (TAIL_CONST_P, 0.25 * a * a, 2.0 * h_lo),
    };
    Ok(((c / TRUNCATION_TOL).ln() / gamma).powf(1.0 / beta))
}

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub n: usize,
    pub seed: u64,
    /// Fraction of paths whose grid maximum sits at the truncated grid end.
    pub boundary_fraction: f64,
}

struct Sample {
    value: f64,
    at_end: bool,
}

fn run_paths<F>(cfg: &McConfig, infinite: bool, f: F) -> McEstimate
where
    F: Fn(u64, &mut Scratch) -> Sample + Sync + Send,
{
    let samples: Vec<Sample> = (0..cfg.n_paths as u64)
        .into_par_iter()
        .map_init(Scratch::default, |s, p| f(p, s))
        .collect();
    let n = samples.len();
    let mean = samples.iter().map(|s| s.value).sum::<f64>() / n as f64;
    let var = if n > 1 {
        samples.iter().map(|s| (s.value - mean).powi(2)).sum::<f64>() / (n - 1) as f64
    } else {
        0.0
    };
    let ends = samples.iter().filter(|s| s.at_end).count();
    let boundary_fraction = ends as f64 / n as f64;
    if infinite && boundary_fraction > 1e-3 {
        log::warn!("grid maximum at the truncated end in {:.3}% of paths", 100.0 * boundary_fraction);
    }
    McEstimate { mean, stderr: (var / n as f64).sqrt(), n, seed: cfg.seed, boundary_fraction }
}

// Earliest maximising node over every `stride`-th node.
fn grid_argmax(y: impl Fn(usize) -> f64, n: usize, stride: usize) -> usize {
    let mut best = 0;
    let mut top = y(0);
    for m in (stride..=n).step_by(stride) {
        let v = y(m);
        if v > top {
            top = v;
            best = m;
        }
    }
    best
}

// The drifted process of a family, built from `B_H` on the grid.
fn drifted(family: Family, a: f64, h: f64, t: f64, bh: f64) -> f64 {
    match family {
        Family::M => bh - a * t,
        Family::P => SQRT_2 * bh - a * t.powf(2.0 * h),
    }
}

fn outer(family: Family, x: f64) -> f64 {
    match family {
        Family::M => x,
        Family::P => x.exp(),
    }
}

// Functional of a field, extrapolated from node strides 1 and 4 with the rate step^H.
fn sup_functional(family: Family, a: f64, h: f64, field: &[f64], step: f64, extrapolate: bool) -> (f64, bool) {
    let d = d_of_h(HurstParam::new(h).expect("h inside (0, 1)"));
    let n = field.len() - 1;
    let y = |m: usize| drifted(family, a, h, m as f64 * step, d * field[m]);
    let m1 = grid_argmax(y, n, 1);
    let g1 = outer(family, y(m1));
    let value = if extrapolate {
        let g4 = outer(family, y(grid_argmax(y, n, 4)));
        let r = 4f64.powf(h);
        (r * g1 - g4) / (r - 1.0)
    } else {
        g1
    };
    (value, m1 == n)
}

fn admissible(family: Family, horizon: Horizon, a: f64) -> Result<()> {
    FunctionalSpec::new(family, horizon, a, Method::MonteCarlo).map(|_| ())
}

/// Monte Carlo estimate of `M_H(T, a)` or `P_H(T, a)` at `H = cfg.h`.
pub fn mc_level(cfg: &McConfig, family: Family, a: f64) -> Result<McEstimate> {
    admissible(family, cfg.horizon, a)?;
    cfg.check(4)?;
    let h = cfg.h.offset() + 0.5;
    let t = cfg.effective_horizon(family, a, h, h)?;
    let mut shape = cfg.shape(t)?;
    if cfg.h.offset() == 0.0 {
        shape = shape.one_sided();
    }
    let plan = GridPlan::new(&shape);
    let kernel = KernelPlan::new(&plan, Kind::Value, cfg.h.offset());
    let step = shape.step();
    Ok(run_paths(cfg, cfg.horizon.is_infinite(), |p, s| {
        let path = sample_brownian(&shape, cfg.seed, p);
        let [f, _] = plan.fields(&path, &kernel, None, s);
        let (value, at_end) = sup_functional(family, a, h, &f, step, cfg.extrapolate);
        Sample { value, at_end }
    }))
}

fn fd_check(delta: f64) -> Result<()> {
    if delta > 0.0 && delta <= 0.05 {
        Ok(())
    } else {
        Err(Error::Config(format!("finite-difference step must lie in (0, 0.05], got {delta}")))
    }
}

// Per-path functionals at H = 1/2 + delta and 1/2 - delta.
fn fd_run(cfg: &McConfig, family: Family, a: f64, delta: f64, coupled: bool) -> Result<McEstimate> {
    admissible(family, cfg.horizon, a)?;
    cfg.check(4)?;
    let (hp, hm) = (0.5 + delta, 0.5 - delta);
    let t = cfg.effective_horizon(family, a, hp.min(hm), hp.max(hm))?;
    let shape = cfg.shape(t)?;
    let plan = GridPlan::new(&shape);
    let kp = KernelPlan::new(&plan, Kind::Value, hp - 0.5);
    let km = KernelPlan::new(&plan, Kind::Value, hm - 0.5);
    let step = shape.step();
    Ok(run_paths(cfg, cfg.horizon.is_infinite(), |p, s| {
        let path = sample_brownian(&shape, cfg.seed, p);
        let (fp, fm) = if coupled {
            let [fp, fm] = plan.fields(&path, &kp, Some(&km), s);
            (fp, fm)
        } else {
            let other = sample_brownian(&shape, cfg.seed, p | (1 << 62));
            let [fp, _] = plan.fields(&path, &kp, None, s);
            let [fm, _] = plan.fields(&other, &km, None, s);
            (fp, fm)
        };
        let (gp, ep) = sup_functional(family, a, hp, &fp, step, cfg.extrapolate);
        let (gm, em) = sup_functional(family, a, hm, &fm, step, cfg.extrapolate);
        Sample { value: (gp - gm) / (2.0 * delta), at_end: ep || em }
    }))
}

/// Central difference in `H` at `1/2` of the family's functional, with both ends
/// evaluated on the same path.
pub fn mc_coupled_fd(cfg: &McConfig, family: Family, a: f64, delta: f64) -> Result<McEstimate> {
    fd_check(delta)?;
    fd_run(cfg, family, a, delta, true)
}

/// The same central difference with independent paths at the two ends, as a
/// variance baseline for [`mc_coupled_fd`].
pub fn mc_uncoupled_fd(cfg: &McConfig, family: Family, a: f64, delta: f64) -> Result<McEstimate> {
    fd_check(delta)?;
    fd_run(cfg, family, a, delta, false)
}

/// `M'_{1/2}(T, a) = E[B(tau) + X^{(1)}(tau)]` at the grid argmax `tau` of `B(t) - a t`.
///
/// The negative-side part of `X^{(1)}(tau)` is independent of the positive path and
/// has mean zero, so it is left out. With extrapolation the estimator combines node
/// strides 1, 4 and 16 with weights (4, -4, 1), which cancels bias terms in
/// `sqrt(step)` and `sqrt(step) log(step)`.
pub fn mc_deriv_direct(cfg: &McConfig, a: f64) -> Result<McEstimate> {
    admissible(Family::M, cfg.horizon, a)?;
    cfg.check(16)?;
    let t = cfg.effective_horizon(Family::M, a, 0.5, 0.5)?;
    let shape = cfg.shape(t)?.one_sided();
    let step = shape.step();
    let n = shape.n_steps;
    let w: Vec<f64> = (1..=n).map(|j| uniform_weight(Kind::Deriv, 0.0, step, j)).collect();
    Ok(run_paths(cfg, cfg.horizon.is_infinite(), |p, _| {
        let path = sample_brownian(&shape, cfg.seed, p);
        let b = path.positive_values();
        let inc = &path.increments[path.origin..];
        let at = |m: usize| -> f64 {
            let x1: f64 = (0..m).map(|q| w[m - q - 1] * inc[q]).sum();
            b[m] + x1
        };
        let y = |m: usize| b[m] - a * m as f64 * step;
        let m1 = grid_argmax(y, n, 1);
        let value = if cfg.extrapolate {
            let m4 = grid_argmax(y, n, 4);
            let m16 = grid_argmax(y, n, 16);
            4.0 * at(m1) - 4.0 * at(m4) + at(m16)
        } else {
            at(m1)
        };
        Sample { value, at_end: m1 == n }
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::{integrate_domain, Abscissa, Domain, QuadConfig};
    use crate::specfun::v_of_h;
    use proptest::prelude::*;

    fn hp(h: f64) -> HurstParam {
        HurstParam::new(h).unwrap()
    }

    fn shape(n: usize) -> GridShape {
        GridShape::new(1.0, n).unwrap()
    }

    fn var(xs: &[f64]) -> (f64, f64) {
        let n = xs.len() as f64;
        let m = xs.iter().sum::<f64>() / n;
        let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
        (m, v)
    }

    #[test]
    fn grid_layout() {
        let s = shape(64);
        let p = sample_brownian(&s, 1, 0);
        assert_eq!(p.values()[p.origin()], 0.0);
        assert_eq!(p.times()[p.origin()], 0.0);
        assert_eq!(p.times()[0], -100.0);
        assert!(p.times().windows(2).all(|w| w[0] < w[1]));
        assert_eq!(*p.times().last().unwrap(), 1.0);
        assert_eq!(p.far_cells() + 64, p.origin());
        assert!(p.far_cells() < 200);
    }

    #[test]
    fn alignment_errors() {
        let p = sample_brownian(&shape(10), 1, 0);
        assert!(matches!(pwz_eval(&p, hp(0.6), 0.05), Err(Error::Alignment { .. })));
        assert!(matches!(pwz_eval(&p, hp(0.6), 1.5), Err(Error::Domain(_))));
        assert!(pwz_eval(&p, hp(0.6), 0.3).is_ok());
    }

    #[test]
    fn determinism() {
        let s = shape(128);
        assert_eq!(sample_brownian(&s, 9, 3), sample_brownian(&s, 9, 3));
        assert_ne!(sample_brownian(&s, 9, 3).values(), sample_brownian(&s, 9, 4).values());
    }

    #[test]
    fn increments_have_cell_variance() {
        let s = shape(16);
        let d = s.step();
        let xs: Vec<f64> = (0..20_000).map(|p| sample_brownian(&s, 5, p).positive_values()[16]).collect();
        let (m, v) = var(&xs);
        let n = xs.len() as f64;
        assert!(m.abs() < 4.0 * (1.0 / n).sqrt());
        assert!((v - 1.0).abs() < 4.0 * (2.0 / n).sqrt(), "var {v}");
        let inc: Vec<f64> = (0..20_000)
            .map(|p| {
                let path = sample_brownian(&s, 5, p);
                path.values()[path.origin() - 3] - path.values()[path.origin() - 4]
            })
            .collect();
        let (m, v) = var(&inc);
        assert!(m.abs() < 4.0 * (d / n).sqrt());
        assert!((v / d - 1.0).abs() < 4.0 * (2.0 / n).sqrt());
    }

    #[test]
    fn half_is_exact() {
        let s = shape(10_000);
        let p = sample_brownian(&s, 2, 0);
        let engine = FieldEngine::new(&s);
        let f = engine.value(&p, HurstParam::HALF);
        assert_eq!(f, p.positive_values());
        for m in (1..=10_000).step_by(997) {
            let x = pwz_eval(&p, HurstParam::HALF, m as f64 * s.step()).unwrap();
            assert_eq!(x, p.positive_values()[m]);
        }
    }

    #[test]
    fn fast_field_matches_direct_sum() {
        let s = shape(200);
        let engine = FieldEngine::new(&s);
        for p in 0..3 {
            let path = sample_brownian(&s, 11, p);
            for &h in &[0.3, 0.5, 0.72] {
                let fv = engine.value(&path, hp(h));
                let fd = engine.deriv(&path, hp(h));
                assert_eq!(fv[0], 0.0);
                for m in [1, 17, 100, 200] {
                    let t = m as f64 * s.step();
                    let dv = pwz_eval(&path, hp(h), t).unwrap();
                    let dd = pwz_deriv_eval(&path, hp(h), t).unwrap();
                    assert!((fv[m] - dv).abs() < 1e-10, "h={h} m={m}: {} vs {dv}", fv[m]);
                    assert!((fd[m] - dd).abs() < 1e-10, "h={h} m={m}: {} vs {dd}", fd[m]);
                }
            }
        }
    }

    #[test]
    fn fbm_variance_at_one() {
        let s = shape(256);
        let h = hp(0.7);
        let d = d_of_h(h);
        let xs: Vec<f64> = (0..10_000)
            .map(|p| d * pwz_eval(&sample_brownian(&s, 3, p), h, 1.0).unwrap())
            .collect();
        let (_, v) = var(&xs);
        // Truncating at -100 and the interpolant lose variance of order 1e-3.
        assert!((v - 1.0).abs() < 4.0 * (2.0f64 / 1e4).sqrt() + 5e-3, "var {v}");
    }

    fn kernel_cov(h1: f64, h2: f64) -> f64 {
        let (b1, b2) = (h1 - 0.5, h2 - 0.5);
        // (1 + u)^b - u^b without cancellation.
        let diff = |u: f64, b: f64| {
            if u < 1.0 {
                (1.0 + u).powf(b) - u.powf(b)
            } else {
                u.powf(b) * (b * (1.0 / u).ln_1p()).exp_m1()
            }
        };
        let f = |ab: Abscissa| diff(ab.x, b1) * diff(ab.x, b2);
        let cfg = QuadConfig::default().with_rel_tol(1e-10);
        let neg = integrate_domain(f, &Domain::finite(0.0, 1.0), &cfg).unwrap().value
            + integrate_domain(f, &Domain::semi_infinite(1.0, 1.0), &cfg).unwrap().value;
        neg + 1.0 / (1.0 + b1 + b2)
    }

    #[test]
    fn covariance_against_quadrature() {
        let s = shape(256);
        let n = 20_000;
        let pairs: Vec<(f64, f64)> = (0..n)
            .map(|p| {
                let path = sample_brownian(&s, 4, p);
                (pwz_eval(&path, hp(0.6), 1.0).unwrap(), pwz_eval(&path, hp(0.7), 1.0).unwrap())
            })
            .collect();
        let prods: Vec<f64> = pairs.iter().map(|(x, y)| x * y).collect();
        let (c, v) = var(&prods);
        let target = kernel_cov(0.6, 0.7);
        assert!((target - v_of_h(hp(0.6)).sqrt() * v_of_h(hp(0.7)).sqrt()).abs() < 0.1);
        let sigma = (v / n as f64).sqrt();
        assert!((c - target).abs() < 4.0 * sigma + 5e-3, "{c} vs {target}");
    }

    #[test]
    fn richardson_ratio_of_central_differences() {
        let s = shape(256);
        let mut good = 0;
        for p in 0..100 {
            let path = sample_brownian(&s, 6, p);
            let x1 = pwz_deriv_eval(&path, HurstParam::HALF, 1.0).unwrap();
            let cd = |d: f64| {
                (pwz_eval(&path, hp(0.5 + d), 1.0).unwrap() - pwz_eval(&path, hp(0.5 - d), 1.0).unwrap())
                    / (2.0 * d)
            };
            let r = (cd(0.02) - x1) / (cd(0.01) - x1);
            if (3.0..=5.0).contains(&r) {
                good += 1;
            }
        }
        assert!(good >= 90, "{good} of 100");
    }

    #[test]
    fn derivative_field_is_centred() {
        let s = shape(256);
        let xs: Vec<f64> = (0..10_000)
            .map(|p| pwz_deriv_eval(&sample_brownian(&s, 8, p), HurstParam::HALF, 1.0).unwrap())
            .collect();
        let (m, v) = var(&xs);
        assert!(m.abs() < 4.0 * (v / 1e4).sqrt(), "mean {m}");
    }

    #[test]
    fn self_similarity() {
        let s = GridShape::new(2.0, 512).unwrap();
        let h = hp(0.7);
        let n = 10_000;
        let (mut a, mut b) = (Vec::with_capacity(n), Vec::with_capacity(n));
        for p in 0..n as u64 {
            a.push(pwz_eval(&sample_brownian(&s, 12, p), h, 0.5).unwrap());
            b.push(pwz_eval(&sample_brownian(&s, 13, p), h, 2.0).unwrap());
        }
        let (_, va) = var(&a);
        let (_, vb) = var(&b);
        let ratio = vb / va;
        let target = 4f64.powf(1.4);
        // Relative standard error of a variance ratio from independent samples.
        let sigma = target * (4.0 / n as f64).sqrt();
        assert!((ratio - target).abs() < 4.0 * sigma, "{ratio} vs {target}");
    }

    #[test]
    fn level_single_path_is_its_maximum() {
        let cfg = McConfig::new(Horizon::Finite(1.0), HurstParam::HALF, 1, 21)
            .with_n_steps(64)
            .with_extrapolation(false);
        let est = mc_level(&cfg, Family::M, 0.0).unwrap();
        let path = sample_brownian(&GridShape::new(1.0, 64).unwrap().one_sided(), 21, 0);
        let top = path.positive_values().iter().cloned().fold(f64::MIN, f64::max);
        assert_eq!(est.mean, top);
        assert_eq!(est.stderr, 0.0);
    }

    #[test]
    fn fd_antisymmetry() {
        let shape = GridShape::new(1.0, 64).unwrap();
        let plan = GridPlan::new(&shape);
        let kp = KernelPlan::new(&plan, Kind::Value, 0.02);
        let km = KernelPlan::new(&plan, Kind::Value, -0.02);
        let mut s = Scratch::default();
        for p in 0..20 {
            let path = sample_brownian(&shape, 1, p);
            let [a, _] = plan.fields(&path, &kp, None, &mut s);
            let [b, _] = plan.fields(&path, &km, None, &mut s);
            let (ga, _) = sup_functional(Family::M, 0.3, 0.52, &a, shape.step(), true);
            let (gb, _) = sup_functional(Family::M, 0.3, 0.48, &b, shape.step(), true);
            let forward = (ga - gb) / (2.0 * 0.02);
            let swapped = (gb - ga) / (2.0 * 0.02);
            assert_eq!(forward, -swapped);
        }
    }

    #[test]
    fn coupling_reduces_variance() {
        let cfg = McConfig::new(Horizon::Finite(1.0), HurstParam::HALF, 10_000, 17).with_n_steps(256);
        let c = mc_coupled_fd(&cfg, Family::M, 0.0, 0.01).unwrap();
        let u = mc_uncoupled_fd(&cfg, Family::M, 0.0, 0.01).unwrap();
        assert!(c.stderr < u.stderr, "{} vs {}", c.stderr, u.stderr);
    }

    #[test]
    fn independent_of_worker_count() {
        let cfg = McConfig::new(Horizon::Finite(1.0), hp(0.6), 300, 5).with_n_steps(64);
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let three = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
        let a = one.install(|| mc_level(&cfg, Family::M, 0.5)).unwrap();
        let b = three.install(|| mc_level(&cfg, Family::M, 0.5)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn config_errors() {
        let cfg = McConfig::new(Horizon::Finite(1.0), HurstParam::HALF, 10, 1).with_n_steps(100);
        assert!(matches!(mc_deriv_direct(&cfg, 0.0), Err(Error::Config(_))));
        assert!(matches!(mc_coupled_fd(&cfg.with_n_steps(64), Family::M, 0.0, 0.2), Err(Error::Config(_))));
        let inf = McConfig::new(Horizon::Infinite, HurstParam::HALF, 10, 1);
        assert!(matches!(mc_level(&inf, Family::P, 1.0), Err(Error::Admissibility(_))));
    }

    #[test]
    fn truncation_sizes() {
        let t = truncation_horizon(Family::M, 1.0, 0.5, 0.5).unwrap();
        assert!((t - 2.0 * (0.85f64 / 1e-4).ln()).abs() < 1e-12);
        let wide = truncation_horizon(Family::M, 1.0, 0.49, 0.51).unwrap();
        assert!(wide > t);
        let p = truncation_horizon(Family::P, 2.0, 0.4, 0.6).unwrap();
        assert!((p - (0.8f64 / 1e-4).ln().powf(1.25)).abs() < 1e-12);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn weights_are_cell_averages(h in -0.45f64..0.45, j in 1usize..500, step in 1e-3f64..1.0) {
            // Midpoint rule with 2000 panels on the cell; cell 1 has an integrable end singularity.
            prop_assume!(j > 1);
            let lo = (j - 1) as f64 * step;
            let k = 2000;
            let mut v = 0.0;
            let mut dv = 0.0;
            for i in 0..k {
                let r = lo + (i as f64 + 0.5) * step / k as f64;
                v += r.powf(h);
                dv += r.ln() * r.powf(h);
            }
            v /= k as f64;
            dv /= k as f64;
            let w = uniform_weight(Kind::Value, h, step, j);
            let dw = uniform_weight(Kind::Deriv, h, step, j);
            prop_assert!((w - v).abs() < 1e-6 * v.abs().max(1.0));
            prop_assert!((dw - dv).abs() < 1e-6 * dv.abs().max(1.0));
        }

        #[test]
        fn deriv_weight_is_h_derivative(h in -0.45f64..0.45, j in 1usize..5000) {
            let step = 0.01;
            let e = 1e-5;
            let fd = (uniform_weight(Kind::Value, h + e, step, j) - uniform_weight(Kind::Value, h - e, step, j)) / (2.0 * e);
            let dw = uniform_weight(Kind::Deriv, h, step, j);
            prop_assert!((fd - dw).abs() < 1e-7 * dw.abs().max(1.0));
        }
    }
}
