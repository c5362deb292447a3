//! Special functions and the normalisation constants of the Mandelbrot-van Ness field.
//!
//! `erf`/`erfc` use a positive-term power series below |x| = 2 and the Laplace
//! continued fraction above it. `V(H)` goes through log-Gamma so that the pole of
//! `Gamma(2 - 2H)` at `H -> 1` never overflows an intermediate.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Euler-Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_860_61;

/// Apery's constant zeta(3).
pub const ZETA_3: f64 = 1.202_056_903_159_594_285_40;

const FRAC_2_SQRT_PI: f64 = std::f64::consts::FRAC_2_SQRT_PI;
const SQRT_PI: f64 = 1.772_453_850_905_516_027_3;

// Crossover between the series and the continued fraction.
const ERF_SPLIT: f64 = 2.0;

/// Hurst index, strictly inside (0, 1).
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct HurstParam(f64);

impl HurstParam {
    pub const HALF: HurstParam = HurstParam(0.5);

    pub fn new(h: f64) -> Result<Self> {
        if h > 0.0 && h < 1.0 {
            Ok(HurstParam(h))
        } else {
            Err(Error::Domain(format!("Hurst parameter {h} is outside (0, 1)")))
        }
    }

    #[inline]
    pub fn get(self) -> f64 {
        self.0
    }

    /// `H - 1/2`, the factor that switches off every fractional correction.
    #[inline]
    pub fn offset(self) -> f64 {
        self.0 - 0.5
    }
}

/// `V(H)` together with `D(H) = V(H)^{-1/2}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalizationPair {
    pub v: f64,
    pub d: f64,
}

impl NormalizationPair {
    pub fn at(h: HurstParam) -> Self {
        let v = v_of_h(h);
        NormalizationPair { v, d: 1.0 / v.sqrt() }
    }
}

/// Error function.
pub fn erf(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    let ax = x.abs();
    if ax < ERF_SPLIT {
        erf_series(x)
    } else if x > 0.0 {
        1.0 - erfc(x)
    } else {
        erfc(-x) - 1.0
    }
}

/// Complementary error function, accurate in relative terms for large positive `x`.
pub fn erfc(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x >= ERF_SPLIT {
        if x > 27.3 {
            return 0.0;
        }
        (-x * x).exp() * erfcx_cf(x)
    } else if x <= -ERF_SPLIT {
        2.0 - erfc(-x)
    } else {
        1.0 - erf_series(x)
    }
}

/// Scaled complementary error function `exp(x^2) erfc(x)`.
pub fn erfcx(x: f64) -> f64 {
    if x >= ERF_SPLIT {
        erfcx_cf(x)
    } else if x >= 0.0 {
        (x * x).exp() * (1.0 - erf_series(x))
    } else {
        2.0 * (x * x).exp() - erfcx(-x)
    }
}

/// `1 - sqrt(pi) x erfcx(x)` for `x >= 0`.
///
/// This is the Mills-ratio deficit that appears when a Gaussian tail term is
/// subtracted from its leading asymptote; it behaves like `1/(2x^2)` for large
/// `x`, where the naive difference would cancel.
pub fn erfcx_deficit(x: f64) -> f64 {
    debug_assert!(x >= 0.0);
    if x >= ERF_SPLIT {
        let k = laplace_cf_tail(x);
        k / (x + k)
    } else {
        1.0 - SQRT_PI * x * erfcx(x)
    }
}

// erf(x) = 2x/sqrt(pi) e^{-x^2} sum_n (2x^2)^n / (1*3*...*(2n+1)); every term positive.
fn erf_series(x: f64) -> f64 {
    let x2 = x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut n = 0.0;
    loop {
        n += 1.0;
        term *= 2.0 * x2 / (2.0 * n + 1.0);
        sum += term;
        if term < 1e-17 * sum {
            break;
        }
    }
    FRAC_2_SQRT_PI * x * (-x2).exp() * sum
}

// erfcx(x) = 1 / (sqrt(pi) (x + K(x))) with K the Laplace continued fraction tail.
fn erfcx_cf(x: f64) -> f64 {
    1.0 / (SQRT_PI * (x + laplace_cf_tail(x)))
}

// K(x) = (1/2) / (x + 1 / (x + (3/2) / (x + 2 / (x + ...)))), evaluated bottom-up.
fn laplace_cf_tail(x: f64) -> f64 {
    let depth = if x >= 6.0 {
        60
    } else if x >= 4.0 {
        120
    } else {
        300
    };
    let mut tail = 0.0;
    for j in (1..=depth).rev() {
        tail = (0.5 * j as f64) / (x + tail);
    }
    tail
}

/// Natural log of the Gamma function for `x > 0` (Lanczos, g = 7, nine terms).
pub fn ln_gamma(x: f64) -> f64 {
    const G: f64 = 7.0;
    const COEF: [f64; 9] = [
        0.999_999_999_999_809_93,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_13,
        -176.615_029_162_140_59,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_571_6e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x.is_nan() || x <= 0.0 {
        return f64::NAN;
    }
    if x < 0.5 {
        // Reflection keeps the series in its accurate range.
        return (PI / (PI * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let z = x - 1.0;
    let mut acc = COEF[0];
    for (i, &c) in COEF.iter().enumerate().skip(1) {
        acc += c / (z + i as f64);
    }
    let t = z + G + 0.5;
    0.5 * (2.0 * PI).ln() + (z + 0.5) * t.ln() - t + acc.ln()
}

/// Inverse hyperbolic cotangent, defined for `|z| > 1`.
pub fn acoth(z: f64) -> Result<f64> {
    if z.is_nan() || z.abs() <= 1.0 {
        return Err(Error::Domain(format!("acoth requires |z| > 1, got {z}")));
    }
    // 0.5 ln((z+1)/(z-1)) = 0.5 ln1p(2/(z-1))
    Ok(0.5 * (2.0 / (z - 1.0)).ln_1p())
}

/// Variance factor `V(H) = Gamma(1/2 + H) Gamma(2 - 2H) / (2H Gamma(3/2 - H))`.
pub fn v_of_h(h: HurstParam) -> f64 {
    let h = h.get();
    if h == 0.5 {
        return 1.0;
    }
    (ln_gamma(0.5 + h) + ln_gamma(2.0 - 2.0 * h) - (2.0 * h).ln() - ln_gamma(1.5 - h)).exp()
}

/// `D(H) = V(H)^{-1/2}`.
pub fn d_of_h(h: HurstParam) -> f64 {
    1.0 / v_of_h(h).sqrt()
}

/// Derivatives `D^{(n)}(1/2)` for `n <= 3`.
pub fn d_derivatives_at_half(n: u32) -> Result<f64> {
    let pi2 = PI * PI;
    match n {
        0 => Ok(1.0),
        1 => Ok(1.0),
        2 => Ok(-1.0 - pi2 / 3.0),
        3 => Ok(3.0 - pi2 - 6.0 * ZETA_3),
        _ => Err(Error::Unsupported(format!(
            "D^(n)(1/2) is tabulated only for n <= 3, got n = {n}"
        ))),
    }
}
