//! Special functions for the coverage expressions.
//!
//! Only the one hypergeometric family the coverage result needs is
//! implemented, `2F1(1, 1 − 2/η; 2 − 2/η; −θ)`, so it can be checked
//! against the closed form `arctan(√θ)/√θ` at η = 4.

// Tabulated coefficients keep their published digits.
#![allow(clippy::excessive_precision)]

use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpecFunError {
    #[error("log_gamma requires x > 0, got {0}")]
    NonPositive(f64),
    #[error("path-loss exponent must exceed 2, got {0}")]
    InvalidExponent(f64),
    #[error("threshold must be a nonnegative number, got {0}")]
    InvalidThreshold(f64),
    #[error("hypergeometric series did not converge within {0} terms")]
    NoConvergence(usize),
}

/// Term budget for every series evaluation.
pub const SERIES_TERM_BUDGET: usize = 10_000;
const SERIES_REL_TOL: f64 = 1e-16;

// Lanczos approximation, g = 7, n = 9.
const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEF: [f64; 9] = [
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

/// Natural logarithm of the gamma function for `x > 0`.
pub fn log_gamma(x: f64) -> Result<f64, SpecFunError> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(SpecFunError::NonPositive(x));
    }
    Ok(log_gamma_unchecked(x))
}

fn log_gamma_unchecked(x: f64) -> f64 {
    if x < 0.5 {
        // Γ(x) = Γ(x + 1) / x keeps the Lanczos sum in its accurate range.
        return log_gamma_unchecked(x + 1.0) - x.ln();
    }
    let x = x - 1.0;
    let mut sum = LANCZOS_COEF[0];
    for (i, c) in LANCZOS_COEF.iter().enumerate().skip(1) {
        sum += c / (x + i as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    0.5 * (2.0 * PI).ln() + (x + 0.5) * t.ln() - t + sum.ln()
}

/// Arguments of the coverage hypergeometric term.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HypergeoArgs {
    eta: f64,
    theta_lin: f64,
}

impl HypergeoArgs {
    pub fn new(eta: f64, theta_lin: f64) -> Result<Self, SpecFunError> {
        if !(eta > 2.0) || !eta.is_finite() {
            return Err(SpecFunError::InvalidExponent(eta));
        }
        if !(theta_lin >= 0.0) || !theta_lin.is_finite() {
            return Err(SpecFunError::InvalidThreshold(theta_lin));
        }
        Ok(HypergeoArgs { eta, theta_lin })
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn theta_lin(&self) -> f64 {
        self.theta_lin
    }
}

/// Power series of `2F1(1, b; c; z)` for `|z| < 1`.
fn series_2f1_a1(b: f64, c: f64, z: f64) -> Result<f64, SpecFunError> {
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 0..SERIES_TERM_BUDGET {
        let k = k as f64;
        // (1)_k / k! = 1, so only (b)_k / (c)_k survives.
        term *= (b + k) / (c + k) * z;
        sum += term;
        if term.abs() < SERIES_REL_TOL * sum.abs() {
            return Ok(sum);
        }
    }
    Err(SpecFunError::NoConvergence(SERIES_TERM_BUDGET))
}

/// `2F1(1, 1 − 2/η; 2 − 2/η; −θ)`.
///
/// Small θ uses the power series directly. Larger θ goes through the Pfaff
/// transformation to `w = θ/(1 + θ)`; once `w` nears 1 the `1 − w`
/// connection formula takes over (valid because `2/η` is never an integer).
pub fn gauss_2f1_coverage(args: HypergeoArgs) -> Result<f64, SpecFunError> {
    let theta = args.theta_lin;
    let s = 2.0 / args.eta;
    let b = 1.0 - s;
    let c = 2.0 - s;
    if theta == 0.0 {
        return Ok(1.0);
    }
    if theta <= 0.5 {
        return series_2f1_a1(b, c, -theta);
    }
    // Pfaff: 2F1(1, b; c; −θ) = (1 + θ)^-1 · 2F1(1, c − b; c; w), c − b = 1.
    let w = theta / (1.0 + theta);
    let pfaff = if theta <= 9.0 {
        series_2f1_a1(1.0, c, w)?
    } else {
        let one_minus_w = 1.0 / (1.0 + theta);
        let regular = series_2f1_a1(1.0, 1.0 + s, one_minus_w)?;
        -(1.0 - s) / s * regular
            + (1.0 - s) * PI / (PI * s).sin() * one_minus_w.powf(-s) * w.powf(s - 1.0)
    };
    Ok(pfaff / (1.0 + theta))
}

/// `∫_lower^∞ y / (y^η + 1) dy` for η > 2.
///
/// The infinite range is mapped onto a finite one with `v = y^-(η−2)`,
/// which turns the integrand into the bounded `1 / (1 + v^(η/(η−2)))`.
pub fn tail_integral(eta: f64, lower: f64) -> f64 {
    debug_assert!(eta > 2.0 && lower >= 0.0);
    if lower.is_infinite() {
        return 0.0;
    }
    let p = eta / (eta - 2.0);
    let mapped = |v_max: f64| {
        integrate(|v: f64| 1.0 / (1.0 + v.powf(p)), 0.0, v_max, 1e-13) / (eta - 2.0)
    };
    if lower >= 1.0 {
        mapped(lower.powf(-(eta - 2.0)))
    } else {
        integrate(|y: f64| y / (y.powf(eta) + 1.0), lower, 1.0, 1e-13) + mapped(1.0)
    }
}

// 15-point Kronrod nodes/weights with the embedded 7-point Gauss rule.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

fn gauss_kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = f(center - dx) + f(center + dx);
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

/// Adaptive Gauss–Kronrod quadrature to absolute tolerance `tol`.
pub(crate) fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    fn recurse<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
        let (value, err) = gauss_kronrod(f, a, b);
        if err <= tol || depth == 0 {
            return value;
        }
        let mid = 0.5 * (a + b);
        recurse(f, a, mid, 0.5 * tol, depth - 1) + recurse(f, mid, b, 0.5 * tol, depth - 1)
    }
    if a == b {
        return 0.0;
    }
    recurse(&f, a, b, tol, 40)
}
