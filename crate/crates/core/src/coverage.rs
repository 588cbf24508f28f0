//! Analytical offloading success probability.
//!
//! With full channel inversion the serving BS receives every device at the
//! target power ρ, and Rayleigh fading of the tagged link turns the
//! success probability into a product of three Laplace-transform factors:
//!
//! ```text
//! O = exp(−σ²θ/ρ) · L_out(θ/ρ) · L_in(θ/ρ)
//! L_out = exp(−2·θ·P_a·κ/(η−2) · 2F1(1, 1−2/η; 2−2/η; −θ))
//! L_in  = (1 + θ·P_a·κ / ((1+θ)·c))^−c,    c = 3.575
//! ```
//!
//! `L_out` covers devices served by other BSs (a thinned PPP of density
//! `P_a·λ_d/C`), `L_in` the same-cell, same-channel devices whose count
//! follows the gamma-mixed Poisson law of [`neighbor_pmf`].

use serde::Serialize;
use thiserror::Error;

use crate::params::{derive, SystemParams};
use crate::specfun::{gauss_2f1_coverage, log_gamma, tail_integral, HypergeoArgs, SpecFunError};

/// Fitting constant of the approximate PPP Voronoi cell-area distribution.
pub const VORONOI_CONSTANT: f64 = 3.575;

/// Largest probability mass [`laplace_in_series`] may leave untruncated.
pub const PMF_TAIL_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CoverageError {
    #[error(transparent)]
    SpecFun(#[from] SpecFunError),
    #[error("neighbour series truncated at n = {n_max} leaves tail mass {tail:e}")]
    InsufficientTerms { n_max: usize, tail: f64 },
}

/// The OSP and its three factors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OspBreakdown {
    pub noise_factor: f64,
    pub lt_out: f64,
    pub lt_in: f64,
    pub osp: f64,
}

/// `P{N = n}` for the number of devices sharing the tagged device's cell.
///
/// Evaluated in log space so large `n` does not overflow.
pub fn neighbor_pmf(n: usize, lambda_d: f64, lambda_b: f64) -> f64 {
    let c = VORONOI_CONSTANT;
    if lambda_d == 0.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    let n_f = n as f64;
    let log_p = n_f * lambda_d.ln() + c * (lambda_b * c).ln() + lg(n_f + c)
        - (n_f + c) * (lambda_d + lambda_b * c).ln()
        - lg(n_f + 1.0)
        - lg(c);
    log_p.exp()
}

fn lg(x: f64) -> f64 {
    log_gamma(x).expect("log_gamma argument is positive")
}

/// Tabulated neighbour-count distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborPmf {
    pub lambda_d: f64,
    pub lambda_b: f64,
    pub c: f64,
    pub terms: Vec<f64>,
}

impl NeighborPmf {
    /// Probabilities for `n = 0..=n_max`.
    pub fn new(lambda_d: f64, lambda_b: f64, n_max: usize) -> Self {
        NeighborPmf {
            lambda_d,
            lambda_b,
            c: VORONOI_CONSTANT,
            terms: (0..=n_max).map(|n| neighbor_pmf(n, lambda_d, lambda_b)).collect(),
        }
    }

    pub fn mass(&self) -> f64 {
        self.terms.iter().sum()
    }

    pub fn mean(&self) -> f64 {
        self.terms.iter().enumerate().map(|(n, p)| n as f64 * p).sum()
    }

    /// `E[z^N]` over the tabulated terms.
    pub fn pgf(&self, z: f64) -> f64 {
        self.terms.iter().rev().fold(0.0, |acc, p| acc * z + p)
    }
}

/// Out-of-cell interference factor, through the hypergeometric form.
pub fn laplace_out(theta_lin: f64, p_a: f64, kappa: f64, eta: f64) -> Result<f64, SpecFunError> {
    if theta_lin == 0.0 || p_a == 0.0 || kappa == 0.0 {
        return Ok(1.0);
    }
    let f = gauss_2f1_coverage(HypergeoArgs::new(eta, theta_lin)?)?;
    Ok((-2.0 * theta_lin * p_a * kappa / (eta - 2.0) * f).exp())
}

/// Out-of-cell factor through the interference tail integral instead of
/// the hypergeometric function.
pub fn laplace_out_tail(theta_lin: f64, p_a: f64, kappa: f64, eta: f64) -> f64 {
    if theta_lin == 0.0 || p_a == 0.0 || kappa == 0.0 {
        return 1.0;
    }
    let integral = tail_integral(eta, theta_lin.powf(-1.0 / eta));
    (-2.0 * p_a * kappa * theta_lin.powf(2.0 / eta) * integral).exp()
}

/// Closed form of the out-of-cell factor at η = 4.
pub fn laplace_out_eta4(theta_lin: f64, p_a: f64, kappa: f64) -> f64 {
    let x = theta_lin.sqrt();
    (-p_a * kappa * x * x.atan()).exp()
}

/// Same-cell interference factor.
pub fn laplace_in(theta_lin: f64, p_a: f64, kappa: f64) -> f64 {
    let c = VORONOI_CONSTANT;
    (1.0 + theta_lin * p_a * kappa / ((1.0 + theta_lin) * c)).powf(-c)
}

/// Same-cell factor as an explicit sum over the neighbour count.
///
/// Each of the `N` cell neighbours is independently active on the tagged
/// channel with probability `p_a / channels` and contributes a Rayleigh
/// faded copy of ρ, so `L_in = Σ_n P{N = n} · (1 − (p_a/C)·θ/(1+θ))^n`.
pub fn laplace_in_series(
    theta_lin: f64,
    p_a: f64,
    lambda_d: f64,
    lambda_b: f64,
    channels: u32,
    n_max: usize,
) -> Result<f64, CoverageError> {
    let pmf = NeighborPmf::new(lambda_d, lambda_b, n_max);
    let tail = (1.0 - pmf.mass()).max(0.0);
    if tail > PMF_TAIL_TOLERANCE {
        return Err(CoverageError::InsufficientTerms { n_max, tail });
    }
    let z = 1.0 - p_a / channels as f64 * theta_lin / (1.0 + theta_lin);
    Ok(pmf.pgf(z))
}

/// OSP from linear-scale inputs. `noise_to_target` is σ²/ρ.
pub fn osp_breakdown(
    theta_lin: f64,
    p_a: f64,
    kappa: f64,
    eta: f64,
    noise_to_target: f64,
) -> Result<OspBreakdown, CoverageError> {
    let noise_factor = (-noise_to_target * theta_lin).exp();
    let lt_out = if eta == 4.0 {
        laplace_out_eta4(theta_lin, p_a, kappa)
    } else {
        laplace_out(theta_lin, p_a, kappa, eta)?
    };
    let lt_in = laplace_in(theta_lin, p_a, kappa);
    Ok(OspBreakdown {
        noise_factor,
        lt_out,
        lt_in,
        osp: noise_factor * lt_out * lt_in,
    })
}

pub fn osp_analytical(p: &SystemParams) -> Result<OspBreakdown, CoverageError> {
    let dp = derive(p);
    osp_breakdown(dp.theta_lin, dp.p_a, dp.kappa, p.eta, dp.noise_to_target())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::db_to_linear;
    use proptest::prelude::*;

    #[test]
    fn neighbor_pmf_normalizes_and_has_cell_mean() {
        let pmf = NeighborPmf::new(6.4, 0.1, 2000);
        assert!((pmf.mass() - 1.0).abs() < 1e-9);
        assert!((pmf.mean() - 64.0).abs() < 0.005 * 64.0);
        assert!(pmf.terms.iter().all(|&p| p >= 0.0));
    }

    #[test]
    fn neighbor_pmf_reference_values() {
        // 30-digit evaluations of the closed form.
        assert!((neighbor_pmf(0, 6.4, 0.1) / 2.731_974_998_223_377e-5 - 1.0).abs() < 1e-11);
        assert!((neighbor_pmf(1, 6.4, 0.1) / 9.250_105_506_378_227e-5 - 1.0).abs() < 1e-11);
        assert!((neighbor_pmf(64, 6.4, 0.1) / 1.120_566_380_140_149e-2 - 1.0).abs() < 1e-11);
        // No overflow far into the tail.
        let far = neighbor_pmf(100_000, 6.4, 0.1);
        assert!(far.is_finite() && far >= 0.0);
    }

    #[test]
    fn laplace_out_examples() {
        assert_eq!(laplace_out(0.1, 0.0, 4.0, 4.0).unwrap(), 1.0);
        assert_eq!(laplace_out(0.0, 0.25, 4.0, 4.0).unwrap(), 1.0);
        assert!((laplace_out(1e-12, 0.25, 4.0, 3.0).unwrap() - 1.0).abs() < 1e-10);
        let expected = 0.907_689_056_122_698_5;
        assert!((laplace_out(0.1, 0.25, 4.0, 4.0).unwrap() - expected).abs() < 1e-12);
        assert!((laplace_out_eta4(0.1, 0.25, 4.0) - expected).abs() < 1e-12);
        assert!((laplace_out_tail(0.1, 0.25, 4.0, 4.0) - expected).abs() < 1e-10);
    }

    #[test]
    fn laplace_out_routes_agree() {
        for eta in [2.5, 3.0, 3.7, 4.0, 5.0] {
            for theta_db in [-20.0, -10.0, 0.0, 10.0, 20.0] {
                let theta = db_to_linear(theta_db);
                let a = laplace_out(theta, 0.3, 4.0, eta).unwrap();
                let b = laplace_out_tail(theta, 0.3, 4.0, eta);
                assert!((a / b - 1.0).abs() < 1e-9, "eta={eta} theta={theta_db}");
            }
        }
    }

    #[test]
    fn laplace_in_examples() {
        assert_eq!(laplace_in(0.0, 0.25, 4.0), 1.0);
        assert_eq!(laplace_in(0.1, 0.0, 4.0), 1.0);
        assert!((laplace_in(0.1, 0.25, 4.0) - 0.914_139_173_185_383_2).abs() < 1e-12);
    }

    #[test]
    fn laplace_in_series_matches_closed_form() {
        for i in 0..=25 {
            let theta = db_to_linear(-20.0 + i as f64);
            for p_a in [0.1, 0.25, 0.5, 1.0] {
                let series = laplace_in_series(theta, p_a, 6.4, 0.1, 16, 2000).unwrap();
                let closed = laplace_in(theta, p_a, 4.0);
                assert!((series - closed).abs() <= 1e-3, "theta={theta} p_a={p_a}");
            }
        }
    }

    #[test]
    fn laplace_in_series_edge_cases() {
        assert!((laplace_in_series(0.1, 0.0, 6.4, 0.1, 16, 2000).unwrap() - 1.0).abs() < 1e-9);
        // Every neighbour interferes and θ → ∞: only the empty cell survives.
        let limit = laplace_in_series(1e12, 1.0, 6.4, 0.1, 1, 2000).unwrap();
        assert!((limit - neighbor_pmf(0, 6.4, 0.1)).abs() < 1e-12);
        assert!(matches!(
            laplace_in_series(0.1, 0.25, 6.4, 0.1, 16, 50),
            Err(CoverageError::InsufficientTerms { n_max: 50, .. })
        ));
    }

    #[test]
    fn reference_operating_point() {
        let b = osp_analytical(&SystemParams::table2()).unwrap();
        assert!((b.osp - 0.828_924_783_888_955).abs() < 1e-12);
        assert!((b.osp - 0.83).abs() <= 0.02);
        assert_eq!(b.osp, b.noise_factor * b.lt_out * b.lt_in);
        assert!((b.noise_factor - (-0.001f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn limiting_cases() {
        let p = SystemParams {
            theta_db: -200.0,
            ..SystemParams::table2()
        };
        assert!((osp_analytical(&p).unwrap().osp - 1.0).abs() < 1e-9);
        let quiet = osp_breakdown(1.0, 0.0, 4.0, 4.0, 0.0).unwrap();
        assert_eq!(quiet.osp, 1.0);
    }

    #[test]
    fn eta4_fast_path_matches_general_path() {
        for i in 0..=600 {
            let theta = 10f64.powf(-3.0 + i as f64 * 0.01);
            let fast = laplace_out_eta4(theta, 0.25, 4.0);
            let general = laplace_out(theta, 0.25, 4.0, 4.0).unwrap();
            assert!((fast / general - 1.0).abs() <= 1e-10, "theta = {theta}");
        }
    }

    proptest! {
        #[test]
        fn factors_in_unit_interval(theta_db in -30.0f64..20.0, p_a in 0.0f64..=1.0, kappa in 0.0f64..20.0, eta in 2.1f64..6.0) {
            let b = osp_breakdown(db_to_linear(theta_db), p_a, kappa, eta, 0.01).unwrap();
            // Deep interference can underflow a factor to exactly zero.
            for f in [b.noise_factor, b.lt_out, b.lt_in, b.osp] {
                prop_assert!((0.0..=1.0).contains(&f));
            }
        }

        #[test]
        fn osp_monotone(theta_db in -30.0f64..20.0, p_a in 0.0f64..0.9, kappa in 0.1f64..20.0, eta in 2.1f64..6.0) {
            let theta = db_to_linear(theta_db);
            let base = osp_breakdown(theta, p_a, kappa, eta, 0.01).unwrap().osp;
            let higher_theta = osp_breakdown(theta * 1.1, p_a, kappa, eta, 0.01).unwrap().osp;
            let higher_pa = osp_breakdown(theta, p_a + 0.1, kappa, eta, 0.01).unwrap().osp;
            let higher_kappa = osp_breakdown(theta, p_a, kappa * 1.1, eta, 0.01).unwrap().osp;
            prop_assert!(higher_theta <= base);
            prop_assert!(higher_pa <= base);
            prop_assert!(higher_kappa <= base);
        }
    }
}
