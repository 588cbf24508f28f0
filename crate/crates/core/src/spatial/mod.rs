//! Monte Carlo estimate of the offloading success probability.
//!
//! Each trial draws fresh BS and device point processes on a square
//! window, adds a typical device at the center, associates every device
//! with its nearest BS and applies full channel inversion, so a device at
//! distance `r` from its BS transmits `ρ·r^η`. The typical device succeeds
//! when `ρh / (I + σ²) > θ` at its serving BS.
//!
//! Only active devices on the typical device's channel interfere. Activity
//! and channel choice are independent marks, so those devices form a PPP
//! of intensity `λ_d·P_a/C` and [`simulate_osp`] samples them directly.
//! [`Realization`] keeps the full population for inspection and tests.

mod grid;

pub use grid::{torus_dist2, TorusGrid};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, Poisson};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::params::SystemParams;

/// Expected BS count a window must hold.
pub const MIN_EXPECTED_BS: f64 = 500.0;

/// Share of resampled trials above which a warning is logged.
const RESAMPLE_WARN_FRACTION: f64 = 1e-3;

/// Mean BS occupancy of a grid cell.
const BS_PER_CELL: f64 = 2.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("at least one trial is required")]
    NoTrials,
    #[error("window of {window_km} km holds {expected:.0} BSs on average, need at least {MIN_EXPECTED_BS}")]
    WindowTooSmall { window_km: f64, expected: f64 },
    #[error("window side must be finite and positive, got {0}")]
    InvalidWindow(f64),
    #[error("threshold {0} is not a finite linear value")]
    InvalidThreshold(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimConfig {
    /// Side of the square window, km.
    pub window_km: f64,
    pub trials: u64,
    pub seed: u64,
    /// Wrap distances around the window edges.
    pub torus: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            window_km: 200.0,
            trials: 200_000,
            seed: 1,
            torus: true,
        }
    }
}

impl SimConfig {
    pub fn validate(&self, p: &SystemParams) -> Result<(), SimError> {
        if !(self.window_km > 0.0 && self.window_km.is_finite()) {
            return Err(SimError::InvalidWindow(self.window_km));
        }
        if self.trials == 0 {
            return Err(SimError::NoTrials);
        }
        let expected = p.lambda_b * self.window_km * self.window_km;
        if expected < MIN_EXPECTED_BS {
            return Err(SimError::WindowTooSmall {
                window_km: self.window_km,
                expected,
            });
        }
        Ok(())
    }

    /// The RNG for one trial; trials never share a stream.
    pub fn trial_rng(&self, trial: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(trial);
        rng
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OspEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub ci95_low: f64,
    pub ci95_high: f64,
    pub trials: u64,
    /// Trials redrawn because no BS fell in the window.
    pub resampled: u64,
}

impl OspEstimate {
    /// Normal-approximation interval; a single trial gets the worst-case
    /// standard error 0.5.
    pub fn from_counts(successes: u64, trials: u64, resampled: u64) -> Self {
        let n = trials as f64;
        let mean = successes as f64 / n;
        let stderr = if trials == 1 {
            0.5
        } else {
            (mean * (1.0 - mean) / n).sqrt()
        };
        OspEstimate {
            mean,
            stderr,
            ci95_low: (mean - 1.96 * stderr).max(0.0),
            ci95_high: (mean + 1.96 * stderr).min(1.0),
            trials,
            resampled,
        }
    }
}

/// Homogeneous PPP on `[0, side)²`.
pub fn sample_ppp<R: Rng + ?Sized>(intensity: f64, side: f64, rng: &mut R) -> Vec<(f64, f64)> {
    let mean = intensity * side * side;
    if !(mean > 0.0) {
        return Vec::new();
    }
    let count: f64 = Poisson::new(mean).expect("positive finite mean").sample(rng);
    (0..count as usize)
        .map(|_| (rng.random::<f64>() * side, rng.random::<f64>() * side))
        .collect()
}

/// One full draw of the network around a typical device.
#[derive(Debug, Clone)]
pub struct Realization {
    pub side: f64,
    pub bs_points: Vec<(f64, f64)>,
    /// The typical device is entry 0, at the window center.
    pub device_points: Vec<(f64, f64)>,
    pub serving: Vec<usize>,
    /// Distance to the serving BS, km.
    pub distance: Vec<f64>,
    /// Transmit power `ρ·r^η`, linear units.
    pub power: Vec<f64>,
    pub active: Vec<bool>,
    pub channel: Vec<u32>,
    /// Fading towards the typical device's BS.
    pub fading: Vec<f64>,
}

impl Realization {
    /// `None` when the window holds no BS.
    pub fn sample<R: Rng + ?Sized>(p: &SystemParams, cfg: &SimConfig, rng: &mut R) -> Option<Self> {
        let dp = p.derive();
        let side = cfg.window_km;
        let bs_points = sample_ppp(p.lambda_b, side, rng);
        if bs_points.is_empty() {
            return None;
        }
        let grid = TorusGrid::new(&bs_points, side, BS_PER_CELL, cfg.torus);
        let mut device_points = vec![(side / 2.0, side / 2.0)];
        device_points.extend(sample_ppp(p.lambda_d, side, rng));

        let n = device_points.len();
        let mut r = Realization {
            side,
            bs_points,
            device_points,
            serving: Vec::with_capacity(n),
            distance: Vec::with_capacity(n),
            power: Vec::with_capacity(n),
            active: Vec::with_capacity(n),
            channel: Vec::with_capacity(n),
            fading: Vec::with_capacity(n),
        };
        for (i, q) in r.device_points.iter().enumerate() {
            let (bs, d2) = grid.nearest(*q).expect("nonempty grid");
            let dist = d2.sqrt();
            r.serving.push(bs);
            r.distance.push(dist);
            r.power.push(dp.rho_lin * dist.powf(p.eta));
            r.active.push(i == 0 || rng.random::<f64>() < dp.p_a);
            r.channel.push(rng.random_range(0..p.channels));
            r.fading.push(Exp1.sample(rng));
        }
        Some(r)
    }

    /// SINR of the typical device at its serving BS.
    pub fn typical_sinr(&self, p: &SystemParams, torus: bool) -> f64 {
        let dp = p.derive();
        let bs = self.bs_points[self.serving[0]];
        let metric = |a: (f64, f64), b: (f64, f64)| {
            if torus {
                torus_dist2(a, b, self.side)
            } else {
                (a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)
            }
        };
        let interference: f64 = (1..self.device_points.len())
            .filter(|&i| self.active[i] && self.channel[i] == self.channel[0])
            .map(|i| {
                let d = metric(self.device_points[i], bs).sqrt();
                self.power[i] * self.fading[i] * d.powf(-p.eta)
            })
            .sum();
        dp.rho_lin * self.fading[0] / (interference + dp.sigma2_lin)
    }
}

/// Normalized SINR `h / (I/ρ + σ²/ρ)` of one trial, plus the number of
/// empty windows redrawn on the way.
fn trial_sinr(p: &SystemParams, cfg: &SimConfig, trial: u64) -> (f64, u64) {
    let mut rng = cfg.trial_rng(trial);
    let dp = p.derive();
    let side = cfg.window_km;
    let interferer_intensity = p.lambda_d * dp.p_a / p.channels as f64;
    let half_eta = p.eta / 2.0;
    let mut resampled = 0;
    loop {
        let bs_points = sample_ppp(p.lambda_b, side, &mut rng);
        if bs_points.is_empty() {
            resampled += 1;
            continue;
        }
        let grid = TorusGrid::new(&bs_points, side, BS_PER_CELL, cfg.torus);
        let center = (side / 2.0, side / 2.0);
        let (serving, _) = grid.nearest(center).expect("nonempty grid");
        let bs = bs_points[serving];

        let interferers = sample_ppp(interferer_intensity, side, &mut rng);
        let mut interference = 0.0;
        for q in interferers {
            let (_, r2) = grid.nearest(q).expect("nonempty grid");
            let d2 = grid.dist2(q, bs);
            let g: f64 = Exp1.sample(&mut rng);
            let ratio = r2 / d2;
            interference += g * if p.eta == 4.0 { ratio * ratio } else { ratio.powf(half_eta) };
        }
        let h: f64 = Exp1.sample(&mut rng);
        return (h / (interference + dp.noise_to_target()), resampled);
    }
}

/// Estimate at the configured threshold `p.theta_db`.
pub fn simulate_osp(p: &SystemParams, cfg: &SimConfig) -> Result<OspEstimate, SimError> {
    let theta = p.derive().theta_lin;
    Ok(simulate_osp_sweep(p, cfg, &[theta])?[0])
}

/// Estimates for several linear thresholds from the same trials, so the
/// curve is monotone in θ.
pub fn simulate_osp_sweep(
    p: &SystemParams,
    cfg: &SimConfig,
    thetas_lin: &[f64],
) -> Result<Vec<OspEstimate>, SimError> {
    cfg.validate(p)?;
    if let Some(&bad) = thetas_lin.iter().find(|t| !t.is_finite()) {
        return Err(SimError::InvalidThreshold(bad));
    }
    let results: Vec<(f64, u64)> = (0..cfg.trials)
        .into_par_iter()
        .map(|trial| trial_sinr(p, cfg, trial))
        .collect();
    let resampled: u64 = results.iter().map(|r| r.1).sum();
    if resampled as f64 > RESAMPLE_WARN_FRACTION * cfg.trials as f64 {
        log::warn!(
            "{resampled} of {} trials were redrawn because the window held no BS",
            cfg.trials
        );
    }
    Ok(thetas_lin
        .iter()
        .map(|&theta| {
            let successes = results.iter().filter(|r| r.0 > theta).count() as u64;
            OspEstimate::from_counts(successes, cfg.trials, resampled)
        })
        .collect())
}
