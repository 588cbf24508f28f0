//! Model parameters, unit conversions and derived quantities.
//!
//! Every other module consumes a [`SystemParams`] that has passed
//! [`SystemParams::validate`]. Densities are per km², rates are per unit
//! time and powers are given in dBm / dB as in the configuration files.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParamError {
    #[error("{field} must be finite")]
    NotFinite { field: &'static str },
    #[error("{field} must exceed {bound}")]
    MustExceed { field: &'static str, bound: f64 },
    #[error("{field} must be at least {bound}")]
    BelowMinimum { field: &'static str, bound: f64 },
    #[error("{field} must lie in [0, 1], got {value}")]
    NotProbability { field: &'static str, value: f64 },
    #[error("{first} and {second} are mutually exclusive")]
    MutuallyExclusive {
        first: &'static str,
        second: &'static str,
    },
    #[error("exactly one of {first} or {second} is required")]
    MissingOneOf {
        first: &'static str,
        second: &'static str,
    },
    #[error("offloading success probability must lie in [0, 1], got {0}")]
    OspOutOfRange(f64),
}

fn default_m_loc() -> u32 {
    1
}

/// Raw model inputs.
///
/// The JSON form is a flat object with exactly these field names; unknown
/// keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemParams {
    /// BS density, per km².
    pub lambda_b: f64,
    /// Device density, per km².
    pub lambda_d: f64,
    /// Number of uplink channels.
    pub channels: u32,
    /// Power-control receive target, dBm.
    pub rho_dbm: f64,
    /// Noise power, dBm.
    pub sigma2_dbm: f64,
    /// Path-loss exponent.
    pub eta: f64,
    /// SINR detection threshold, dB.
    pub theta_db: f64,
    /// Per-device task arrival rate.
    pub lambda_a: f64,
    /// Instruction transmission duration.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_s: Option<f64>,
    /// Device activity probability, used instead of `t_s`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_a_override: Option<f64>,
    /// Single-VM execution rate.
    pub mu_o: f64,
    /// I/O degradation factor.
    pub deg_factor: f64,
    /// VMs at the MEC server.
    pub m_mec: u32,
    /// Local VMs per device.
    #[serde(default = "default_m_loc")]
    pub m_loc: u32,
    /// Local execution rate.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu_loc: Option<f64>,
    /// Relative computation rate `mu_mec / mu_loc`, used instead of `mu_loc`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu_r: Option<f64>,
    /// VM failure rate.
    pub delta_fail: f64,
    /// VM repair rate.
    pub gamma_repair: f64,
}

impl SystemParams {
    /// The reference parameter set: BS density 0.1/km², device density
    /// 6.4/km², 16 channels, ρ = −90 dBm, σ² = −110 dBm, η = 4, θ = −10 dB,
    /// λ_a = 0.15, activity 0.25, μ_o = 3, d = 0.1, 5 MEC VMs, 1 local VM,
    /// μ_loc = 0.1, failure rate 0.1 and repair rate 1.
    pub fn table2() -> Self {
        SystemParams {
            lambda_b: 0.1,
            lambda_d: 6.4,
            channels: 16,
            rho_dbm: -90.0,
            sigma2_dbm: -110.0,
            eta: 4.0,
            theta_db: -10.0,
            lambda_a: 0.15,
            t_s: None,
            p_a_override: Some(0.25),
            mu_o: 3.0,
            deg_factor: 0.1,
            m_mec: 5,
            m_loc: 1,
            mu_loc: Some(0.1),
            mu_r: None,
            delta_fail: 0.1,
            gamma_repair: 1.0,
        }
    }

    pub fn from_json(text: &str) -> Result<Self, crate::Error> {
        let raw: SystemParams = serde_json::from_str(text)?;
        Ok(raw.validate()?)
    }

    /// Checks every invariant, reporting the first one violated.
    pub fn validate(self) -> Result<Self, ParamError> {
        let reals = [
            ("lambda_b", self.lambda_b),
            ("lambda_d", self.lambda_d),
            ("rho_dbm", self.rho_dbm),
            ("sigma2_dbm", self.sigma2_dbm),
            ("eta", self.eta),
            ("theta_db", self.theta_db),
            ("lambda_a", self.lambda_a),
            ("mu_o", self.mu_o),
            ("deg_factor", self.deg_factor),
            ("delta_fail", self.delta_fail),
            ("gamma_repair", self.gamma_repair),
        ];
        for (field, value) in reals {
            if !value.is_finite() {
                return Err(ParamError::NotFinite { field });
            }
        }
        for (field, value) in [
            ("t_s", self.t_s),
            ("p_a_override", self.p_a_override),
            ("mu_loc", self.mu_loc),
            ("mu_r", self.mu_r),
        ] {
            if value.is_some_and(|v| !v.is_finite()) {
                return Err(ParamError::NotFinite { field });
            }
        }

        if self.eta <= 2.0 {
            return Err(ParamError::MustExceed {
                field: "eta",
                bound: 2.0,
            });
        }
        // kappa and the neighbour distribution divide by the BS density.
        if self.lambda_b <= 0.0 {
            return Err(ParamError::MustExceed {
                field: "lambda_b",
                bound: 0.0,
            });
        }
        for (field, value) in [
            ("lambda_d", self.lambda_d),
            ("lambda_a", self.lambda_a),
            ("mu_o", self.mu_o),
            ("deg_factor", self.deg_factor),
            ("delta_fail", self.delta_fail),
            ("gamma_repair", self.gamma_repair),
        ] {
            if value < 0.0 {
                return Err(ParamError::BelowMinimum { field, bound: 0.0 });
            }
        }
        for (field, value) in [
            ("channels", self.channels),
            ("m_mec", self.m_mec),
            ("m_loc", self.m_loc),
        ] {
            if value < 1 {
                return Err(ParamError::BelowMinimum { field, bound: 1.0 });
            }
        }

        match (self.mu_loc, self.mu_r) {
            (Some(_), Some(_)) => {
                return Err(ParamError::MutuallyExclusive {
                    first: "mu_loc",
                    second: "mu_r",
                })
            }
            (None, None) => {
                return Err(ParamError::MissingOneOf {
                    first: "mu_loc",
                    second: "mu_r",
                })
            }
            (Some(mu_loc), None) if mu_loc < 0.0 => {
                return Err(ParamError::BelowMinimum {
                    field: "mu_loc",
                    bound: 0.0,
                })
            }
            (None, Some(mu_r)) if mu_r <= 0.0 => {
                return Err(ParamError::MustExceed {
                    field: "mu_r",
                    bound: 0.0,
                })
            }
            _ => {}
        }

        match (self.t_s, self.p_a_override) {
            (Some(_), Some(_)) => {
                return Err(ParamError::MutuallyExclusive {
                    first: "t_s",
                    second: "p_a_override",
                })
            }
            (None, None) => {
                return Err(ParamError::MissingOneOf {
                    first: "t_s",
                    second: "p_a_override",
                })
            }
            (Some(t_s), None) if t_s < 0.0 => {
                return Err(ParamError::BelowMinimum {
                    field: "t_s",
                    bound: 0.0,
                })
            }
            (None, Some(p)) if !(0.0..=1.0).contains(&p) => {
                return Err(ParamError::NotProbability {
                    field: "p_a_override",
                    value: p,
                })
            }
            _ => {}
        }

        Ok(self)
    }

    /// Exchanges the failure and repair rates, for sensitivity checks on
    /// the symbol assignment of the two rates.
    pub fn with_failure_repair_swapped(mut self) -> Self {
        std::mem::swap(&mut self.delta_fail, &mut self.gamma_repair);
        self
    }

    /// Copy with a different number of MEC VMs.
    pub fn with_m_mec(&self, m_mec: u32) -> Self {
        SystemParams {
            m_mec,
            ..self.clone()
        }
    }

    pub fn with_theta_db(&self, theta_db: f64) -> Self {
        SystemParams {
            theta_db,
            ..self.clone()
        }
    }

    pub fn derive(&self) -> DerivedParams {
        derive(self)
    }

    /// Ratio of device to BS density, the mean number of devices per cell.
    pub fn devices_per_bs(&self) -> f64 {
        self.lambda_d / self.lambda_b
    }
}

/// Converts a dBm (or dB) value to linear scale (milliwatts, or a ratio).
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(lin: f64) -> f64 {
    10.0 * lin.log10()
}

/// Device activity probability for a transmission window of `t_s` around
/// each arrival: `1 − exp(−2·t_s·λ_a)`.
pub fn activity_probability(t_s: f64, lambda_a: f64) -> f64 {
    -(-2.0 * t_s * lambda_a).exp_m1()
}

/// Per-VM service rate at an MEC server running `m_mec` VMs.
pub fn mec_service_rate(mu_o: f64, deg_factor: f64, m_mec: u32) -> f64 {
    mu_o / (1.0 + deg_factor).powi(m_mec as i32 - 1)
}

/// Quantities computed from a validated [`SystemParams`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DerivedParams {
    pub p_a: f64,
    /// Devices per BS per channel.
    pub kappa: f64,
    pub theta_lin: f64,
    pub rho_lin: f64,
    pub sigma2_lin: f64,
    pub mu_mec: f64,
    pub mu_loc_eff: f64,
    pub mu_r_eff: f64,
    pub lambda_a: f64,
    pub devices_per_bs: f64,
    pub lambda_mec: Option<f64>,
    pub lambda_loc: Option<f64>,
}

pub fn derive(p: &SystemParams) -> DerivedParams {
    let p_a = match (p.p_a_override, p.t_s) {
        (Some(p_a), _) => p_a,
        (None, Some(t_s)) => activity_probability(t_s, p.lambda_a),
        (None, None) => unreachable!("validated parameters carry t_s or p_a_override"),
    };
    let mu_mec = mec_service_rate(p.mu_o, p.deg_factor, p.m_mec);
    let (mu_loc_eff, mu_r_eff) = match (p.mu_loc, p.mu_r) {
        (Some(mu_loc), _) => (mu_loc, mu_mec / mu_loc),
        (None, Some(mu_r)) => (mu_mec / mu_r, mu_r),
        (None, None) => unreachable!("validated parameters carry mu_loc or mu_r"),
    };
    DerivedParams {
        p_a,
        kappa: p.lambda_d / (p.lambda_b * p.channels as f64),
        theta_lin: db_to_linear(p.theta_db),
        rho_lin: db_to_linear(p.rho_dbm),
        sigma2_lin: db_to_linear(p.sigma2_dbm),
        mu_mec,
        mu_loc_eff,
        mu_r_eff,
        lambda_a: p.lambda_a,
        devices_per_bs: p.devices_per_bs(),
        lambda_mec: None,
        lambda_loc: None,
    }
}

impl DerivedParams {
    /// Noise-to-receive-target ratio σ²/ρ.
    pub fn noise_to_target(&self) -> f64 {
        self.sigma2_lin / self.rho_lin
    }

    /// Fills in the arrival rates for a given offloading success probability.
    pub fn with_osp(mut self, osp: f64) -> Result<Self, ParamError> {
        let (lambda_mec, lambda_loc) = arrival_rates(&self, osp)?;
        self.lambda_mec = Some(lambda_mec);
        self.lambda_loc = Some(lambda_loc);
        Ok(self)
    }
}

/// Aggregate MEC arrival rate (per BS) and local arrival rate (per device).
pub fn arrival_rates(dp: &DerivedParams, osp: f64) -> Result<(f64, f64), ParamError> {
    if !(0.0..=1.0).contains(&osp) {
        return Err(ParamError::OspOutOfRange(osp));
    }
    let lambda_mec = osp * dp.lambda_a * dp.devices_per_bs;
    let lambda_loc = (1.0 - osp) * dp.lambda_a;
    Ok((lambda_mec, lambda_loc))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn table2() -> SystemParams {
        SystemParams::table2()
    }

    #[test]
    fn table2_is_valid() {
        assert!(table2().validate().is_ok());
    }

    #[test]
    fn eta_two_is_rejected() {
        let err = SystemParams {
            eta: 2.0,
            ..table2()
        }
        .validate()
        .unwrap_err();
        assert_eq!(err.to_string(), "eta must exceed 2");
    }

    #[test]
    fn both_local_rates_rejected() {
        let err = SystemParams {
            mu_r: Some(20.0),
            ..table2()
        }
        .validate()
        .unwrap_err();
        assert!(err.to_string().contains("mutually exclusive"), "{err}");
    }

    #[test]
    fn activity_inputs_are_exclusive_and_required() {
        let both = SystemParams {
            t_s: Some(1.0),
            ..table2()
        };
        assert!(matches!(
            both.validate(),
            Err(ParamError::MutuallyExclusive { first: "t_s", .. })
        ));
        let neither = SystemParams {
            p_a_override: None,
            ..table2()
        };
        assert!(matches!(
            neither.validate(),
            Err(ParamError::MissingOneOf { .. })
        ));
        let bad = SystemParams {
            p_a_override: Some(1.5),
            ..table2()
        };
        assert!(matches!(
            bad.validate(),
            Err(ParamError::NotProbability { .. })
        ));
    }

    #[test]
    fn counts_must_be_positive() {
        for p in [
            SystemParams {
                channels: 0,
                ..table2()
            },
            SystemParams {
                m_mec: 0,
                ..table2()
            },
            SystemParams {
                m_loc: 0,
                ..table2()
            },
        ] {
            assert!(matches!(
                p.validate(),
                Err(ParamError::BelowMinimum { bound, .. }) if bound == 1.0
            ));
        }
    }

    #[test]
    fn derived_values() {
        let dp = derive(&table2());
        assert_eq!(dp.kappa, 4.0);
        assert_eq!(dp.p_a, 0.25);
        assert!((dp.mu_mec - 2.049_040_366_095_21).abs() < 1e-12);
        assert!((dp.noise_to_target() - 0.01).abs() < 1e-15);
        assert!((dp.theta_lin - 0.1).abs() < 1e-15);
        assert!((dp.mu_r_eff - dp.mu_mec / 0.1).abs() < 1e-12);
    }

    #[test]
    fn zero_arrivals_means_idle_devices() {
        let p = SystemParams {
            lambda_a: 0.0,
            t_s: Some(1.0),
            p_a_override: None,
            ..table2()
        };
        assert_eq!(derive(&p).p_a, 0.0);
    }

    #[test]
    fn mu_r_resolves_local_rate() {
        let p = SystemParams {
            mu_loc: None,
            mu_r: Some(20.0),
            ..table2()
        };
        let dp = derive(&p);
        assert!((dp.mu_loc_eff * 20.0 - dp.mu_mec).abs() < 1e-12);
    }

    #[test]
    fn arrival_rate_examples() {
        let dp = derive(&table2());
        assert_eq!(arrival_rates(&dp, 0.0).unwrap(), (0.0, 0.15));
        assert_eq!(arrival_rates(&dp, 1.0).unwrap().1, 0.0);
        let (mec, _) = arrival_rates(&dp, 0.83).unwrap();
        assert!((mec - 7.968).abs() < 1e-12);
        assert!(arrival_rates(&dp, 1.01).is_err());
        assert!(arrival_rates(&dp, -0.1).is_err());
    }

    #[test]
    fn single_vm_runs_at_full_rate() {
        assert_eq!(mec_service_rate(3.0, 0.7, 1), 3.0);
    }

    #[test]
    fn json_rejects_unknown_keys() {
        let mut value = serde_json::to_value(table2()).unwrap();
        value["lamda_a"] = serde_json::json!(0.2);
        let err = SystemParams::from_json(&value.to_string()).unwrap_err();
        assert!(err.to_string().contains("lamda_a"), "{err}");
    }

    #[test]
    fn json_round_trip() {
        let text = serde_json::to_string(&table2()).unwrap();
        assert_eq!(SystemParams::from_json(&text).unwrap(), table2());
    }

    proptest! {
        #[test]
        fn per_device_arrivals_conserved(osp in 0.0f64..=1.0, lambda_a in 0.0f64..5.0) {
            let p = SystemParams { lambda_a, ..table2() };
            let dp = derive(&p);
            let (mec, loc) = arrival_rates(&dp, osp).unwrap();
            prop_assert!((mec / dp.devices_per_bs + loc - lambda_a).abs() <= 1e-12 * (1.0 + lambda_a));
        }

        #[test]
        fn activity_monotone(t in 0.0f64..10.0, dt in 0.0f64..1.0, la in 0.0f64..2.0, dla in 0.0f64..1.0) {
            prop_assert!(activity_probability(t + dt, la) >= activity_probability(t, la));
            prop_assert!(activity_probability(t, la + dla) >= activity_probability(t, la));
        }

        #[test]
        fn mec_rate_decreases_with_vms(d in 0.001f64..2.0, m in 1u32..100) {
            prop_assert!(mec_service_rate(3.0, d, m + 1) < mec_service_rate(3.0, d, m));
        }
    }
}
