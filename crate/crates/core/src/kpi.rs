//! Dependability KPIs: computation resource availability (CRA), task
//! execution capacity (TEC) and task execution retainability (TER).
//!
//! A task is offloaded to the MEC server with probability `O` (the OSP)
//! and executed locally otherwise, so each KPI mixes the two VM systems
//! with weights `O` and `1 − O`. The MEC arrival rate is the per-BS
//! aggregate while the local one is per device.

use serde::Serialize;
use thiserror::Error;

use crate::coverage::osp_analytical;
use crate::ctmc::{steady_state_from, CtmcModel, HandoverRule, Rates, SteadyState, VmState};
use crate::params::{arrival_rates, SystemParams};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KpiError {
    #[error("retainability of the {system} system is undefined: no tasks are admitted but its weight is {weight}")]
    UndefinedRetainability { system: &'static str, weight: f64 },
}

/// Mass of the states with no idle VM.
pub fn blocking_mass(ss: &SteadyState, model: &CtmcModel) -> f64 {
    ss.mass_where(model, |s| s.idle == 0)
}

/// Mean number of occupied VMs.
pub fn mean_occupied(ss: &SteadyState, model: &CtmcModel) -> f64 {
    model
        .states()
        .iter()
        .zip(&ss.probabilities)
        .map(|(s, p)| s.occupied as f64 * p)
        .sum()
}

/// Rate at which running tasks are aborted: `δ·Σ x_O τ` over the states
/// with an occupied VM and no idle one. Under [`HandoverRule::Abort`] every
/// failure of an occupied VM aborts its task.
pub fn forced_termination_rate(ss: &SteadyState, model: &CtmcModel) -> f64 {
    let delta = model.rates().failure;
    let abort = model.handover() == HandoverRule::Abort;
    model
        .states()
        .iter()
        .zip(&ss.probabilities)
        .filter(|(s, _)| s.occupied > 0 && (s.idle == 0 || abort))
        .map(|(s, p)| delta * s.occupied as f64 * p)
        .sum()
}

pub fn effective_admission_rate(ss: &SteadyState, model: &CtmcModel) -> f64 {
    model.rates().arrival * (1.0 - blocking_mass(ss, model))
}

pub fn cra(blocking_mec: f64, blocking_loc: f64, osp: f64) -> f64 {
    osp * (1.0 - blocking_mec) + (1.0 - osp) * (1.0 - blocking_loc)
}

pub fn tec(mec: &SystemKpis, local: &SystemKpis, osp: f64) -> f64 {
    osp * mec.throughput + (1.0 - osp) * local.throughput
}

/// `O·R_MEC + (1 − O)·R_loc`, written as one minus the weighted loss
/// ratios so that a failure-free system gives exactly 1. A system with
/// zero weight is skipped.
pub fn ter(mec: &SystemKpis, local: &SystemKpis, osp: f64) -> Result<f64, KpiError> {
    let mut loss = 0.0;
    for (system, kpis, weight) in [("MEC", mec, osp), ("local", local, 1.0 - osp)] {
        if weight == 0.0 {
            continue;
        }
        if !(kpis.admission_rate > 0.0) {
            return Err(KpiError::UndefinedRetainability { system, weight });
        }
        loss += weight * kpis.forced_termination_rate / kpis.admission_rate;
    }
    Ok((1.0 - loss).clamp(0.0, 1.0))
}

/// Per-system components of a [`KpiReport`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SystemKpis {
    pub vms: u32,
    pub arrival_rate: f64,
    pub service_rate: f64,
    pub blocking: f64,
    /// Λ: arrivals that find an idle VM, per unit time.
    pub admission_rate: f64,
    /// F: aborted tasks per unit time.
    pub forced_termination_rate: f64,
    pub mean_occupied: f64,
    /// μ times the mean occupied-VM count.
    pub throughput: f64,
    /// `1 − F/Λ`, absent when nothing is admitted.
    pub retainability: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub steady_state: Option<Vec<StateProbability>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StateProbability {
    pub state: VmState,
    pub probability: f64,
}

impl SystemKpis {
    pub fn from_solution(model: &CtmcModel, ss: &SteadyState) -> Self {
        let blocking = blocking_mass(ss, model);
        let admission_rate = effective_admission_rate(ss, model);
        let forced = forced_termination_rate(ss, model);
        let mean_occupied = mean_occupied(ss, model);
        let rates = model.rates();
        SystemKpis {
            vms: model.vm_count(),
            arrival_rate: rates.arrival,
            service_rate: rates.service,
            blocking,
            admission_rate,
            forced_termination_rate: forced,
            mean_occupied,
            throughput: rates.service * mean_occupied,
            retainability: (admission_rate > 0.0).then(|| 1.0 - forced / admission_rate),
            steady_state: None,
        }
    }

    fn attach_steady_state(&mut self, model: &CtmcModel, ss: &SteadyState) {
        self.steady_state = Some(
            model
                .states()
                .iter()
                .zip(&ss.probabilities)
                .map(|(s, p)| StateProbability {
                    state: *s,
                    probability: *p,
                })
                .collect(),
        );
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KpiReport {
    pub osp: f64,
    pub cra: f64,
    pub tec: f64,
    pub ter: f64,
    pub mec: SystemKpis,
    pub local: SystemKpis,
}

/// Options for [`evaluate_with`].
#[derive(Debug, Clone, Copy, Default)]
pub struct EvalOptions {
    /// Use this OSP instead of the analytical one.
    pub osp: Option<f64>,
    pub handover: HandoverRule,
    /// Attach both steady-state vectors to the report.
    pub include_steady_states: bool,
}

/// KPIs at the analytical OSP with the default handover rule.
pub fn evaluate(p: &SystemParams) -> crate::Result<KpiReport> {
    evaluate_with(p, EvalOptions::default())
}

/// Builds and solves the MEC and local CTMCs and combines them.
///
/// Each chain is solved from the all-idle state, which matters only when
/// it is reducible (no failures and no repairs).
pub fn evaluate_with(p: &SystemParams, opts: EvalOptions) -> crate::Result<KpiReport> {
    let (report, ter) = evaluate_parts(p, opts)?;
    Ok(KpiReport { ter: ter?, ..report })
}

/// Like [`evaluate_with`] but an undefined TER is reported as NaN.
pub fn evaluate_lenient(p: &SystemParams, opts: EvalOptions) -> crate::Result<KpiReport> {
    let (report, ter) = evaluate_parts(p, opts)?;
    Ok(KpiReport {
        ter: ter.unwrap_or(f64::NAN),
        ..report
    })
}

fn evaluate_parts(p: &SystemParams, opts: EvalOptions) -> crate::Result<(KpiReport, Result<f64, KpiError>)> {
    let osp = match opts.osp {
        Some(o) => o,
        None => osp_analytical(p)?.osp,
    };
    let dp = p.derive();
    let (lambda_mec, lambda_loc) = arrival_rates(&dp, osp)?;

    let solve = |m: u32, arrival: f64, service: f64| -> crate::Result<SystemKpis> {
        let model = CtmcModel::new(
            m,
            Rates {
                arrival,
                service,
                failure: p.delta_fail,
                repair: p.gamma_repair,
            },
            opts.handover,
        )?;
        let ss = steady_state_from(&model, model.all_idle())?;
        let mut kpis = SystemKpis::from_solution(&model, &ss);
        if opts.include_steady_states {
            kpis.attach_steady_state(&model, &ss);
        }
        Ok(kpis)
    };
    let mec = solve(p.m_mec, lambda_mec, dp.mu_mec)?;
    let local = solve(p.m_loc, lambda_loc, dp.mu_loc_eff)?;

    let ter = ter(&mec, &local, osp);
    let report = KpiReport {
        osp,
        cra: cra(mec.blocking, local.blocking, osp),
        tec: tec(&mec, &local, osp),
        ter: f64::NAN,
        mec,
        local,
    };
    Ok((report, ter))
}

/// TEC only; skips the retainability check so that it is defined for
/// every VM count.
pub fn tec_at(p: &SystemParams, osp: f64, handover: HandoverRule) -> crate::Result<f64> {
    let dp = p.derive();
    let (lambda_mec, lambda_loc) = arrival_rates(&dp, osp)?;
    let mut total = 0.0;
    for (weight, m, arrival, service) in [
        (osp, p.m_mec, lambda_mec, dp.mu_mec),
        (1.0 - osp, p.m_loc, lambda_loc, dp.mu_loc_eff),
    ] {
        if weight == 0.0 {
            continue;
        }
        let model = CtmcModel::new(
            m,
            Rates {
                arrival,
                service,
                failure: p.delta_fail,
                repair: p.gamma_repair,
            },
            handover,
        )?;
        let ss = steady_state_from(&model, model.all_idle())?;
        total += weight * service * mean_occupied(&ss, &model);
    }
    Ok(total)
}
