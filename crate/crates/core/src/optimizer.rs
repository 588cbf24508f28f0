//! Choice of the TEC-maximizing number of MEC VMs.
//!
//! More VMs admit more tasks but each one runs slower, since the per-VM
//! rate is `μ_o/(1+d)^(M−1)`. [`optimal_vm_count`] walks up from one VM
//! and stops at the first step that does not improve TEC;
//! [`exhaustive_scan`] evaluates the whole curve.

use rayon::prelude::*;
use serde::Serialize;

use crate::ctmc::{HandoverRule, MAX_VMS};
use crate::kpi::tec_at;
use crate::params::SystemParams;

/// Default upper bound on the VM count searched.
pub const DEFAULT_M_MAX: u32 = 60;

/// Relative margin a step must clear to count as an improvement.
pub const IMPROVEMENT_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimizationResult {
    pub m_star: u32,
    pub c_star: f64,
    /// Every `(m, TEC(m))` evaluated, including the final rejected step.
    pub trace: Vec<(u32, f64)>,
    /// The search hit `m_max` while still improving.
    pub capped: bool,
}

/// Hill climb from `m = 1` with `C(0) = −∞`.
pub fn optimal_vm_count(p: &SystemParams, osp: f64) -> crate::Result<OptimizationResult> {
    optimal_vm_count_with(p, osp, DEFAULT_M_MAX, HandoverRule::default())
}

pub fn optimal_vm_count_with(
    p: &SystemParams,
    osp: f64,
    m_max: u32,
    handover: HandoverRule,
) -> crate::Result<OptimizationResult> {
    let m_max = m_max.clamp(1, MAX_VMS);
    let mut trace = Vec::new();
    let mut best = (0u32, f64::NEG_INFINITY);
    for m in 1..=m_max {
        let c = tec_at(&p.with_m_mec(m), osp, handover)?;
        trace.push((m, c));
        if !improves(c, best.1) {
            return Ok(OptimizationResult {
                m_star: best.0,
                c_star: best.1,
                trace,
                capped: false,
            });
        }
        best = (m, c);
    }
    Ok(OptimizationResult {
        m_star: best.0,
        c_star: best.1,
        trace,
        capped: true,
    })
}

fn improves(c: f64, previous: f64) -> bool {
    if previous == f64::NEG_INFINITY {
        return true;
    }
    c > previous + IMPROVEMENT_TOLERANCE * previous.abs()
}

/// `TEC(m)` for `m` in `1..=m_max`, evaluated in parallel.
pub fn exhaustive_scan(p: &SystemParams, osp: f64, m_max: u32) -> crate::Result<Vec<(u32, f64)>> {
    exhaustive_scan_with(p, osp, m_max, HandoverRule::default())
}

pub fn exhaustive_scan_with(
    p: &SystemParams,
    osp: f64,
    m_max: u32,
    handover: HandoverRule,
) -> crate::Result<Vec<(u32, f64)>> {
    (1..=m_max.max(1))
        .into_par_iter()
        .map(|m| tec_at(&p.with_m_mec(m), osp, handover).map(|c| (m, c)))
        .collect()
}

/// Index of the largest TEC in a scan; the first one on ties.
pub fn scan_argmax(curve: &[(u32, f64)]) -> Option<(u32, f64)> {
    curve
        .iter()
        .copied()
        .fold(None, |best: Option<(u32, f64)>, point| match best {
            Some(b) if b.1 >= point.1 => Some(b),
            _ => Some(point),
        })
}
