//! VM failure/repair/service CTMC.
//!
//! A state `(x_I, x_O, x_F)` counts idle, occupied and failed VMs out of
//! `M`. Six events move between states:
//!
//! | event                                   | destination              | rate      | guard            |
//! |-----------------------------------------|--------------------------|-----------|------------------|
//! | arrival takes an idle VM                | `(x_I−1, x_O+1, x_F)`    | `λ`       | `x_I > 0`        |
//! | service completion                      | `(x_I+1, x_O−1, x_F)`    | `x_O·μ`   | `x_O > 0`        |
//! | idle VM fails                           | `(x_I−1, x_O, x_F+1)`    | `x_I·δ`   | `x_I > 0`        |
//! | occupied VM fails, task handed over     | see [`HandoverRule`]     | `x_O·δ`   | `x_O, x_I > 0`   |
//! | occupied VM fails, task aborted         | `(x_I, x_O−1, x_F+1)`    | `x_O·δ`   | `x_O > 0, x_I=0` |
//! | repair                                  | `(x_I+1, x_O, x_F−1)`    | `x_F·γ`   | `x_F > 0`        |
//!
//! States are ordered by `x_I` descending, then `x_O` descending, so index
//! 0 is the all-idle state and serialized vectors line up across runs.

mod gillespie;
pub mod linalg;

pub use gillespie::{gillespie_occupancy, gillespie_occupancy_from, Occupancy};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use linalg::{lu_solve, DenseMatrix};

/// Largest VM count a model may have; the dense generator has
/// `(M+1)(M+2)/2` rows.
pub const MAX_VMS: u32 = 80;

/// Up to this many states the solver also evaluates `1·(Q + 𝟙)^-1`.
pub const CLOSED_FORM_MAX_STATES: usize = 496;

const PIVOT_TOL: f64 = 1e-13;
const NEGATIVE_CLAMP: f64 = 1e-12;
const CROSS_CHECK_TOL: f64 = 1e-8;
/// Pivot ratio beyond which the closed form is considered ill-conditioned.
const CROSS_CHECK_MAX_PIVOT_RATIO: f64 = 1e8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CtmcError {
    #[error("VM count must be in 1..={MAX_VMS}, got {0}")]
    VmCount(u32),
    #[error("rate {name} must be finite and nonnegative, got {value}")]
    Rate { name: &'static str, value: f64 },
    #[error("generator is reducible: {} closed classes, e.g. {witness}", closed_classes.len())]
    Reducible {
        closed_classes: Vec<Vec<VmState>>,
        witness: String,
    },
    #[error("steady-state entry {value:e} at state {state} is negative beyond rounding")]
    NegativeProbability { state: VmState, value: f64 },
    #[error("linear solve and closed form disagree by {0:e}")]
    CrossCheck(f64),
    #[error("state {0} is not part of the model")]
    UnknownState(VmState),
    #[error("simulation needs horizon > burn_in > 0, got horizon {horizon}, burn-in {burn_in}")]
    Horizon { horizon: f64, burn_in: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct VmState {
    pub idle: u32,
    pub occupied: u32,
    pub failed: u32,
}

impl VmState {
    pub const fn new(idle: u32, occupied: u32, failed: u32) -> Self {
        VmState {
            idle,
            occupied,
            failed,
        }
    }

    pub fn total(&self) -> u32 {
        self.idle + self.occupied + self.failed
    }
}

impl std::fmt::Display for VmState {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({}, {}, {})", self.idle, self.occupied, self.failed)
    }
}

/// Where a task goes when its VM fails while an idle VM is available.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HandoverRule {
    /// The task resumes on the idle VM: `(x_I−1, x_O, x_F+1)`.
    #[default]
    Resume,
    /// The task is dropped even though a VM is idle: `(x_I, x_O−1, x_F+1)`.
    Abort,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Rates {
    pub arrival: f64,
    pub service: f64,
    pub failure: f64,
    pub repair: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Event {
    Arrival,
    Completion,
    IdleFailure,
    FailureHandover,
    FailureAbort,
    Repair,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Transition {
    pub from: usize,
    pub to: usize,
    pub rate: f64,
    pub event: Event,
}

/// All compositions of `m` into (idle, occupied, failed), in model order.
pub fn enumerate_states(m: u32) -> Vec<VmState> {
    let mut states = Vec::with_capacity(state_count(m));
    for idle in (0..=m).rev() {
        for occupied in (0..=m - idle).rev() {
            states.push(VmState::new(idle, occupied, m - idle - occupied));
        }
    }
    states
}

pub fn state_count(m: u32) -> usize {
    let m = m as usize;
    (m + 1) * (m + 2) / 2
}

#[derive(Debug, Clone)]
pub struct CtmcModel {
    m: u32,
    rates: Rates,
    handover: HandoverRule,
    states: Vec<VmState>,
    transitions: Vec<Transition>,
    generator: DenseMatrix,
}

impl CtmcModel {
    pub fn new(m: u32, rates: Rates, handover: HandoverRule) -> Result<Self, CtmcError> {
        if m == 0 || m > MAX_VMS {
            return Err(CtmcError::VmCount(m));
        }
        for (name, value) in [
            ("arrival", rates.arrival),
            ("service", rates.service),
            ("failure", rates.failure),
            ("repair", rates.repair),
        ] {
            if !(value >= 0.0) || !value.is_finite() {
                return Err(CtmcError::Rate { name, value });
            }
        }

        let states = enumerate_states(m);
        let mut transitions = Vec::new();
        for (from, s) in states.iter().enumerate() {
            let (i, o, f) = (s.idle, s.occupied, s.failed);
            let mut push = |to: VmState, rate: f64, event: Event| {
                if rate > 0.0 {
                    transitions.push(Transition {
                        from,
                        to: ordinal(m, to),
                        rate,
                        event,
                    });
                }
            };
            if i > 0 {
                push(VmState::new(i - 1, o + 1, f), rates.arrival, Event::Arrival);
                push(VmState::new(i - 1, o, f + 1), i as f64 * rates.failure, Event::IdleFailure);
            }
            if o > 0 {
                push(VmState::new(i + 1, o - 1, f), o as f64 * rates.service, Event::Completion);
                let fail = o as f64 * rates.failure;
                if i > 0 {
                    let to = match handover {
                        HandoverRule::Resume => VmState::new(i - 1, o, f + 1),
                        HandoverRule::Abort => VmState::new(i, o - 1, f + 1),
                    };
                    push(to, fail, Event::FailureHandover);
                } else {
                    push(VmState::new(i, o - 1, f + 1), fail, Event::FailureAbort);
                }
            }
            if f > 0 {
                push(VmState::new(i + 1, o, f - 1), f as f64 * rates.repair, Event::Repair);
            }
        }

        let mut generator = DenseMatrix::zeros(states.len());
        for t in &transitions {
            generator.add(t.from, t.to, t.rate);
            generator.add(t.from, t.from, -t.rate);
        }

        Ok(CtmcModel {
            m,
            rates,
            handover,
            states,
            transitions,
            generator,
        })
    }

    pub fn vm_count(&self) -> u32 {
        self.m
    }

    pub fn rates(&self) -> Rates {
        self.rates
    }

    pub fn handover(&self) -> HandoverRule {
        self.handover
    }

    pub fn states(&self) -> &[VmState] {
        &self.states
    }

    pub fn transitions(&self) -> &[Transition] {
        &self.transitions
    }

    pub fn generator(&self) -> &DenseMatrix {
        &self.generator
    }

    pub fn index_of(&self, state: VmState) -> Option<usize> {
        (state.total() == self.m).then(|| ordinal(self.m, state))
    }

    pub fn all_idle(&self) -> VmState {
        VmState::new(self.m, 0, 0)
    }

    /// Indices of the states reachable from `start`, in model order.
    pub fn reachable_from(&self, start: usize) -> Vec<usize> {
        let adjacency = self.adjacency();
        let mut seen = vec![false; self.states.len()];
        let mut stack = vec![start];
        seen[start] = true;
        while let Some(s) = stack.pop() {
            for &t in &adjacency[s] {
                if !seen[t] {
                    seen[t] = true;
                    stack.push(t);
                }
            }
        }
        (0..self.states.len()).filter(|&i| seen[i]).collect()
    }

    fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adjacency = vec![Vec::new(); self.states.len()];
        for t in &self.transitions {
            adjacency[t.from].push(t.to);
        }
        adjacency
    }

    /// Closed communicating classes, each in model order.
    pub fn closed_classes(&self) -> Vec<Vec<usize>> {
        let n = self.states.len();
        let reach: Vec<Vec<bool>> = (0..n)
            .map(|s| {
                let mut row = vec![false; n];
                for i in self.reachable_from(s) {
                    row[i] = true;
                }
                row
            })
            .collect();
        let mut classes: Vec<Vec<usize>> = Vec::new();
        let mut assigned = vec![false; n];
        for s in 0..n {
            if assigned[s] {
                continue;
            }
            let members: Vec<usize> = (0..n).filter(|&j| reach[s][j]).collect();
            if members.iter().all(|&j| reach[j][s]) {
                for &j in &members {
                    assigned[j] = true;
                }
                classes.push(members);
            }
        }
        classes
    }

    /// `‖τ·Q‖∞` without touching the dense generator.
    pub fn residual(&self, tau: &[f64]) -> f64 {
        let mut flow = vec![0.0; self.states.len()];
        for t in &self.transitions {
            let f = tau[t.from] * t.rate;
            flow[t.to] += f;
            flow[t.from] -= f;
        }
        flow.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

/// Position of `s` in [`enumerate_states`] order.
fn ordinal(m: u32, s: VmState) -> usize {
    let a = (m - s.idle) as usize;
    a * (a + 1) / 2 + (a - s.occupied as usize)
}

/// Stationary distribution aligned with [`CtmcModel::states`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SteadyState {
    pub probabilities: Vec<f64>,
    /// `‖τ·Q‖∞` of the returned vector.
    pub residual: f64,
}

impl SteadyState {
    pub fn probability(&self, model: &CtmcModel, state: VmState) -> Option<f64> {
        model.index_of(state).map(|i| self.probabilities[i])
    }

    /// Sum of τ over states satisfying `pred`.
    pub fn mass_where(&self, model: &CtmcModel, pred: impl Fn(&VmState) -> bool) -> f64 {
        model
            .states()
            .iter()
            .zip(&self.probabilities)
            .filter(|(s, _)| pred(s))
            .map(|(_, p)| p)
            .sum()
    }
}

/// Solves `τQ = 0, Στ = 1` over the whole state space.
///
/// One balance equation is replaced by the normalization and the system is
/// solved by LU with partial pivoting. Small models are also solved through
/// `τ = 1·(Q + 𝟙)^-1` and the two answers must agree.
pub fn steady_state(model: &CtmcModel) -> Result<SteadyState, CtmcError> {
    let all: Vec<usize> = (0..model.states.len()).collect();
    solve_on(model, &all)
}

/// Stationary law of the chain started in `initial`: the solve is
/// restricted to the states reachable from it, and the rest get mass 0.
pub fn steady_state_from(model: &CtmcModel, initial: VmState) -> Result<SteadyState, CtmcError> {
    let start = model
        .index_of(initial)
        .ok_or(CtmcError::UnknownState(initial))?;
    solve_on(model, &model.reachable_from(start))
}

fn solve_on(model: &CtmcModel, subset: &[usize]) -> Result<SteadyState, CtmcError> {
    let n = subset.len();
    let full = model.states.len();
    let mut local = vec![usize::MAX; full];
    for (k, &i) in subset.iter().enumerate() {
        local[i] = k;
    }

    // Transposed balance equations Q^T τ^T = 0, last one replaced by Στ = 1.
    let mut q = DenseMatrix::zeros(n);
    for t in &model.transitions {
        let (from, to) = (local[t.from], local[t.to]);
        if from != usize::MAX && to != usize::MAX {
            q.add(from, to, t.rate);
            q.add(from, from, -t.rate);
        }
    }
    let mut a = q.transpose();
    for j in 0..n {
        a.set(n - 1, j, 1.0);
    }
    let mut rhs = vec![0.0; n];
    rhs[n - 1] = 1.0;
    let solution = match lu_solve(a, rhs, PIVOT_TOL) {
        Ok(s) => s,
        Err(_) => return Err(reducible_error(model)),
    };

    let mut tau = solution.x;
    for (k, v) in tau.iter_mut().enumerate() {
        if *v < 0.0 {
            if *v < -NEGATIVE_CLAMP {
                return Err(CtmcError::NegativeProbability {
                    state: model.states[subset[k]],
                    value: *v,
                });
            }
            *v = 0.0;
        }
    }
    let total: f64 = tau.iter().sum();
    tau.iter_mut().for_each(|v| *v /= total);

    if n <= CLOSED_FORM_MAX_STATES {
        if let Some(closed) = closed_form(&q) {
            let diff = closed
                .iter()
                .zip(&tau)
                .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            if diff > CROSS_CHECK_TOL {
                return Err(CtmcError::CrossCheck(diff));
            }
        }
    }

    let mut probabilities = vec![0.0; full];
    for (k, &i) in subset.iter().enumerate() {
        probabilities[i] = tau[k];
    }
    let residual = model.residual(&probabilities);
    Ok(SteadyState {
        probabilities,
        residual,
    })
}

/// `τ = 1·(Q + 𝟙)^-1`, i.e. `(Q + 𝟙)^T τ^T = 1`. `None` when the system is
/// singular or too poorly conditioned for the comparison to mean anything.
pub fn closed_form(q: &DenseMatrix) -> Option<Vec<f64>> {
    let n = q.dim();
    let mut a = q.transpose();
    for i in 0..n {
        for j in 0..n {
            a.add(i, j, 1.0);
        }
    }
    let solution = lu_solve(a, vec![1.0; n], PIVOT_TOL).ok()?;
    (solution.pivot_ratio() <= CROSS_CHECK_MAX_PIVOT_RATIO).then_some(solution.x)
}

fn reducible_error(model: &CtmcModel) -> CtmcError {
    let closed_classes: Vec<Vec<VmState>> = model
        .closed_classes()
        .into_iter()
        .map(|c| c.into_iter().map(|i| model.states[i]).collect())
        .collect();
    let witness = closed_classes
        .iter()
        .take(2)
        .map(|c| {
            let shown: Vec<String> = c.iter().take(4).map(|s| s.to_string()).collect();
            let more = if c.len() > 4 { ", ..." } else { "" };
            format!("{{{}{}}}", shown.join(", "), more)
        })
        .collect::<Vec<_>>()
        .join(" and ");
    CtmcError::Reducible {
        closed_classes,
        witness,
    }
}

#[cfg(test)]
mod tests;
