//! Stochastic simulation of a [`CtmcModel`], used as an oracle for the
//! linear solver.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{CtmcError, CtmcModel, Event, VmState};

/// Time-weighted state occupancy plus event counters, all after burn-in.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Occupancy {
    /// Fraction of observed time spent in each state, in model order.
    pub distribution: Vec<f64>,
    pub observed_time: f64,
    /// Arrivals offered, including those that found no idle VM.
    pub arrivals: u64,
    pub admitted: u64,
    /// Tasks dropped by a failure with no idle VM to take over.
    pub aborted: u64,
}

impl Occupancy {
    pub fn admitted_fraction(&self) -> f64 {
        self.admitted as f64 / self.arrivals as f64
    }

    pub fn total_variation(&self, other: &[f64]) -> f64 {
        0.5 * self
            .distribution
            .iter()
            .zip(other)
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>()
    }
}

/// Simulates from the all-idle state.
pub fn gillespie_occupancy(
    model: &CtmcModel,
    horizon: f64,
    burn_in: f64,
    seed: u64,
) -> Result<Occupancy, CtmcError> {
    gillespie_occupancy_from(model, model.all_idle(), horizon, burn_in, seed)
}

pub fn gillespie_occupancy_from(
    model: &CtmcModel,
    initial: VmState,
    horizon: f64,
    burn_in: f64,
    seed: u64,
) -> Result<Occupancy, CtmcError> {
    if !(burn_in > 0.0 && horizon > burn_in && horizon.is_finite()) {
        return Err(CtmcError::Horizon { horizon, burn_in });
    }
    let mut state = model
        .index_of(initial)
        .ok_or(CtmcError::UnknownState(initial))?;

    let n = model.states().len();
    let mut outgoing: Vec<Vec<(usize, f64, Event)>> = vec![Vec::new(); n];
    for t in model.transitions() {
        outgoing[t.from].push((t.to, t.rate, t.event));
    }
    // Arrivals to a full system are self-loops that only bump a counter.
    let lambda = model.rates().arrival;
    for (i, s) in model.states().iter().enumerate() {
        if s.idle == 0 && lambda > 0.0 {
            outgoing[i].push((i, lambda, Event::Arrival));
        }
    }
    let totals: Vec<f64> = outgoing.iter().map(|o| o.iter().map(|t| t.1).sum()).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut time_in = vec![0.0; n];
    let mut out = Occupancy {
        distribution: Vec::new(),
        observed_time: horizon - burn_in,
        arrivals: 0,
        admitted: 0,
        aborted: 0,
    };
    let mut t = 0.0;
    while t < horizon {
        let total = totals[state];
        let dwell = if total > 0.0 {
            -(1.0 - rng.random::<f64>()).ln() / total
        } else {
            f64::INFINITY
        };
        let end = (t + dwell).min(horizon);
        if end > burn_in {
            time_in[state] += end - t.max(burn_in);
        }
        if end >= horizon {
            break;
        }
        t = end;

        let mut pick = rng.random::<f64>() * total;
        let mut chosen = outgoing[state].last().copied().expect("positive total rate");
        for &candidate in &outgoing[state] {
            if pick < candidate.1 {
                chosen = candidate;
                break;
            }
            pick -= candidate.1;
        }
        let (to, _, event) = chosen;
        if t > burn_in {
            match event {
                Event::Arrival => {
                    out.arrivals += 1;
                    if to != state {
                        out.admitted += 1;
                    }
                }
                Event::FailureAbort => out.aborted += 1,
                _ => {}
            }
        }
        state = to;
    }

    let observed = out.observed_time;
    out.distribution = time_in.into_iter().map(|x| x / observed).collect();
    Ok(out)
}
