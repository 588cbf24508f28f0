//! Fast invariant checks that can run on any installation.

use serde::Serialize;

use crate::coverage::{laplace_out, laplace_out_eta4, osp_analytical, NeighborPmf};
use crate::ctmc::{enumerate_states, steady_state, steady_state_from, CtmcModel, HandoverRule, Rates};
use crate::kpi::{blocking_mass, evaluate};
use crate::params::SystemParams;
use crate::specfun::{gauss_2f1_coverage, tail_integral, HypergeoArgs};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, passed: bool, detail: String) -> Check {
    Check {
        name,
        passed,
        detail,
    }
}

fn rates(arrival: f64, service: f64, failure: f64, repair: f64) -> Rates {
    Rates {
        arrival,
        service,
        failure,
        repair,
    }
}

pub fn run() -> Vec<Check> {
    let mut out = Vec::new();

    let mut worst: f64 = 0.0;
    for k in 0..=60 {
        let theta = 10f64.powf(-3.0 + 0.1 * k as f64);
        let a = laplace_out(theta, 0.3, 4.0, 4.0).unwrap_or(f64::NAN);
        let b = laplace_out_eta4(theta, 0.3, 4.0);
        worst = worst.max((a / b - 1.0).abs());
    }
    out.push(check("hypergeometric path matches arctan form", worst <= 1e-10, format!("max rel err {worst:.2e}")));

    let mut worst: f64 = 0.0;
    for eta in [3.0, 3.5, 4.0, 5.0] {
        for theta in [0.05, 1.0, 20.0] {
            let f = HypergeoArgs::new(eta, theta)
                .and_then(gauss_2f1_coverage)
                .unwrap_or(f64::NAN);
            let lhs = theta.powf(2.0 / eta) * tail_integral(eta, theta.powf(-1.0 / eta));
            let rhs = theta / (eta - 2.0) * f;
            worst = worst.max((lhs / rhs - 1.0).abs());
        }
    }
    out.push(check("tail integral matches hypergeometric form", worst <= 1e-9, format!("max rel err {worst:.2e}")));

    let pmf = NeighborPmf::new(6.4, 0.1, 2000);
    let err = (pmf.mass() - 1.0).abs();
    out.push(check("neighbor PMF normalizes", err <= 1e-9, format!("|mass - 1| = {err:.2e}")));

    let bad = (1..=60).find(|&m| enumerate_states(m).len() != ((m + 1) * (m + 2) / 2) as usize);
    out.push(check("state counts", bad.is_none(), format!("first mismatch {bad:?}")));

    let model = CtmcModel::new(20, rates(7.968, 0.9, 0.1, 1.0), HandoverRule::Resume);
    let (row_err, residual) = match model.as_ref().map(|m| (m, steady_state(m))) {
        Ok((m, Ok(ss))) => {
            let q = m.generator();
            let row_err = (0..q.dim())
                .map(|i| q.row(i).iter().sum::<f64>().abs())
                .fold(0.0, f64::max);
            (row_err, ss.residual)
        }
        _ => (f64::NAN, f64::NAN),
    };
    out.push(check("generator rows sum to zero", row_err <= 1e-12, format!("max |row sum| {row_err:.2e}")));
    out.push(check("steady-state residual", residual <= 1e-9, format!("{residual:.2e}")));

    let (lambda, mu, m) = (7.968, 2.049, 5u32);
    let erlang = {
        let a = lambda / mu;
        (1..=m).fold(1.0, |b, k| a * b / (k as f64 + a * b))
    };
    let blocking = CtmcModel::new(m, rates(lambda, mu, 0.0, 0.0), HandoverRule::Resume)
        .ok()
        .and_then(|model| {
            steady_state_from(&model, model.all_idle())
                .ok()
                .map(|ss| blocking_mass(&ss, &model))
        })
        .unwrap_or(f64::NAN);
    let err = (blocking - erlang).abs();
    out.push(check("failure-free blocking is Erlang B", err <= 1e-9, format!("|diff| = {err:.2e}")));

    let p = SystemParams::table2();
    let osp = osp_analytical(&p).map(|b| b.osp).unwrap_or(f64::NAN);
    out.push(check("reference OSP", (osp - 0.83).abs() <= 0.02, format!("{osp:.6}")));

    let mut p = SystemParams::table2();
    p.delta_fail = 0.0;
    let ter = evaluate(&p).map(|r| r.ter).unwrap_or(f64::NAN);
    out.push(check("failure-free retainability is 1", ter == 1.0, format!("{ter}")));

    out
}

#[cfg(test)]
mod tests {
    #[test]
    fn all_checks_pass() {
        for c in super::run() {
            assert!(c.passed, "{}: {}", c.name, c.detail);
        }
    }
}
