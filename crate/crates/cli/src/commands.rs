use std::io::Write;
use std::path::Path;

use mec_depend::coverage::osp_analytical;
use mec_depend::kpi::{evaluate_with, EvalOptions};
use mec_depend::optimizer::optimal_vm_count_with;
use mec_depend::params::db_to_linear;
use mec_depend::spatial::{simulate_osp_sweep, SimConfig};
use mec_depend::{selftest, HandoverRule, SystemParams};
use serde::Serialize;

use crate::error::CliError;
use crate::output::{write_csv, write_json};
use crate::sweep::{self, SweepRequest};
use crate::{Cli, Command};

pub fn load_params(path: Option<&Path>, swap: bool) -> Result<SystemParams, CliError> {
    let params = match path {
        None => SystemParams::table2(),
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|source| CliError::Read {
                path: path.to_path_buf(),
                source,
            })?;
            let raw: SystemParams = serde_json::from_str(&text)
                .map_err(|e| CliError::json(&path.display().to_string(), &text, &e))?;
            raw.validate().map_err(|e| CliError::Config(e.to_string()))?
        }
    };
    Ok(if swap {
        params.with_failure_repair_swapped()
    } else {
        params
    })
}

fn check_osp(osp: Option<f64>) -> Result<Option<f64>, CliError> {
    match osp {
        Some(o) if !(0.0..=1.0).contains(&o) => Err(CliError::Config(format!("--osp must lie in [0, 1], got {o}"))),
        _ => Ok(osp),
    }
}

#[derive(Serialize)]
struct OspOutput {
    theta_db: f64,
    p_a: f64,
    kappa: f64,
    #[serde(flatten)]
    breakdown: mec_depend::OspBreakdown,
}

pub fn run(cli: &Cli) -> Result<(), CliError> {
    let g = &cli.global;
    let params = load_params(g.config.as_deref(), g.swap_failure_repair)?;
    let handover: HandoverRule = g.handover.into();
    let out = g.out.as_deref();

    match &cli.command {
        Command::Osp { theta_db } => {
            let mut p = params;
            if let Some(t) = theta_db {
                p = p.with_theta_db(*t).validate().map_err(|e| CliError::Config(e.to_string()))?;
            }
            let dp = p.derive();
            let breakdown = osp_analytical(&p).map_err(mec_depend::Error::from)?;
            write_json(
                out,
                &OspOutput {
                    theta_db: p.theta_db,
                    p_a: dp.p_a,
                    kappa: dp.kappa,
                    breakdown,
                },
            )?;
        }
        Command::OspVerify {
            theta_db,
            p_a,
            window_km,
        } => {
            let mut p = params;
            if let Some(p_a) = p_a {
                p.p_a_override = Some(*p_a);
                p.t_s = None;
                p = p.validate().map_err(|e| CliError::Config(e.to_string()))?;
            }
            let cfg = SimConfig {
                window_km: *window_km,
                trials: g.trials,
                seed: g.seed,
                torus: true,
            };
            let thetas: Vec<f64> = theta_db.0.iter().map(|d| db_to_linear(*d)).collect();
            log::info!("simulating {} trials over {} thresholds", g.trials, thetas.len());
            let sims = simulate_osp_sweep(&p, &cfg, &thetas)?;
            let mut rows = Vec::with_capacity(thetas.len());
            for (db, sim) in theta_db.0.iter().zip(&sims) {
                let analytical = osp_analytical(&p.with_theta_db(*db)).map_err(mec_depend::Error::from)?.osp;
                rows.push(vec![*db, analytical, sim.mean, sim.stderr, (analytical - sim.mean).abs()]);
            }
            let header = ["theta_db", "osp_analytical", "osp_sim", "stderr", "abs_diff"].map(String::from);
            write_csv(out, &header, &rows)?;
        }
        Command::Kpis { osp } => {
            let report = evaluate_with(
                &params,
                EvalOptions {
                    osp: check_osp(*osp)?,
                    handover,
                    include_steady_states: g.verbose,
                },
            )?;
            write_json(out, &report)?;
        }
        Command::Optimize { m_max, osp } => {
            if !(1..=mec_depend::ctmc::MAX_VMS).contains(m_max) {
                return Err(CliError::Config(format!(
                    "--m-max must be in 1..={}, got {m_max}",
                    mec_depend::ctmc::MAX_VMS
                )));
            }
            let osp = match check_osp(*osp)? {
                Some(o) => o,
                None => osp_analytical(&params).map_err(mec_depend::Error::from)?.osp,
            };
            let result = optimal_vm_count_with(&params, osp, *m_max, handover)?;
            if result.capped {
                log::warn!("TEC still increasing at the cap m = {m_max}");
            }
            write_json(out, &result)?;
        }
        Command::Sweep {
            param,
            values,
            kpis,
            family,
            osp,
        } => {
            let (header, rows) = sweep::run(&SweepRequest {
                base: &params,
                param: *param,
                values: &values.0,
                family: family.as_ref(),
                kpis,
                opts: EvalOptions {
                    osp: check_osp(*osp)?,
                    handover,
                    include_steady_states: false,
                },
            })?;
            write_csv(out, &header, &rows)?;
        }
        Command::Selftest => {
            let checks = selftest::run();
            let mut w = crate::output::open(out)?;
            for c in &checks {
                writeln!(w, "{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail)?;
            }
            w.flush()?;
            let failed: Vec<&str> = checks.iter().filter(|c| !c.passed).map(|c| c.name).collect();
            if !failed.is_empty() {
                return Err(CliError::SelfTest(failed.join(", ")));
            }
        }
    }
    Ok(())
}
