//! `mec-depend`: offloading success probability, VM dependability KPIs and
//! the optimal MEC VM count from the command line.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod error;
mod output;
mod sweep;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use mec_depend::HandoverRule;

use error::CliError;
use sweep::{Family, Kpi, SweepParam, Values};

#[derive(Debug, Parser)]
#[command(name = "mec-depend", version, about = "Communication and computation dependability of MEC uplinks")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Global {
    /// JSON parameter file; the bundled reference parameters if omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 1)]
    pub seed: u64,
    /// Monte Carlo trials per point.
    #[arg(long, global = true, default_value_t = 200_000)]
    pub trials: u64,
    /// Output file; standard output if omitted.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Log progress and include steady-state vectors in KPI output.
    #[arg(long, short, global = true)]
    pub verbose: bool,
    /// Where a task goes when its VM fails while another VM is idle.
    #[arg(long, global = true, value_enum, default_value_t = Handover::Resume)]
    pub handover: Handover,
    /// Exchange the failure and repair rates of the configuration.
    #[arg(long, global = true)]
    pub swap_failure_repair: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Handover {
    /// The task moves to an idle VM.
    Resume,
    /// The task is dropped.
    Abort,
}

impl From<Handover> for HandoverRule {
    fn from(h: Handover) -> Self {
        match h {
            Handover::Resume => HandoverRule::Resume,
            Handover::Abort => HandoverRule::Abort,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Analytical offloading success probability and its factors (JSON).
    Osp {
        #[arg(long, allow_hyphen_values = true)]
        theta_db: Option<f64>,
    },
    /// Analytical vs simulated OSP over a threshold grid (CSV).
    OspVerify {
        /// Thresholds in dB, as start:stop:step or a list.
        #[arg(long, default_value = "-20:0:1", allow_hyphen_values = true)]
        theta_db: Values,
        /// Device activity probability, overriding the configuration.
        #[arg(long)]
        p_a: Option<f64>,
        /// Side of the simulation window, km.
        #[arg(long, default_value_t = 200.0)]
        window_km: f64,
    },
    /// Availability, capacity and retainability (JSON).
    Kpis {
        /// Use this OSP instead of the analytical one.
        #[arg(long)]
        osp: Option<f64>,
    },
    /// TEC-maximizing number of MEC VMs (JSON).
    Optimize {
        #[arg(long, default_value_t = mec_depend::optimizer::DEFAULT_M_MAX)]
        m_max: u32,
        #[arg(long)]
        osp: Option<f64>,
    },
    /// KPIs over a parameter range (CSV).
    Sweep {
        #[arg(value_enum)]
        param: SweepParam,
        /// start:stop:step or a comma-separated list.
        #[arg(allow_hyphen_values = true)]
        values: Values,
        /// KPI columns.
        #[arg(long, value_enum, value_delimiter = ',', default_values_t = [Kpi::Osp, Kpi::Cra, Kpi::Tec, Kpi::Ter])]
        kpis: Vec<Kpi>,
        /// Second parameter, PARAM=VALUES; one row per combination.
        #[arg(long)]
        family: Option<Family>,
        #[arg(long)]
        osp: Option<f64>,
    },
    /// Quick invariant checks.
    Selftest,
}

fn init_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("MEC_DEPEND_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| CliError::Config(format!("MEC_DEPEND_THREADS must be a positive integer, got '{raw}'")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::Config(e.to_string()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.global.verbose { "info" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    let result = init_threads().and_then(|()| commands::run(&cli));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
