//! Joint communication and computation dependability model for MEC-enabled
//! uplink networks.
//!
//! The communication side is the offloading success probability (OSP) of a
//! typical device under network-wide uplink interference with channel
//! inversion power control ([`coverage`], validated by the Monte Carlo
//! simulator in [`spatial`]). The computation side models the VMs of the
//! MEC server and of each device as a failure/repair CTMC ([`ctmc`]); the
//! two are combined into availability, capacity and retainability KPIs
//! ([`kpi`]) and used to pick the capacity-maximizing VM count
//! ([`optimizer`]).

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod coverage;
pub mod ctmc;
pub mod kpi;
pub mod optimizer;
pub mod params;
pub mod selftest;
pub mod spatial;
pub mod specfun;

pub use coverage::{osp_analytical, OspBreakdown, VORONOI_CONSTANT};
pub use ctmc::{CtmcModel, HandoverRule, Rates, SteadyState, VmState};
pub use kpi::{KpiReport, SystemKpis};
pub use optimizer::{exhaustive_scan, optimal_vm_count, OptimizationResult};
pub use params::{DerivedParams, ParamError, SystemParams};
pub use spatial::{simulate_osp, OspEstimate, SimConfig};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed configuration: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid parameter: {0}")]
    Param(#[from] ParamError),
    #[error(transparent)]
    SpecFun(#[from] specfun::SpecFunError),
    #[error(transparent)]
    Coverage(#[from] coverage::CoverageError),
    #[error(transparent)]
    Simulation(#[from] spatial::SimError),
    #[error(transparent)]
    Ctmc(#[from] ctmc::CtmcError),
    #[error(transparent)]
    Kpi(#[from] kpi::KpiError),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
