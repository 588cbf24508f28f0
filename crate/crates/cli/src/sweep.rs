//! Parameter sweeps.

use std::fmt;
use std::str::FromStr;

use clap::ValueEnum;
use mec_depend::kpi::{evaluate_lenient, EvalOptions, KpiReport};
use mec_depend::SystemParams;

use crate::error::CliError;

/// Parameters a sweep can vary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum SweepParam {
    ThetaDb,
    PA,
    LambdaA,
    /// Devices per BS per channel; the device density follows.
    Kappa,
    GammaRepair,
    DeltaFail,
    MMec,
    MuR,
}

impl SweepParam {
    pub fn name(self) -> &'static str {
        match self {
            SweepParam::ThetaDb => "theta_db",
            SweepParam::PA => "p_a",
            SweepParam::LambdaA => "lambda_a",
            SweepParam::Kappa => "kappa",
            SweepParam::GammaRepair => "gamma_repair",
            SweepParam::DeltaFail => "delta_fail",
            SweepParam::MMec => "m_mec",
            SweepParam::MuR => "mu_r",
        }
    }

    pub fn apply(self, p: &SystemParams, value: f64) -> Result<SystemParams, CliError> {
        let mut p = p.clone();
        match self {
            SweepParam::ThetaDb => p.theta_db = value,
            SweepParam::PA => {
                p.p_a_override = Some(value);
                p.t_s = None;
            }
            SweepParam::LambdaA => p.lambda_a = value,
            SweepParam::Kappa => p.lambda_d = value * p.lambda_b * p.channels as f64,
            SweepParam::GammaRepair => p.gamma_repair = value,
            SweepParam::DeltaFail => p.delta_fail = value,
            SweepParam::MMec => {
                if value.fract() != 0.0 || value < 1.0 {
                    return Err(CliError::Config(format!("m_mec must be a positive integer, got {value}")));
                }
                p.m_mec = value as u32;
            }
            SweepParam::MuR => {
                p.mu_r = Some(value);
                p.mu_loc = None;
            }
        }
        p.validate()
            .map_err(|e| CliError::Config(format!("{} = {value}: {e}", self.name())))
    }
}

impl fmt::Display for SweepParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// `start:stop:step` (inclusive) or a comma-separated list.
#[derive(Debug, Clone, PartialEq)]
pub struct Values(pub Vec<f64>);

impl FromStr for Values {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let number = |t: &str| {
            t.trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| format!("'{t}' is not a finite number"))
        };
        if s.contains(':') {
            let parts: Vec<&str> = s.split(':').collect();
            let [start, stop, step] = parts[..] else {
                return Err(format!("range '{s}' must be start:stop:step"));
            };
            let (start, stop, step) = (number(start)?, number(stop)?, number(step)?);
            if !(step > 0.0) {
                return Err(format!("step must be positive, got {step}"));
            }
            if start > stop {
                return Err(format!("start {start} exceeds stop {stop}"));
            }
            // Absorb rounding so the stop value is kept.
            let count = ((stop - start) / step + 1e-9).floor() as usize;
            Ok(Values((0..=count).map(|k| start + k as f64 * step).collect()))
        } else {
            let values = s.split(',').map(number).collect::<Result<Vec<_>, _>>()?;
            if values.is_empty() {
                return Err("empty value list".into());
            }
            Ok(Values(values))
        }
    }
}

/// `PARAM=VALUES`, the secondary family dimension of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct Family {
    pub param: SweepParam,
    pub values: Values,
}

impl FromStr for Family {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (name, values) = s
            .split_once('=')
            .ok_or_else(|| format!("family '{s}' must look like PARAM=VALUES"))?;
        let param = SweepParam::from_str(name.trim(), true)?;
        Ok(Family {
            param,
            values: values.parse()?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Kpi {
    Osp,
    Cra,
    Tec,
    Ter,
}

impl Kpi {
    pub fn name(self) -> &'static str {
        match self {
            Kpi::Osp => "osp",
            Kpi::Cra => "cra",
            Kpi::Tec => "tec",
            Kpi::Ter => "ter",
        }
    }

    fn pick(self, r: &KpiReport) -> f64 {
        match self {
            Kpi::Osp => r.osp,
            Kpi::Cra => r.cra,
            Kpi::Tec => r.tec,
            Kpi::Ter => r.ter,
        }
    }
}

pub struct SweepRequest<'a> {
    pub base: &'a SystemParams,
    pub param: SweepParam,
    pub values: &'a [f64],
    pub family: Option<&'a Family>,
    pub kpis: &'a [Kpi],
    pub opts: EvalOptions,
}

/// Header and rows; the swept parameter comes first, then the family
/// parameter if any. An undefined TER becomes NaN with a warning.
pub fn run(req: &SweepRequest<'_>) -> Result<(Vec<String>, Vec<Vec<f64>>), CliError> {
    use rayon::prelude::*;

    let mut header = vec![req.param.name().to_string()];
    if let Some(f) = req.family {
        header.push(f.param.name().to_string());
    }
    header.extend(req.kpis.iter().map(|k| k.name().to_string()));

    let family_values: Vec<Option<f64>> = match req.family {
        Some(f) => f.values.0.iter().map(|v| Some(*v)).collect(),
        None => vec![None],
    };
    let points: Vec<(f64, Option<f64>)> = req
        .values
        .iter()
        .flat_map(|&x| family_values.iter().map(move |&f| (x, f)))
        .collect();

    let rows = points
        .par_iter()
        .map(|&(x, fam)| {
            let mut p = req.param.apply(req.base, x)?;
            if let (Some(f), Some(v)) = (req.family, fam) {
                p = f.param.apply(&p, v)?;
            }
            let mut row = vec![x];
            row.extend(fam);
            let report = evaluate_lenient(&p, req.opts)?;
            if report.ter.is_nan() && req.kpis.contains(&Kpi::Ter) {
                log::warn!("TER undefined at {} = {x}: no tasks admitted; writing NaN", req.param);
            }
            row.extend(req.kpis.iter().map(|k| k.pick(&report)));
            Ok(row)
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    Ok((header, rows))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_ranges_and_lists() {
        assert_eq!("0:1:0.25".parse::<Values>().unwrap().0, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!("-20:0:10".parse::<Values>().unwrap().0, vec![-20.0, -10.0, 0.0]);
        assert_eq!("2:60:2".parse::<Values>().unwrap().0.len(), 30);
        assert_eq!("0:0.3:0.1".parse::<Values>().unwrap().0.len(), 4);
        assert_eq!("0.01, 0.05,0.1".parse::<Values>().unwrap().0, vec![0.01, 0.05, 0.1]);
        assert!("1:0:1".parse::<Values>().is_err());
        assert!("0:1:0".parse::<Values>().is_err());
        assert!("0:1".parse::<Values>().is_err());
        assert!("a,b".parse::<Values>().is_err());
        assert!("nan".parse::<Values>().is_err());
    }

    #[test]
    fn parses_families() {
        let f: Family = "lambda_a=0.01,0.05".parse().unwrap();
        assert_eq!(f.param, SweepParam::LambdaA);
        assert_eq!(f.values.0, vec![0.01, 0.05]);
        assert!("lambda_a".parse::<Family>().is_err());
        assert!("bogus=1".parse::<Family>().is_err());
    }

    #[test]
    fn applies_parameters() {
        let base = SystemParams::table2();
        let p = SweepParam::Kappa.apply(&base, 2.0).unwrap();
        assert!((p.derive().kappa - 2.0).abs() < 1e-12);
        let p = SweepParam::MuR.apply(&base, 10.0).unwrap();
        assert_eq!((p.mu_r, p.mu_loc), (Some(10.0), None));
        assert!(SweepParam::MMec.apply(&base, 2.5).is_err());
        assert!(SweepParam::PA.apply(&base, 1.5).is_err());
    }
}
