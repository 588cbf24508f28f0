use std::path::PathBuf;

use mec_depend::kpi::KpiError;
use mec_depend::spatial::SimError;
use thiserror::Error;

pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;
pub const EXIT_UNDEFINED_KPI: i32 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {kind} at byte {offset} (line {line}, column {column}): {message}")]
    Json {
        path: String,
        kind: &'static str,
        offset: usize,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("cannot write output: {0}")]
    Output(#[from] std::io::Error),
    #[error("numerical failure: {0}")]
    Numeric(String),
    #[error(transparent)]
    UndefinedKpi(KpiError),
    #[error("self-test failed: {0}")]
    SelfTest(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Read { .. } | CliError::Json { .. } | CliError::Config(_) => EXIT_CONFIG,
            CliError::UndefinedKpi(_) => EXIT_UNDEFINED_KPI,
            CliError::Output(_) | CliError::Numeric(_) | CliError::SelfTest(_) => EXIT_NUMERIC,
        }
    }

    /// Locates a JSON error by byte offset into `text`.
    pub fn json(path: &str, text: &str, err: &serde_json::Error) -> Self {
        let (line, column) = (err.line(), err.column());
        let offset = text
            .split_inclusive('\n')
            .take(line.saturating_sub(1))
            .map(str::len)
            .sum::<usize>()
            + column.saturating_sub(1);
        let message = err.to_string();
        // serde_json appends its own " at line X column Y".
        let message = match message.rfind(" at line ") {
            Some(i) => message[..i].to_string(),
            None => message,
        };
        let kind = match err.classify() {
            serde_json::error::Category::Data => "invalid configuration",
            _ => "malformed JSON",
        };
        CliError::Json {
            path: path.to_string(),
            kind,
            offset,
            line,
            column,
            message,
        }
    }
}

impl From<mec_depend::Error> for CliError {
    fn from(e: mec_depend::Error) -> Self {
        use mec_depend::Error as E;
        match e {
            E::Json(e) => CliError::Config(e.to_string()),
            E::Param(e) => CliError::Config(e.to_string()),
            E::Simulation(e) => e.into(),
            E::Kpi(e) => CliError::UndefinedKpi(e),
            E::SpecFun(_) | E::Coverage(_) | E::Ctmc(_) => CliError::Numeric(e.to_string()),
        }
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<KpiError> for CliError {
    fn from(e: KpiError) -> Self {
        CliError::UndefinedKpi(e)
    }
}
