//! Experiment runner for `tlq-core`: JSON configuration, seeded suites and
//! JSON/CSV emission with a run manifest.

pub mod config;
pub mod output;
pub mod record;
pub mod suites;

use serde::Serialize;

use config::ExperimentConfig;
use record::{Check, Row};

/// Suite names in `selftest` order.
pub const SUITES: [&str; 10] =
    ["fourier", "influence", "km", "refute", "filter", "concentration", "junta", "mqsq2sq", "weaklearn", "sqdim"];

/// Run record of one suite: the typed result as JSON, its emitted rows and
/// its assertions. A suite that hits an error keeps the message and fails.
#[derive(Clone, Debug, Serialize)]
pub struct SuiteRecord {
    pub suite: String,
    pub result: serde_json::Value,
    pub rows: Vec<Row>,
    pub checks: Vec<Check>,
    pub error: Option<String>,
}

impl SuiteRecord {
    pub fn passed(&self) -> bool {
        self.error.is_none() && self.checks.iter().all(|c| c.passed)
    }
}

fn record<T: Serialize>(suite: &str, run: tlq_core::Result<T>, rows: impl Fn(&T) -> Vec<Row>, checks: impl Fn(&T) -> Vec<Check>) -> SuiteRecord {
    match run {
        Ok(r) => SuiteRecord {
            suite: suite.to_string(),
            result: serde_json::to_value(&r).unwrap_or(serde_json::Value::Null),
            rows: rows(&r),
            checks: checks(&r),
            error: None,
        },
        Err(e) => SuiteRecord {
            suite: suite.to_string(),
            result: serde_json::Value::Null,
            rows: Vec::new(),
            checks: Vec::new(),
            error: Some(e.to_string()),
        },
    }
}

pub fn run_suite(name: &str, cfg: &ExperimentConfig) -> anyhow::Result<SuiteRecord> {
    use suites::*;
    let seed = cfg.seed;
    Ok(match name {
        "fourier" => record(name, run_fourier(&cfg.fourier, seed), FourierResult::rows, FourierResult::checks),
        "influence" => record(name, run_influence(&cfg.influence, seed), InfluenceResult::rows, InfluenceResult::checks),
        "km" => record(name, run_km(&cfg.km, seed), KmResult::rows, KmResult::checks),
        "refute" => record(name, run_refute(&cfg.refute, seed), RefuteResult::rows, RefuteResult::checks),
        "filter" => record(name, run_filter(&cfg.filter, seed), FilterResult::rows, FilterResult::checks),
        "concentration" => record(
            name,
            run_concentration(&cfg.concentration, seed),
            ConcentrationResult::rows,
            ConcentrationResult::checks,
        ),
        "junta" => record(name, run_junta(&cfg.junta, seed), JuntaResult::rows, JuntaResult::checks),
        "mqsq2sq" => record(name, run_mqsq2sq(&cfg.mqsq2sq, seed), Mqsq2sqResult::rows, Mqsq2sqResult::checks),
        "weaklearn" => record(name, run_weak(&cfg.weaklearn, seed), WeakResult::rows, WeakResult::checks),
        "sqdim" => record(name, run_sqdim(&cfg.sqdim, seed), SqdimResult::rows, SqdimResult::checks),
        other => anyhow::bail!("unknown suite {other}"),
    })
}
