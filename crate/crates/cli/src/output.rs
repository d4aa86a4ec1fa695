//! JSON and long-format CSV emission plus the run manifest. Every number
//! written here is copied from a run record.

use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::config::{ExperimentConfig, Format};
use crate::SuiteRecord;

pub const CSV_SCHEMA_VERSION: u32 = 1;
pub const CSV_COLUMNS: [&str; 4] = ["suite", "seed", "metric", "value"];

#[derive(Serialize)]
struct JsonReport<'a> {
    seed: u64,
    passed: bool,
    suites: &'a [SuiteRecord],
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    tool_version: &'static str,
    core_version: &'static str,
    seed: u64,
    format: Format,
    csv_schema_version: u32,
    csv_columns: [&'static str; 4],
    suites: Vec<&'a str>,
    passed: bool,
    config: &'a ExperimentConfig,
}

pub fn all_passed(records: &[SuiteRecord]) -> bool {
    records.iter().all(SuiteRecord::passed)
}

pub fn render(records: &[SuiteRecord], seed: u64, format: Format) -> anyhow::Result<Vec<u8>> {
    match format {
        Format::Json => {
            let mut out = serde_json::to_vec_pretty(&JsonReport { seed, passed: all_passed(records), suites: records })?;
            out.push(b'\n');
            Ok(out)
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(CSV_COLUMNS)?;
            let seed = seed.to_string();
            for r in records {
                for row in &r.rows {
                    w.write_record([r.suite.as_str(), &seed, &row.metric, &format!("{:?}", row.value)])?;
                }
                for c in &r.checks {
                    let metric = format!("check.{}.passed", c.name);
                    w.write_record([r.suite.as_str(), &seed, &metric, if c.passed { "1" } else { "0" }])?;
                }
                if r.error.is_some() {
                    w.write_record([r.suite.as_str(), &seed, "error", "1"])?;
                }
            }
            Ok(w.into_inner()?)
        }
    }
}

/// Writes the report to `out` (stdout when absent) and, for a file, the
/// manifest next to it as `<out>.manifest.json`.
pub fn emit(records: &[SuiteRecord], cfg: &ExperimentConfig, out: Option<&Path>) -> anyhow::Result<()> {
    let body = render(records, cfg.seed, cfg.format)?;
    match out {
        None => std::io::stdout().write_all(&body)?,
        Some(path) => {
            std::fs::write(path, &body)?;
            let manifest = Manifest {
                tool: env!("CARGO_PKG_NAME"),
                tool_version: env!("CARGO_PKG_VERSION"),
                core_version: tlq_core::VERSION,
                seed: cfg.seed,
                format: cfg.format,
                csv_schema_version: CSV_SCHEMA_VERSION,
                csv_columns: CSV_COLUMNS,
                suites: records.iter().map(|r| r.suite.as_str()).collect(),
                passed: all_passed(records),
                config: cfg,
            };
            let mut m = serde_json::to_vec_pretty(&manifest)?;
            m.push(b'\n');
            let mut name = path.as_os_str().to_owned();
            name.push(".manifest.json");
            std::fs::write(name, m)?;
        }
    }
    Ok(())
}
