use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use tlq_cli::config::{ExperimentConfig, Format};
use tlq_cli::{output, run_suite, SUITES};

#[derive(Parser)]
#[command(name = "tlq", version, about = "Seeded experiments for testable learning with queries")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON configuration; missing sections use the calibrated defaults.
    #[arg(long, global = true, env = "TLQ_CONFIG")]
    config: Option<PathBuf>,
    #[arg(long, global = true, env = "TLQ_SEED")]
    seed: Option<u64>,
    /// Overrides the main trial count of every suite that is run.
    #[arg(long, global = true, env = "TLQ_TRIALS")]
    trials: Option<usize>,
    #[arg(long, global = true, env = "TLQ_OUT")]
    out: Option<PathBuf>,
    #[arg(long, global = true, env = "TLQ_FORMAT", value_enum)]
    format: Option<Format>,
    #[arg(long, global = true, env = "TLQ_THREADS")]
    threads: Option<usize>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Learner-to-refuter reduction, structure and noise verdict rates.
    Refute,
    /// Feature selection and end-to-end junta tree learning.
    Junta,
    /// Sparse Fourier learning through MQ-SQ queries.
    Km,
    /// MQ-SQ testable learner turned into an SQ refuter.
    Mqsq2sq,
    /// SQ refuter turned into a weak learner.
    Weaklearn,
    /// Empirical tails of the filtering concentration statements.
    Concentration,
    /// SQ dimension of small classes and the lower-bound report.
    Sqdim,
    /// Transform round trip and Parseval on random functions.
    Fourier,
    /// Restricted influences estimated through MQ-SQ queries.
    Influence,
    /// Filtered-distribution identity and the mean normalizer.
    Filter,
    /// Every suite.
    Selftest,
}

impl Command {
    fn suites(self) -> Vec<&'static str> {
        match self {
            Command::Refute => vec!["refute"],
            Command::Junta => vec!["junta"],
            Command::Km => vec!["km"],
            Command::Mqsq2sq => vec!["mqsq2sq"],
            Command::Weaklearn => vec!["weaklearn"],
            Command::Concentration => vec!["concentration"],
            Command::Sqdim => vec!["sqdim"],
            Command::Fourier => vec!["fourier"],
            Command::Influence => vec!["influence"],
            Command::Filter => vec!["filter"],
            Command::Selftest => SUITES.to_vec(),
        }
    }
}

fn run(cli: &Cli) -> anyhow::Result<bool> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(trials) = cli.trials {
        cfg.set_trials(trials);
    }
    if let Some(threads) = cli.threads {
        cfg.set_threads(threads);
    }
    if let Some(format) = cli.format {
        cfg.format = format;
    }
    if cli.out.is_some() {
        cfg.out.clone_from(&cli.out);
    }
    cfg.validate().map_err(|e| anyhow::anyhow!("invalid config: {e}"))?;
    let mut records = Vec::new();
    for suite in cli.command.suites() {
        records.push(run_suite(suite, &cfg)?);
    }
    for r in &records {
        let status = if r.passed() { "pass" } else { "FAIL" };
        eprintln!("{status} {}", r.suite);
        if let Some(e) = &r.error {
            eprintln!("  error: {e}");
        }
        for c in r.checks.iter().filter(|c| !c.passed) {
            eprintln!("  {} = {} ({:?} {})", c.name, c.measured, c.relation, c.threshold);
        }
    }
    output::emit(&records, &cfg, cfg.out.as_deref())?;
    Ok(output::all_passed(&records))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("tlq: {e:#}");
            ExitCode::from(2)
        }
    }
}
