//! Experiment configuration: one JSON document with a section per suite.
//! Missing sections fall back to the calibrated acceptance regimes.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::suites::{
    ConcentrationRegime, FilterRegime, FourierRegime, InfluenceRegime, JuntaRegime, KmRegime, Mqsq2sqRegime,
    RefuteRegime, SqdimRegime, WeakRegime,
};

pub const DEFAULT_SEED: u64 = 20240501;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub threads: usize,
    pub out: Option<PathBuf>,
    pub format: Format,
    pub fourier: FourierRegime,
    pub influence: InfluenceRegime,
    pub km: KmRegime,
    pub refute: RefuteRegime,
    pub filter: FilterRegime,
    pub concentration: ConcentrationRegime,
    pub junta: JuntaRegime,
    pub mqsq2sq: Mqsq2sqRegime,
    pub weaklearn: WeakRegime,
    pub sqdim: SqdimRegime,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: DEFAULT_SEED,
            threads: 1,
            out: None,
            format: Format::Json,
            fourier: Default::default(),
            influence: Default::default(),
            km: Default::default(),
            refute: Default::default(),
            filter: Default::default(),
            concentration: Default::default(),
            junta: Default::default(),
            mqsq2sq: Default::default(),
            weaklearn: Default::default(),
            sqdim: Default::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> anyhow::Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| anyhow::anyhow!("cannot read {}: {e}", path.display()))?;
        Self::from_json(&text).map_err(|e| anyhow::anyhow!("invalid config {}: {e}", path.display()))
    }

    /// Sets the main trial count of every Monte-Carlo suite.
    pub fn set_trials(&mut self, trials: usize) {
        self.influence.triples = trials;
        self.km.targets = trials;
        self.refute.trials = trials;
        self.filter.z_functions = trials;
        self.concentration.trials = trials;
        self.junta.select_trials = trials;
        self.junta.tree_trials = trials;
        self.mqsq2sq.trials = trials;
        self.weaklearn.trials = trials;
        self.sqdim.random_classes = trials;
    }

    pub fn set_threads(&mut self, threads: usize) {
        self.threads = threads;
        self.refute.threads = threads;
        self.junta.threads = threads;
        self.mqsq2sq.threads = threads;
        self.weaklearn.threads = threads;
    }

    /// Checks every parameter predicate before anything runs.
    pub fn validate(&self) -> tlq_core::Result<()> {
        self.refute.validate()?;
        self.junta.validate()?;
        self.weaklearn.validate()?;
        if self.threads == 0 {
            return Err(tlq_core::Error::InvalidParameter("threads must be at least 1".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate_and_round_trip() {
        let cfg = ExperimentConfig::default();
        cfg.validate().unwrap();
        let back = ExperimentConfig::from_json(&serde_json::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(ExperimentConfig::from_json("{}").unwrap(), cfg);
    }

    #[test]
    fn unknown_fields_are_rejected() {
        assert!(ExperimentConfig::from_json(r#"{"sed": 1}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"km": {"targets": 5, "extra": 1}}"#).is_err());
    }

    #[test]
    fn invalid_noise_rate_names_the_predicate() {
        let mut cfg = ExperimentConfig::default();
        cfg.refute.refutation.eta = 0.4;
        let msg = cfg.validate().unwrap_err().to_string();
        assert!(msg.contains("η < (1/2 − 4ε)/c"), "{msg}");
    }

    #[test]
    fn trial_override_reaches_every_suite() {
        let mut cfg = ExperimentConfig::default();
        cfg.set_trials(31);
        assert_eq!(cfg.refute.trials, 31);
        assert_eq!(cfg.junta.tree_trials, 31);
        assert_eq!(cfg.weaklearn.trials, 31);
    }
}
