use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Which statistic a query contributes to; adversarial policies pick signs per kind.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QueryKind {
    TypeI,
    TypeII,
    TypeIII,
    TypeIV,
    TypeV,
    /// `E_{(x,y)∼Dref}[φ(x, y)]`.
    Refutation,
    /// `E_{x∼D}[φ(x) f*(x)]`.
    Correlation,
}

impl QueryKind {
    fn slot(self) -> usize {
        self as usize
    }
}

/// Direction of the `±τ` perturbation applied by an adversarial oracle.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "snake_case", deny_unknown_fields)]
pub enum SignPolicy {
    Plus,
    Minus,
    /// One sign per [`QueryKind`], in declaration order.
    PerKind { signs: [i8; 7] },
}

impl SignPolicy {
    /// Pushes `2E[f] − 2E[f·f∘π]` upward: `+τ` on Type I, `−τ` on Type II.
    pub fn inflate_influence() -> Self {
        Self::PerKind { signs: [1, -1, 1, 1, 1, 1, 1] }
    }

    /// Pushes influence estimates downward.
    pub fn deflate_influence() -> Self {
        Self::PerKind { signs: [-1, 1, -1, -1, -1, -1, -1] }
    }

    /// Pushes the ±1 autocorrelation `1 − 4E[f] + 4E[f·f∘π]` upward.
    pub fn inflate_fourier_weight() -> Self {
        Self::PerKind { signs: [-1, 1, 1, 1, 1, 1, 1] }
    }

    pub fn sign(&self, kind: QueryKind) -> f64 {
        match self {
            SignPolicy::Plus => 1.0,
            SignPolicy::Minus => -1.0,
            SignPolicy::PerKind { signs } => {
                if signs[kind.slot()] < 0 {
                    -1.0
                } else {
                    1.0
                }
            }
        }
    }
}

/// How an oracle turns an exact expectation into an answer.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum ToleranceMode {
    Exact,
    /// Nearest multiple of `tau`; error at most `tau / 2`.
    RoundToGrid { tau: f64 },
    /// Exactly `truth ± tau`.
    AdversarialSign { tau: f64, policy: SignPolicy },
    /// Empirical mean over fresh draws; the answer is within the Hoeffding
    /// radius except with probability `failure_prob`.
    Sampling { num_samples: usize, failure_prob: f64 },
}

impl ToleranceMode {
    pub fn validate(&self) -> Result<()> {
        match self {
            ToleranceMode::Exact => Ok(()),
            ToleranceMode::RoundToGrid { tau } | ToleranceMode::AdversarialSign { tau, .. } => {
                if !(*tau > 0.0 && tau.is_finite()) {
                    return Err(Error::InvalidParameter(format!("tolerance {tau} must be positive")));
                }
                Ok(())
            }
            ToleranceMode::Sampling { num_samples, failure_prob } => {
                if *num_samples == 0 || !(*failure_prob > 0.0 && *failure_prob < 1.0) {
                    return Err(Error::InvalidParameter("sampling mode needs samples > 0 and failure in (0,1)".into()));
                }
                Ok(())
            }
        }
    }

    /// Declared tolerance; `0` for exact answers.
    pub fn tau(&self) -> f64 {
        match self {
            ToleranceMode::Exact => 0.0,
            ToleranceMode::RoundToGrid { tau } | ToleranceMode::AdversarialSign { tau, .. } => *tau,
            ToleranceMode::Sampling { num_samples, failure_prob } => hoeffding_radius(*num_samples, *failure_prob),
        }
    }

    /// Sampling mode sized so the Hoeffding radius is at most `tau`.
    pub fn sampling_for(tau: f64, failure_prob: f64) -> Self {
        let num_samples = ((2.0 / failure_prob).ln() / (2.0 * tau * tau)).ceil() as usize;
        ToleranceMode::Sampling { num_samples, failure_prob }
    }

    /// Perturbs an exact value; not meaningful for sampling mode.
    pub fn perturb(&self, exact: f64, kind: QueryKind) -> f64 {
        match self {
            ToleranceMode::Exact | ToleranceMode::Sampling { .. } => exact,
            ToleranceMode::RoundToGrid { tau } => (exact / tau).round() * tau,
            ToleranceMode::AdversarialSign { tau, policy } => exact + policy.sign(kind) * tau,
        }
    }

    pub fn is_sampling(&self) -> bool {
        matches!(self, ToleranceMode::Sampling { .. })
    }
}

/// Two-sided Hoeffding radius for the mean of `n` draws in `[0, 1]`.
pub fn hoeffding_radius(n: usize, failure_prob: f64) -> f64 {
    ((2.0 / failure_prob).ln() / (2.0 * n as f64)).sqrt()
}
