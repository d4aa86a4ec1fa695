use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::boolean_core::BitVector;
use crate::oracles::{hoeffding_radius, MembershipOracle};
use crate::{Error, Result};

use super::concept::{ConceptClass, Hypothesis};
use super::erm::erm_agnostic;

/// Declared `(c, ε, δ)` guarantee with `m` samples and `q` membership queries.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TlqContract {
    pub c: f64,
    pub eps: f64,
    pub delta: f64,
    pub m: usize,
    pub q: usize,
}

/// Testable learner with queries: sees `m` labeled samples and may ask `q`
/// membership queries; outputs a hypothesis or `⊥`.
pub trait TlqLearner: Send + Sync {
    fn name(&self) -> &'static str;
    fn contract(&self) -> TlqContract;
    fn run(
        &self,
        samples: &[(BitVector, bool)],
        mq: &mut dyn MembershipOracle,
        rng: &mut dyn RngCore,
    ) -> Result<Hypothesis>;
}

/// Knobs of [`ReferenceTlq`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceTlqParams {
    pub eps: f64,
    pub m: usize,
    pub q: usize,
    /// Samples used for ERM; the rest estimate the held-out error.
    pub train: usize,
    /// Slack allowed between query disagreement and held-out error.
    pub validation_margin: f64,
    /// Failure budget shared by the moment statistics.
    pub tester_failure: f64,
}

impl ReferenceTlqParams {
    pub fn new(eps: f64, m: usize, q: usize) -> Self {
        Self { eps, m, q, train: m / 2, validation_margin: eps, tester_failure: 0.05 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps > 0.0 && self.eps < 1.0) {
            return Err(Error::InvalidParameter(format!("ε = {} outside (0,1)", self.eps)));
        }
        if self.m < 2 || self.train == 0 || self.train > self.m {
            return Err(Error::InvalidParameter("need m ≥ 2 and 1 ≤ train ≤ m".into()));
        }
        if !(self.validation_margin >= 0.0) || !(self.tester_failure > 0.0 && self.tester_failure < 1.0) {
            return Err(Error::InvalidParameter("bad validation margin or tester failure".into()));
        }
        Ok(())
    }
}

/// Outcome of the uniformity tester.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TesterReport {
    pub tolerance: f64,
    pub max_first_moment_gap: f64,
    pub max_second_moment_gap: f64,
    pub collisions: usize,
    pub collision_limit: f64,
    pub passed: bool,
}

/// Moment and collision checks against the uniform distribution. The moment
/// tolerance is `max(ε/4, r)` where `r` is the Hoeffding radius that covers
/// all `n + n(n−1)/2` statistics at the declared failure budget.
pub fn uniformity_tester(samples: &[(BitVector, bool)], n: usize, eps: f64, failure: f64) -> TesterReport {
    let m = samples.len();
    let stats = n + n * (n.saturating_sub(1)) / 2;
    let tolerance = (eps / 4.0).max(hoeffding_radius(m.max(1), failure / stats.max(1) as f64));
    let mut ones = vec![0usize; n];
    let mut pairs = vec![0usize; n * n];
    for (x, _) in samples {
        for i in 0..n {
            if x.bits() >> i & 1 == 1 {
                ones[i] += 1;
                for j in i + 1..n {
                    if x.bits() >> j & 1 == 1 {
                        pairs[i * n + j] += 1;
                    }
                }
            }
        }
    }
    let mf = m.max(1) as f64;
    let first = ones.iter().map(|&c| (c as f64 / mf - 0.5).abs()).fold(0.0, f64::max);
    let mut second = 0.0f64;
    for i in 0..n {
        for j in i + 1..n {
            second = second.max((pairs[i * n + j] as f64 / mf - 0.25).abs());
        }
    }
    let mut pts: Vec<u32> = samples.iter().map(|(x, _)| x.bits()).collect();
    pts.sort_unstable();
    let mut collisions = 0usize;
    let mut run = 1usize;
    for w in pts.windows(2) {
        if w[0] == w[1] {
            collisions += run;
            run += 1;
        } else {
            run = 1;
        }
    }
    let expected = (m * m.saturating_sub(1)) as f64 / 2.0 * (-(n as f64)).exp2();
    let collision_limit = expected + 3.0 * expected.sqrt() + 1.0;
    let passed = first <= tolerance && second <= tolerance && (collisions as f64) <= collision_limit;
    TesterReport {
        tolerance,
        max_first_moment_gap: first,
        max_second_moment_gap: second,
        collisions,
        collision_limit,
        passed,
    }
}

/// A concrete testable learner against the uniform family: a uniformity
/// tester, then ERM whose winner is cross-checked with membership queries at
/// fresh uniform points. The tester is a proxy for uniformity, not a sound
/// test against every alternative.
#[derive(Clone, Debug)]
pub struct ReferenceTlq {
    pub class: ConceptClass,
    pub params: ReferenceTlqParams,
}

impl ReferenceTlq {
    pub fn new(class: ConceptClass, params: ReferenceTlqParams) -> Result<Self> {
        class.validate()?;
        params.validate()?;
        Ok(Self { class, params })
    }
}

impl TlqLearner for ReferenceTlq {
    fn name(&self) -> &'static str {
        "reference_tlq"
    }

    fn contract(&self) -> TlqContract {
        TlqContract { c: 1.0, eps: self.params.eps, delta: 0.1, m: self.params.m, q: self.params.q }
    }

    fn run(
        &self,
        samples: &[(BitVector, bool)],
        mq: &mut dyn MembershipOracle,
        rng: &mut dyn RngCore,
    ) -> Result<Hypothesis> {
        let p = &self.params;
        if samples.len() < p.m {
            return Err(Error::InsufficientSamples { needed: p.m, got: samples.len() });
        }
        let n = self.class.n();
        let samples = &samples[..p.m];
        if !uniformity_tester(samples, n, p.eps, p.tester_failure).passed {
            return Ok(Hypothesis::Reject);
        }
        let (train, held_out) = samples.split_at(p.train);
        let fit = erm_agnostic(train, &self.class)?;
        let h = fit.hypothesis;
        let held_out_error = if held_out.is_empty() {
            fit.empirical_error
        } else {
            held_out.iter().filter(|(x, y)| h.eval_bits(x.bits()) != *y).count() as f64 / held_out.len() as f64
        };
        if p.q > 0 {
            let mut disagree = 0usize;
            for _ in 0..p.q {
                let x = BitVector::random(n, rng);
                if mq.mq(&x)? != h.eval_bits(x.bits()) {
                    disagree += 1;
                }
            }
            if disagree as f64 / p.q as f64 > held_out_error + p.validation_margin {
                return Ok(Hypothesis::Reject);
            }
        }
        Ok(Hypothesis::Function(h))
    }
}
