use std::collections::{HashMap, HashSet};

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::boolean_core::{BitVector, BooleanFunction, Distribution};
use crate::learners::{Hypothesis, TlqLearner};
use crate::oracles::{ExampleSource, LabeledDistribution, MembershipOracle};
use crate::{Error, Result};

/// Why a refutation run aborted.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorReason {
    InsufficientSamples,
    DuplicateInTest,
    TestQueryOverlap,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "verdict", content = "reason", rename_all = "snake_case")]
pub enum RefutationVerdict {
    Noise,
    Structure,
    Error(ErrorReason),
}

impl RefutationVerdict {
    pub fn label(&self) -> &'static str {
        match self {
            RefutationVerdict::Noise => "noise",
            RefutationVerdict::Structure => "structure",
            RefutationVerdict::Error(ErrorReason::InsufficientSamples) => "error_insufficient_samples",
            RefutationVerdict::Error(ErrorReason::DuplicateInTest) => "error_duplicate_in_test",
            RefutationVerdict::Error(ErrorReason::TestQueryOverlap) => "error_test_query_overlap",
        }
    }
}

/// Parameters of the biased refuter built from a testable learner.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RefutationParams {
    pub eta: f64,
    pub eps: f64,
    /// Approximation factor of the learner.
    pub c: f64,
    /// Learner sample count.
    pub m: usize,
    /// Learner query count.
    pub q: usize,
    /// Labels spent on the bias estimate, times `1/ε²`.
    pub c1: f64,
    /// Size of the reserved coin pool, times `(m + 1/ε²)/ε + q`.
    pub c2: f64,
    /// Test-set size, times `1/ε²`.
    pub c3: f64,
    /// How much smaller `m + q/ε²` must be than `1/‖D_x‖₂`.
    pub separation_ratio: f64,
    /// Constant in `ε² ≥ c·k·‖D_x‖₂`.
    pub norm_constant: f64,
    /// Expected-count multiplier for the filtered stream.
    pub oversample: f64,
    /// Treat the norm conditions as hard errors.
    #[serde(default)]
    pub strict_regime: bool,
}

/// Norm conditions of the learner-to-refuter theorem at a given `‖D_x‖₂`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RegimeReport {
    pub l2_norm: f64,
    pub eps_sq: f64,
    pub eps_sq_required: f64,
    pub eps_condition: bool,
    pub load: f64,
    pub load_limit: f64,
    pub load_condition: bool,
}

impl RegimeReport {
    pub fn holds(&self) -> bool {
        self.eps_condition && self.load_condition
    }
}

impl RefutationParams {
    pub fn new(eta: f64, eps: f64, c: f64, m: usize, q: usize) -> Self {
        Self {
            eta,
            eps,
            c,
            m,
            q,
            c1: 50.0,
            c2: 8.0,
            c3: 50.0,
            separation_ratio: 100.0,
            norm_constant: 10.0,
            oversample: 100.0,
            strict_regime: false,
        }
    }

    /// `α = cη + 4ε`.
    pub fn alpha(&self) -> f64 {
        self.c * self.eta + 4.0 * self.eps
    }

    /// Noise threshold on the test error, `cη + 3ε`.
    pub fn threshold(&self) -> f64 {
        self.c * self.eta + 3.0 * self.eps
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |s: String| Err(Error::InvalidParameter(s));
        if !(self.eps > 0.0 && self.eps < 0.125) {
            return bad(format!("ε = {} outside (0, 1/8)", self.eps));
        }
        if !(self.c >= 1.0 && self.c.is_finite()) {
            return bad(format!("c = {} must be ≥ 1", self.c));
        }
        if !(self.eta >= 0.0) {
            return bad(format!("η = {} must be ≥ 0", self.eta));
        }
        if !(self.eta < (0.5 - 4.0 * self.eps) / self.c) {
            return bad(format!("η < (1/2 − 4ε)/c fails: η = {}, bound {}", self.eta, (0.5 - 4.0 * self.eps) / self.c));
        }
        if self.m == 0 {
            return bad("m must be positive".into());
        }
        for (name, v) in [("C1", self.c1), ("C2", self.c2), ("C3", self.c3), ("oversample", self.oversample)] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{name} = {v} must be positive"));
            }
        }
        if !(self.separation_ratio >= 100.0) {
            return bad(format!("separation ratio {} must be ≥ 100", self.separation_ratio));
        }
        if !(self.norm_constant > 0.0) {
            return bad("norm constant must be positive".into());
        }
        Ok(())
    }

    pub fn regime(&self, l2_norm: f64) -> RegimeReport {
        let eps_sq = self.eps * self.eps;
        let eps_sq_required = self.c * self.norm_constant * l2_norm;
        let load = self.m as f64 + self.q as f64 / eps_sq;
        let load_limit = 1.0 / (l2_norm * self.separation_ratio);
        RegimeReport {
            l2_norm,
            eps_sq,
            eps_sq_required,
            eps_condition: eps_sq >= eps_sq_required,
            load,
            load_limit,
            load_condition: load <= load_limit,
        }
    }

    /// Validates, then checks the norm conditions for `marginal`; they only
    /// fail the call under `strict_regime`.
    pub fn check(&self, marginal: &Distribution) -> Result<RegimeReport> {
        self.validate()?;
        let r = self.regime(marginal.l2_norm_sq().sqrt());
        if self.strict_regime && !r.holds() {
            return Err(Error::Precondition(format!(
                "norm conditions fail: ε² = {:.3e} vs c·k·‖D_x‖₂ = {:.3e}; m + q/ε² = {:.3e} vs limit {:.3e}",
                r.eps_sq, r.eps_sq_required, r.load, r.load_limit
            )));
        }
        Ok(r)
    }

    pub fn bias_samples(&self) -> usize {
        ceil_count(self.c1 / (self.eps * self.eps))
    }

    pub fn pool_size(&self) -> usize {
        ceil_count(self.c2 * ((self.m as f64 + 1.0 / (self.eps * self.eps)) / self.eps + self.q as f64))
    }

    pub fn test_size(&self) -> usize {
        ceil_count(self.c3 / (self.eps * self.eps))
    }

    /// Examples fed through the filter: enough that `m + C3/ε²` are accepted
    /// in expectation `oversample` times over when `p ∈ [α, 1 − α]`.
    pub fn filter_samples(&self) -> usize {
        let a = self.alpha().min(0.5);
        let need = self.m as f64 + self.c3 / (self.eps * self.eps);
        ceil_count(self.oversample / (a * (1.0 - a)) * need)
    }

    /// Total examples consumed: bias estimate, coin pool and filter stream.
    pub fn m_prime(&self) -> usize {
        self.bias_samples() + self.pool_size() + self.filter_samples()
    }
}

/// Ceiling that ignores floating-point noise just above an integer.
pub(crate) fn ceil_count(x: f64) -> usize {
    (x - 1e-9).ceil().max(0.0) as usize
}

/// `D(x) = D_x(x)·[p(1−y(x))(1−f(x)) + (1−p)y(x)f(x)] / Z` with `p` the
/// label mean; returns `(D, Z)`.
pub fn filtered_distribution(dref: &LabeledDistribution, f: &BooleanFunction) -> Result<(Distribution, f64)> {
    let n = dref.n();
    if f.n() != n {
        return Err(Error::DimensionMismatch { expected: n, got: f.n() });
    }
    let p = dref.p_overall();
    let mut w = vec![0.0; 1usize << n];
    let mut z = 0.0;
    dref.marginal().for_each_support(|b, dx| {
        let y = dref.y(b);
        let v = dx * if f.eval_bits(b) { (1.0 - p) * y } else { p * (1.0 - y) };
        w[b as usize] = v;
        z += v;
    });
    if z <= 0.0 {
        return Err(Error::ZeroNormalizer);
    }
    w.iter_mut().for_each(|v| *v /= z);
    Ok((Distribution::explicit(n, w)?, z))
}

/// Reserved labels read as `Bern(p)` coins.
struct CoinPool<'a> {
    labels: &'a [(BitVector, bool)],
    next: usize,
}

impl CoinPool<'_> {
    fn flip(&mut self) -> Result<bool> {
        let c = self.labels.get(self.next).ok_or(Error::InsufficientSamples {
            needed: self.next + 1,
            got: self.labels.len(),
        })?;
        self.next += 1;
        Ok(c.1)
    }
}

/// The lazily drawn random function, answering membership queries.
struct LazyTable<'a, 'b> {
    n: usize,
    table: &'b mut HashMap<u32, bool>,
    coins: &'b mut CoinPool<'a>,
    queried: HashSet<u32>,
    count: u64,
}

impl MembershipOracle for LazyTable<'_, '_> {
    fn n(&self) -> usize {
        self.n
    }

    fn mq(&mut self, x: &BitVector) -> Result<bool> {
        if x.n() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, got: x.n() });
        }
        self.count += 1;
        self.queried.insert(x.bits());
        if let Some(&v) = self.table.get(&x.bits()) {
            return Ok(v);
        }
        let v = self.coins.flip()?;
        self.table.insert(x.bits(), v);
        Ok(v)
    }

    fn queries_made(&self) -> u64 {
        self.count
    }
}

/// Everything a run of the refuter measured.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RefutationRun {
    pub verdict: RefutationVerdict,
    pub p_hat: f64,
    pub m_prime: usize,
    pub pool_size: usize,
    pub coins_used: usize,
    pub accepted: usize,
    pub learner_rejected: bool,
    pub membership_queries: u64,
    pub test_error: Option<f64>,
}

/// Biased refutation from a testable learner. `examples` must hold at least
/// `params.m_prime()` draws; exactly that many are read.
pub fn biased_refutation(
    examples: &[(BitVector, bool)],
    params: &RefutationParams,
    learner: &dyn TlqLearner,
    rng: &mut dyn RngCore,
) -> Result<RefutationRun> {
    params.validate()?;
    let need = params.m_prime();
    if examples.len() < need {
        return Err(Error::InsufficientSamples { needed: need, got: examples.len() });
    }
    let n = match examples.first() {
        Some((x, _)) => x.n(),
        None => return Err(Error::InsufficientSamples { needed: need, got: 0 }),
    };
    let eps = params.eps;
    let (head, rest) = examples[..need].split_at(params.bias_samples());
    let (pool, stream) = rest.split_at(params.pool_size());
    let p_hat = head.iter().filter(|e| e.1).count() as f64 / head.len() as f64;
    let mut run = RefutationRun {
        verdict: RefutationVerdict::Structure,
        p_hat,
        m_prime: need,
        pool_size: pool.len(),
        coins_used: 0,
        accepted: 0,
        learner_rejected: false,
        membership_queries: 0,
        test_error: None,
    };
    if p_hat < 2.0 * eps || p_hat > 1.0 - 2.0 * eps {
        return Ok(run);
    }

    let mut coins = CoinPool { labels: pool, next: 0 };
    let mut table: HashMap<u32, bool> = HashMap::new();
    let mut s: Vec<(BitVector, bool)> = Vec::new();
    let starved = |coins: &CoinPool, run: &mut RefutationRun| {
        run.coins_used = coins.next;
        run.verdict = RefutationVerdict::Error(ErrorReason::InsufficientSamples);
    };
    for (x, y) in stream {
        if x.n() != n {
            return Err(Error::DimensionMismatch { expected: n, got: x.n() });
        }
        let fx = match table.get(&x.bits()) {
            Some(&v) => v,
            None => match coins.flip() {
                Ok(v) => {
                    table.insert(x.bits(), v);
                    v
                }
                Err(_) => {
                    starved(&coins, &mut run);
                    return Ok(run);
                }
            },
        };
        if *y != fx {
            continue;
        }
        // Accept w.p. p when y = f = 0 and w.p. 1 − p when y = f = 1.
        let coin = match coins.flip() {
            Ok(c) => c,
            Err(_) => {
                starved(&coins, &mut run);
                return Ok(run);
            }
        };
        if coin != fx {
            s.push((*x, fx));
        }
    }
    run.accepted = s.len();
    let t = params.test_size();
    if s.len() < params.m + t {
        starved(&coins, &mut run);
        return Ok(run);
    }
    let (train, test) = (&s[..params.m], &s[params.m..params.m + t]);

    let mut oracle = LazyTable { n, table: &mut table, coins: &mut coins, queried: HashSet::new(), count: 0 };
    let outcome = learner.run(train, &mut oracle, rng);
    run.membership_queries = oracle.count;
    let queried = std::mem::take(&mut oracle.queried);
    run.coins_used = coins.next;
    let h = match outcome {
        Ok(Hypothesis::Reject) => {
            run.learner_rejected = true;
            return Ok(run);
        }
        Ok(Hypothesis::Function(h)) => h,
        Err(Error::InsufficientSamples { .. }) => {
            run.verdict = RefutationVerdict::Error(ErrorReason::InsufficientSamples);
            return Ok(run);
        }
        Err(e) => return Err(e),
    };

    let train_pts: HashSet<u32> = train.iter().map(|e| e.0.bits()).collect();
    let mut seen = HashSet::new();
    for (x, _) in test {
        if !seen.insert(x.bits()) || train_pts.contains(&x.bits()) {
            run.verdict = RefutationVerdict::Error(ErrorReason::DuplicateInTest);
            return Ok(run);
        }
    }
    if test.iter().any(|(x, _)| queried.contains(&x.bits())) {
        run.verdict = RefutationVerdict::Error(ErrorReason::TestQueryOverlap);
        return Ok(run);
    }
    let err = test.iter().filter(|(x, fx)| h.eval_bits(x.bits()) != *fx).count() as f64 / t as f64;
    run.test_error = Some(err);
    run.verdict = if err > params.threshold() { RefutationVerdict::Noise } else { RefutationVerdict::Structure };
    Ok(run)
}

/// A refuter that reads labeled examples from a stream.
pub trait ExampleRefuter {
    fn name(&self) -> &'static str;
    fn n(&self) -> usize;
    /// Smallest label bias the noise guarantee covers.
    fn alpha(&self) -> f64;
    fn refute(&self, source: &mut dyn ExampleSource, rng: &mut dyn RngCore) -> Result<RefutationVerdict>;
}

/// [`biased_refutation`] around a testable learner, drawing `m′` examples per run.
pub struct LearnerRefuter {
    pub params: RefutationParams,
    pub learner: Box<dyn TlqLearner>,
    n: usize,
}

impl LearnerRefuter {
    pub fn new(n: usize, params: RefutationParams, learner: Box<dyn TlqLearner>) -> Result<Self> {
        params.validate()?;
        Ok(Self { params, learner, n })
    }

    pub fn run(&self, source: &mut dyn ExampleSource, rng: &mut dyn RngCore) -> Result<RefutationRun> {
        if source.n() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, got: source.n() });
        }
        let examples = (0..self.params.m_prime()).map(|_| source.draw(rng)).collect::<Result<Vec<_>>>()?;
        biased_refutation(&examples, &self.params, self.learner.as_ref(), rng)
    }
}

impl ExampleRefuter for LearnerRefuter {
    fn name(&self) -> &'static str {
        "learner_refuter"
    }

    fn n(&self) -> usize {
        self.n
    }

    fn alpha(&self) -> f64 {
        self.params.alpha()
    }

    fn refute(&self, source: &mut dyn ExampleSource, rng: &mut dyn RngCore) -> Result<RefutationVerdict> {
        Ok(self.run(source, rng)?.verdict)
    }
}

/// Sample, time and error bounds of the agnostic learner obtained by
/// refuting with a testable learner. Pure arithmetic.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AgnosticReport {
    /// `(m + 1/ε²)/ε + q`, before constants.
    pub m_prime_order: f64,
    /// `m′` with the constants of [`RefutationParams`].
    pub m_prime: usize,
    /// `(m′)³/ε²`.
    pub sample_bound: f64,
    /// `(m′)²(m′ + t)/ε²`.
    pub time_bound: f64,
    /// `1 − 1/c + ε`.
    pub excess_error: f64,
    /// Set when the excess error bound is at least 1/2.
    pub vacuous: bool,
    pub regime: RegimeReport,
}

pub fn tlq_to_agnostic_params(params: &RefutationParams, time: f64, l2_norm: f64) -> Result<AgnosticReport> {
    params.validate()?;
    if !(time >= 0.0) || !(l2_norm > 0.0 && l2_norm <= 1.0) {
        return Err(Error::InvalidParameter("time must be ≥ 0 and ‖D_x‖₂ in (0, 1]".into()));
    }
    let regime = params.regime(l2_norm);
    if params.strict_regime && !regime.holds() {
        return Err(Error::Precondition("norm conditions fail".into()));
    }
    let eps = params.eps;
    let m_prime_order = (params.m as f64 + 1.0 / (eps * eps)) / eps + params.q as f64;
    let m_prime = params.m_prime();
    let mp = m_prime as f64;
    let excess_error = 1.0 - 1.0 / params.c + eps;
    Ok(AgnosticReport {
        m_prime_order,
        m_prime,
        sample_bound: mp.powi(3) / (eps * eps),
        time_bound: mp * mp * (mp + time) / (eps * eps),
        excess_error,
        vacuous: excess_error >= 0.5,
        regime,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learners::{ConceptClass, ReferenceTlq, ReferenceTlqParams};
    use crate::oracles::ExampleOracle;
    use crate::rng::rng_from_seed;

    #[test]
    fn noise_labels_leave_marginal_unchanged() {
        let n = 6;
        let mut rng = rng_from_seed(3);
        let w: Vec<f64> = (0..64).map(|i| (1 + i % 7) as f64 / 253.0).collect();
        let dx = Distribution::explicit(n, w).unwrap();
        let f = BooleanFunction::random_dense(n, 0.4, &mut rng).unwrap();
        let dref = LabeledDistribution::bernoulli(dx.clone(), 0.3).unwrap();
        let (d, z) = filtered_distribution(&dref, &f).unwrap();
        assert!((z - 0.21).abs() < 1e-12);
        for b in 0..64u32 {
            let x = BitVector::new(n, b).unwrap();
            assert!((d.pmf(&x) - dx.pmf(&x)).abs() < 1e-12);
        }
    }

    #[test]
    fn deterministic_labels_keep_agreement_set() {
        let n = 5;
        let u = Distribution::uniform(n).unwrap();
        let g = BooleanFunction::parity(n, 0b11).unwrap();
        let f = BooleanFunction::dictator(n, 1).unwrap();
        let dref = LabeledDistribution::deterministic(u.clone(), g.clone()).unwrap();
        let (d, z) = filtered_distribution(&dref, &f).unwrap();
        let agree = 1.0 - f.dist(&g, &u).unwrap();
        assert!((z - 0.5 * agree).abs() < 1e-12);
        for b in 0..32u32 {
            let x = BitVector::new(n, b).unwrap();
            let want = if f.eval_bits(b) == g.eval_bits(b) { 1.0 / 32.0 / agree } else { 0.0 };
            assert!((d.pmf(&x) - want).abs() < 1e-12);
        }
        let one = BooleanFunction::constant(n, true).unwrap();
        let zero = LabeledDistribution::deterministic(u, BooleanFunction::constant(n, false).unwrap()).unwrap();
        assert_eq!(filtered_distribution(&zero, &one).unwrap_err(), Error::ZeroNormalizer);
    }

    #[test]
    fn rare_labels_exit_early() {
        let n = 8;
        let mut p = RefutationParams::new(0.0, 0.05, 1.0, 20, 4);
        p.oversample = 1.0;
        p.c2 = 1.0;
        let src = LabeledDistribution::bernoulli(Distribution::uniform(n).unwrap(), 0.005).unwrap();
        let ex = ExampleOracle::new(src, rng_from_seed(1)).draw_examples(p.m_prime()).unwrap();
        let l = ReferenceTlq::new(ConceptClass::Dictators { n }, ReferenceTlqParams::new(0.05, 20, 4)).unwrap();
        let run = biased_refutation(&ex, &p, &l, &mut rng_from_seed(2)).unwrap();
        assert_eq!(run.verdict, RefutationVerdict::Structure);
        assert_eq!(run.accepted, 0);
        assert!(biased_refutation(&ex[..10], &p, &l, &mut rng_from_seed(2)).is_err());
    }

    #[test]
    fn validity_predicate_and_accounting() {
        let p = RefutationParams::new(0.35, 0.05, 1.0, 100, 50);
        assert!(p.validate().is_err());
        let p = RefutationParams::new(0.0, 0.1, 1.0, 100, 50);
        let r = tlq_to_agnostic_params(&p, 0.0, 1.0 / 64.0).unwrap();
        assert!((r.m_prime_order - 2050.0).abs() < 1e-9);
        assert_eq!(r.m_prime, p.bias_samples() + p.pool_size() + p.filter_samples());
        assert!(!r.vacuous);
        let mut big = p.clone();
        big.c = 1e9;
        big.eta = 0.0;
        assert!(tlq_to_agnostic_params(&big, 0.0, 1.0 / 64.0).unwrap().vacuous);
    }
}
