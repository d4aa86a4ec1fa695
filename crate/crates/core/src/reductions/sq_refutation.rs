use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::boolean_core::Distribution;
use crate::learners::{learn_junta_mqsq, subsets_up_to, Hypothesis, MqsqLearner};
use crate::oracles::{expectation, LabeledTest, MqsqOracle, MqsqQuery, RefutationSqOracle, TestFunction};
use crate::{Error, Result};

use super::refutation::RefutationVerdict;

/// Query budget and guarantee an SQ refuter declares.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SqRefuterDecl {
    pub q: u64,
    pub tau: f64,
    pub alpha: f64,
    pub eta: f64,
}

/// Refuter that sees the labeled distribution only through statistical queries.
pub trait SqRefuter {
    fn name(&self) -> &'static str;
    fn n(&self) -> usize;
    fn declared(&self) -> SqRefuterDecl;
    fn run(&self, oracle: &mut dyn RefutationSqOracle, rng: &mut dyn RngCore) -> Result<RefutationVerdict>;
}

/// Parameters of the MQ-SQ learner to SQ refuter construction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MqsqRefutationParams {
    pub c: f64,
    pub eta: f64,
    /// Accuracy of the learner.
    pub eps: f64,
    /// Smallest label bias covered in the noise case.
    pub alpha: f64,
    /// Upper bound on `‖D_x‖₂²` over the marginal family.
    pub marginal_l2_sq: f64,
    /// Concentration scale; the largest admissible value when absent.
    #[serde(default)]
    pub b: Option<f64>,
}

/// Outcome of the three conditions at construction.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConditionReport {
    pub tau: f64,
    pub tau_prime: f64,
    /// `cη + ε + (c+4)τ + 6τ′`, which `α` must exceed.
    pub alpha_required: f64,
    /// `α²(1−α)²/‖D_x‖₂²`, the worst case of `p²(1−p)²/‖D_x‖₂²` over `p ∈ [α, 1−α]`.
    pub b_limit_marginal: f64,
    /// `1/‖D*‖₂²` at the learner's declared bound.
    pub b_limit_queries: f64,
    pub b: f64,
    /// `τ²B`; the added failure probability is `O(q)·exp(−Ω(τ²B))`.
    pub failure_exponent: f64,
}

/// Refuter obtained by simulating an MQ-SQ testable learner on the refutation
/// instance: `f`-dependent queries on known distributions are answered as if
/// `f` were a `p̂`-biased random function.
pub struct MqsqRefuter {
    learner: Box<dyn MqsqLearner>,
    n: usize,
    params: MqsqRefutationParams,
    report: ConditionReport,
}

/// Everything one run of [`MqsqRefuter`] measured.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MqsqRefutationRun {
    pub verdict: RefutationVerdict,
    pub p_hat: f64,
    pub learner_rejected: bool,
    /// `(μ̂₁, μ̂₂, μ̂₃)` of the closing queries.
    pub closing: Option<[f64; 3]>,
    pub mu_hat: Option<f64>,
    pub threshold: Option<f64>,
    pub sq_queries: u64,
    pub mqsq_queries: u64,
}

pub fn mqsq_to_sq_refuter(
    learner: Box<dyn MqsqLearner>,
    n: usize,
    params: MqsqRefutationParams,
) -> Result<MqsqRefuter> {
    let p = &params;
    if !(p.c >= 1.0) || !(p.eta >= 0.0) || !(p.eps > 0.0) || !(p.alpha > 0.0 && p.alpha <= 0.5) {
        return Err(Error::InvalidParameter("need c ≥ 1, η ≥ 0, ε > 0 and α in (0, 1/2]".into()));
    }
    if !(p.marginal_l2_sq > 0.0 && p.marginal_l2_sq <= 1.0) {
        return Err(Error::InvalidParameter("‖D_x‖₂² must lie in (0, 1]".into()));
    }
    let tau = learner.declared_tau();
    let tau_prime = tau / 4.0;
    let alpha_required = p.c * p.eta + p.eps + (p.c + 4.0) * tau + 6.0 * tau_prime;
    if !(p.alpha > alpha_required) {
        return Err(Error::Precondition(format!(
            "α > cη + ε + (c+4)τ + 6τ′ fails: α = {}, right side {alpha_required:.4}",
            p.alpha
        )));
    }
    let a = p.alpha;
    let b_limit_marginal = a * a * (1.0 - a) * (1.0 - a) / p.marginal_l2_sq;
    let b_limit_queries = 1.0 / learner.declared_max_d_star_l2_sq(n);
    let b = match p.b {
        Some(b) if b > b_limit_marginal => {
            return Err(Error::Precondition(format!("B ≤ p²(1−p)²/‖D_x‖₂² fails: {b} > {b_limit_marginal:.4}")))
        }
        Some(b) if b > b_limit_queries => {
            return Err(Error::Precondition(format!("B ≤ 1/‖D*‖₂² fails: {b} > {b_limit_queries:.4}")))
        }
        Some(b) => b,
        None => b_limit_marginal.min(b_limit_queries),
    };
    let report = ConditionReport {
        tau,
        tau_prime,
        alpha_required,
        b_limit_marginal,
        b_limit_queries,
        b,
        failure_exponent: tau * tau * b,
    };
    Ok(MqsqRefuter { learner, n, params, report })
}

impl MqsqRefuter {
    pub fn conditions(&self) -> &ConditionReport {
        &self.report
    }

    pub fn run_detailed(&self, oracle: &mut dyn RefutationSqOracle, rng: &mut dyn RngCore) -> Result<MqsqRefutationRun> {
        if oracle.n() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, got: oracle.n() });
        }
        let tau_prime = self.report.tau_prime;
        if oracle.tau() > tau_prime + 1e-12 {
            return Err(Error::ContractViolation(format!(
                "SQ oracle tolerance {} exceeds τ/4 = {tau_prime}",
                oracle.tau()
            )));
        }
        let start = oracle.queries_made();
        let p_hat = oracle.sq(&LabeledTest::label())?;
        let mut sim = SimulatedMqsq {
            sq: oracle,
            p_hat,
            tau: self.report.tau,
            norm_bound: self.learner.declared_max_d_star_l2_sq(self.n),
            count: 0,
            max_norm: 0.0,
        };
        let out = self.learner.run(&mut sim, rng)?;
        let mut run = MqsqRefutationRun {
            verdict: RefutationVerdict::Structure,
            p_hat,
            learner_rejected: false,
            closing: None,
            mu_hat: None,
            threshold: None,
            sq_queries: 0,
            mqsq_queries: 0,
        };
        match out {
            Hypothesis::Reject => run.learner_rejected = true,
            Hypothesis::Function(h) => {
                let ind = TestFunction::indicator(h);
                let m1 = sim.query(&MqsqQuery::TypeIII { phi: ind.clone() })?;
                let m2 = sim.query(&MqsqQuery::TypeIV { phi: TestFunction::one() })?;
                let m3 = sim.query(&MqsqQuery::TypeIV { phi: ind })?;
                let mu = m1 + m2 - 2.0 * m3;
                let threshold = p_hat.min(1.0 - p_hat) - 5.0 * tau_prime;
                run.closing = Some([m1, m2, m3]);
                run.mu_hat = Some(mu);
                run.threshold = Some(threshold);
                if mu >= threshold {
                    run.verdict = RefutationVerdict::Noise;
                }
            }
        }
        run.mqsq_queries = sim.count;
        run.sq_queries = oracle.queries_made() - start;
        Ok(run)
    }
}

impl SqRefuter for MqsqRefuter {
    fn name(&self) -> &'static str {
        "mqsq_refuter"
    }

    fn n(&self) -> usize {
        self.n
    }

    fn declared(&self) -> SqRefuterDecl {
        SqRefuterDecl {
            q: self.learner.declared_queries(self.n) + 4,
            tau: self.report.tau_prime,
            alpha: self.params.alpha,
            eta: self.params.eta,
        }
    }

    fn run(&self, oracle: &mut dyn RefutationSqOracle, rng: &mut dyn RngCore) -> Result<RefutationVerdict> {
        Ok(self.run_detailed(oracle, rng)?.verdict)
    }
}

/// MQ-SQ oracle answered from refutation SQs and the bias estimate.
struct SimulatedMqsq<'a> {
    sq: &'a mut dyn RefutationSqOracle,
    p_hat: f64,
    tau: f64,
    norm_bound: f64,
    count: u64,
    max_norm: f64,
}

impl SimulatedMqsq<'_> {
    fn known(&mut self, phi: &TestFunction, d_star: &Distribution) -> Result<f64> {
        let norm = d_star.l2_norm_sq();
        if norm > self.norm_bound * (1.0 + 1e-9) {
            return Err(Error::ContractViolation(format!(
                "learner queried ‖D*‖₂² = {norm:.3e} above its declared {:.3e}",
                self.norm_bound
            )));
        }
        self.max_norm = self.max_norm.max(norm);
        expectation(phi, d_star)
    }
}

impl MqsqOracle for SimulatedMqsq<'_> {
    fn n(&self) -> usize {
        self.sq.n()
    }

    fn query(&mut self, q: &MqsqQuery) -> Result<f64> {
        q.validate(self.n())?;
        self.count += 1;
        match q {
            MqsqQuery::TypeI { phi, d_star } => Ok(self.p_hat * self.known(phi, d_star)?),
            MqsqQuery::TypeII { phi, d_star, .. } => Ok(self.p_hat * self.p_hat * self.known(phi, d_star)?),
            MqsqQuery::TypeIII { phi } => self.sq.sq(&LabeledTest::marginal(phi.clone())),
            MqsqQuery::TypeIV { phi } => self.sq.sq(&LabeledTest::times_label(phi.clone())),
            MqsqQuery::TypeV { phi, .. } => Ok(self.p_hat * self.sq.sq(&LabeledTest::times_label(phi.clone()))?),
        }
    }

    fn tau(&self) -> f64 {
        self.tau
    }

    fn queries_made(&self) -> u64 {
        self.count
    }

    fn max_d_star_l2_sq(&self) -> f64 {
        self.max_norm
    }
}

/// Testable MQ-SQ learner for `k`-juntas under the uniform distribution.
///
/// Tests: for every `S` with `|S| ≤ 2` and `φ = (χ_S + 1)/2`, the Type III
/// answer must be within `τ` of `E_U[φ]` and the Type IV answer within `2τ`
/// of the Type I answer on `U`. Both hold whenever the marginal is uniform.
/// On acceptance it learns the junta from influences; if more than `k`
/// coordinates look relevant it returns the rounded mean instead.
#[derive(Clone, Debug)]
pub struct JuntaTestableLearner {
    pub k: usize,
    pub tau: f64,
}

impl MqsqLearner for JuntaTestableLearner {
    fn name(&self) -> &'static str {
        "junta_testable_mqsq"
    }

    fn declared_queries(&self, n: usize) -> u64 {
        3 * subsets_up_to(n, 2).len() as u64 + 2 * n as u64 + (1u64 << self.k) + 1
    }

    fn declared_tau(&self) -> f64 {
        self.tau
    }

    fn declared_max_d_star_l2_sq(&self, n: usize) -> f64 {
        (-((n - self.k.min(n)) as f64)).exp2()
    }

    fn run(&self, oracle: &mut dyn MqsqOracle, _rng: &mut dyn RngCore) -> Result<Hypothesis> {
        let n = oracle.n();
        let u = Distribution::uniform(n)?;
        for s in subsets_up_to(n, 2) {
            let phi = if s == 0 { TestFunction::one() } else { TestFunction::ShiftedCharacter(s) };
            let target = if s == 0 { 1.0 } else { 0.5 };
            let marginal = oracle.query(&MqsqQuery::TypeIII { phi: phi.clone() })?;
            if (marginal - target).abs() > self.tau {
                return Ok(Hypothesis::Reject);
            }
            let on_d = oracle.query(&MqsqQuery::TypeIV { phi: phi.clone() })?;
            let on_u = oracle.query(&MqsqQuery::TypeI { phi, d_star: u.clone() })?;
            if (on_d - on_u).abs() > 2.0 * self.tau {
                return Ok(Hypothesis::Reject);
            }
        }
        match learn_junta_mqsq(oracle, self.k) {
            Ok(h) => Ok(h),
            Err(Error::Learner(_)) => {
                let mean = oracle.query(&MqsqQuery::TypeI { phi: TestFunction::one(), d_star: u })?;
                Ok(Hypothesis::Function(crate::boolean_core::BooleanFunction::constant(n, mean >= 0.5)?))
            }
            Err(e) => Err(e),
        }
    }
}

/// Learner that rejects at once.
#[derive(Clone, Debug)]
pub struct AlwaysReject {
    pub tau: f64,
}

impl MqsqLearner for AlwaysReject {
    fn name(&self) -> &'static str {
        "always_reject"
    }

    fn declared_queries(&self, _n: usize) -> u64 {
        0
    }

    fn declared_tau(&self) -> f64 {
        self.tau
    }

    fn declared_max_d_star_l2_sq(&self, n: usize) -> f64 {
        (-(n as f64)).exp2()
    }

    fn run(&self, _oracle: &mut dyn MqsqOracle, _rng: &mut dyn RngCore) -> Result<Hypothesis> {
        Ok(Hypothesis::Reject)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boolean_core::BooleanFunction;
    use crate::oracles::{LabeledDistribution, LabeledSqOracle, ToleranceMode};
    use crate::rng::rng_from_seed;

    fn params(n: usize) -> MqsqRefutationParams {
        MqsqRefutationParams { c: 1.0, eta: 0.0, eps: 0.03, alpha: 0.3, marginal_l2_sq: (-(n as f64)).exp2(), b: None }
    }

    #[test]
    fn rejecting_learner_means_structure() {
        let n = 6;
        let r = mqsq_to_sq_refuter(Box::new(AlwaysReject { tau: 0.04 }), n, params(n)).unwrap();
        let dref = LabeledDistribution::bernoulli(Distribution::uniform(n).unwrap(), 0.5).unwrap();
        let mut o = LabeledSqOracle::new(dref, ToleranceMode::Exact, rng_from_seed(1)).unwrap();
        let run = r.run_detailed(&mut o, &mut rng_from_seed(2)).unwrap();
        assert_eq!(run.verdict, RefutationVerdict::Structure);
        assert_eq!(run.sq_queries, 1);
    }

    #[test]
    fn condition_one_is_enforced() {
        let n = 6;
        let mut p = params(n);
        p.alpha = 0.2;
        assert!(mqsq_to_sq_refuter(Box::new(AlwaysReject { tau: 0.04 }), n, p.clone()).is_err());
        p.alpha = 0.3;
        p.b = Some(1e9);
        assert!(mqsq_to_sq_refuter(Box::new(AlwaysReject { tau: 0.04 }), n, p).is_err());
    }

    #[test]
    fn exact_oracle_verdicts() {
        let n = 8;
        let learner = JuntaTestableLearner { k: 2, tau: 0.04 };
        let q = learner.declared_queries(n);
        let r = mqsq_to_sq_refuter(Box::new(learner), n, params(n)).unwrap();
        let u = Distribution::uniform(n).unwrap();
        let noise = LabeledDistribution::bernoulli(u.clone(), 0.5).unwrap();
        let mut o = LabeledSqOracle::new(noise, ToleranceMode::Exact, rng_from_seed(1)).unwrap();
        let run = r.run_detailed(&mut o, &mut rng_from_seed(2)).unwrap();
        assert_eq!(run.verdict, RefutationVerdict::Noise);
        assert!(run.sq_queries <= q + 4);
        let g = BooleanFunction::and(n, 0b1010).unwrap();
        let det = LabeledDistribution::deterministic(u, g).unwrap();
        let mut o = LabeledSqOracle::new(det, ToleranceMode::Exact, rng_from_seed(1)).unwrap();
        let run = r.run_detailed(&mut o, &mut rng_from_seed(2)).unwrap();
        assert_eq!(run.verdict, RefutationVerdict::Structure);
        assert!(run.learner_rejected);
    }
}
