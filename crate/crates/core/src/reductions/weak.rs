use std::sync::Arc;

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::boolean_core::{BooleanFunction, Distribution};
use crate::oracles::{expectation, CorrelationSqOracle, LabeledTest, RefutationSqOracle, TestFunction};
use crate::{Error, Result};

use super::refutation::RefutationVerdict;
use super::sq_refutation::{SqRefuter, SqRefuterDecl};

/// Parameters of the SQ refutation to weak learning reduction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeakLearnParams {
    /// Tolerance the refuter needs.
    pub tau: f64,
    /// Bias range of the refuter's noise guarantee.
    pub alpha: f64,
    /// Advantage over 1/2 the returned classifier must have.
    pub eps: f64,
    /// Tolerance of the oracle the weak learner talks to.
    pub tau_prime: f64,
    /// Independent simulations before giving up.
    pub rounds: usize,
    /// Rounding attempts per high-correlation query.
    pub max_rounding: usize,
}

impl WeakLearnParams {
    /// Largest `τ′` allowed by `τ ≥ 4ε + 22τ′`.
    pub fn for_refuter(decl: &SqRefuterDecl, eps: f64) -> Self {
        Self {
            tau: decl.tau,
            alpha: decl.alpha,
            eps,
            tau_prime: (decl.tau - 4.0 * eps) / 22.0,
            rounds: 3,
            max_rounding: 1000,
        }
    }

    /// Half-width of the band around 1/2 the label mean lies in after the shortcut.
    pub fn gamma(&self) -> f64 {
        self.eps + 2.0 * self.tau_prime
    }

    /// Correlation guaranteed for a query flagged as high-correlation.
    pub fn correlation(&self) -> f64 {
        2.0 * self.eps + 7.0 * self.tau_prime
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0 && self.eps > 0.0 && self.tau_prime > 0.0) {
            return Err(Error::InvalidParameter("τ, ε and τ′ must be positive".into()));
        }
        if !(self.alpha <= 0.5 - (self.eps + 2.0 * self.tau_prime)) {
            return Err(Error::InvalidParameter(format!(
                "α ≤ 1/2 − (ε + 2τ′) fails: α = {}, bound {:.4}",
                self.alpha,
                0.5 - self.gamma()
            )));
        }
        if !(self.tau >= 4.0 * self.eps + 22.0 * self.tau_prime) {
            return Err(Error::InvalidParameter(format!(
                "τ ≥ 4ε + 22τ′ fails: τ = {}, right side {:.4}",
                self.tau,
                4.0 * self.eps + 22.0 * self.tau_prime
            )));
        }
        if self.rounds == 0 || self.max_rounding == 0 {
            return Err(Error::InvalidParameter("need at least one round and one rounding attempt".into()));
        }
        Ok(())
    }
}

/// Independent `Bern(φ(x))` bit at every point, complemented when `positive`
/// is false.
pub fn round_classifier(phi: &TestFunction, n: usize, positive: bool, rng: &mut dyn RngCore) -> Result<BooleanFunction> {
    let bits = (0..1u32 << n)
        .map(|x| {
            let v = phi.checked(x)?;
            let b = rng.gen::<f64>() < v;
            Ok(b == positive)
        })
        .collect::<Result<Vec<bool>>>()?;
    BooleanFunction::from_bits(n, &bits)
}

/// A refuter query answered without consulting the target, kept for replay.
#[derive(Clone, Debug)]
pub struct AnsweredQuery {
    pub test: LabeledTest,
    pub answer: f64,
}

/// Result of [`sq_refuter_to_weak_learner`].
#[derive(Clone, Debug)]
pub struct WeakLearnOutcome {
    pub hypothesis: BooleanFunction,
    pub p_hat: f64,
    /// The label mean was far from 1/2 and a constant was returned.
    pub shortcut: bool,
    pub rounds_used: usize,
    pub rounding_attempts: usize,
    pub estimated_error: Option<f64>,
    /// Verdicts of simulations that ended without a high-correlation query.
    pub quiet_verdicts: Vec<RefutationVerdict>,
    pub answered: Vec<AnsweredQuery>,
    pub sq_queries: u64,
}

/// A query whose `Δ′` correlates with the target; `positive` is the sign.
struct Flagged {
    delta01: TestFunction,
    positive: bool,
}

/// Refutation SQ oracle simulated from a correlation oracle for `(f*, D)`.
struct Simulation<'a> {
    corr: &'a mut dyn CorrelationSqOracle,
    marginal: &'a Distribution,
    p_hat: f64,
    band: f64,
    answered: Vec<AnsweredQuery>,
    flagged: Option<Flagged>,
    count: u64,
}

impl RefutationSqOracle for Simulation<'_> {
    fn n(&self) -> usize {
        self.marginal.n()
    }

    fn sq(&mut self, phi: &LabeledTest) -> Result<f64> {
        if self.flagged.is_some() {
            return Err(Error::Precondition("simulation already stopped at a correlated query".into()));
        }
        self.count += 1;
        let n = self.marginal.n();
        let mut delta01 = Vec::with_capacity(1 << n);
        for x in 0..1u32 << n {
            delta01.push((phi.value(x, true)? - phi.value(x, false)? + 1.0) / 2.0);
        }
        let delta01 = TestFunction::Table(Arc::new(delta01));
        let mu = self.corr.sq(&delta01)?;
        let base = expectation(&delta01, self.marginal)?;
        let gap = mu - self.p_hat * base;
        if gap.abs() <= self.band {
            // E_D[φ(x,0) + p̂·Δ(x)] with Δ = 2Δ′ − 1.
            let zero = expectation(&phi.zero, self.marginal)?;
            let answer = zero + self.p_hat * (2.0 * base - 1.0);
            self.answered.push(AnsweredQuery { test: phi.clone(), answer });
            return Ok(answer);
        }
        self.flagged = Some(Flagged { delta01, positive: gap > 0.0 });
        Err(Error::Precondition("correlated query found".into()))
    }

    fn tau(&self) -> f64 {
        0.0
    }

    fn queries_made(&self) -> u64 {
        self.count
    }
}

/// Weak learner from an SQ refuter: simulate the refuter with answers that
/// pretend the labels are independent coins, watch for a query whose
/// label-difference `Δ′` correlates with the target, and round that `Δ′`
/// into a classifier.
pub fn sq_refuter_to_weak_learner(
    refuter: &dyn SqRefuter,
    oracle: &mut dyn CorrelationSqOracle,
    marginal: &Distribution,
    params: &WeakLearnParams,
    rng: &mut dyn RngCore,
) -> Result<WeakLearnOutcome> {
    params.validate()?;
    let n = marginal.n();
    if oracle.n() != n || refuter.n() != n {
        return Err(Error::DimensionMismatch { expected: n, got: oracle.n() });
    }
    let (eps, tp) = (params.eps, params.tau_prime);
    let start = oracle.queries_made();
    let p_hat = oracle.sq(&TestFunction::one())?;
    let mut out = WeakLearnOutcome {
        hypothesis: BooleanFunction::constant(n, false)?,
        p_hat,
        shortcut: false,
        rounds_used: 0,
        rounding_attempts: 0,
        estimated_error: None,
        quiet_verdicts: Vec::new(),
        answered: Vec::new(),
        sq_queries: 0,
    };
    if p_hat + tp <= 0.5 - eps || p_hat - tp >= 0.5 + eps {
        out.shortcut = true;
        out.hypothesis = BooleanFunction::constant(n, p_hat - tp >= 0.5 + eps)?;
        out.sq_queries = oracle.queries_made() - start;
        return Ok(out);
    }
    for round in 0..params.rounds {
        out.rounds_used = round + 1;
        let mut sim = Simulation {
            corr: &mut *oracle,
            marginal,
            p_hat,
            band: params.tau / 2.0 - 2.0 * tp,
            answered: Vec::new(),
            flagged: None,
            count: 0,
        };
        let verdict = refuter.run(&mut sim, rng);
        let flagged = sim.flagged.take();
        out.answered.append(&mut sim.answered);
        let Some(flag) = flagged else {
            out.quiet_verdicts.push(verdict?);
            continue;
        };
        for _ in 0..params.max_rounding {
            out.rounding_attempts += 1;
            let h = round_classifier(&flag.delta01, n, flag.positive, rng)?;
            let ind = TestFunction::indicator(h.clone());
            let mean_h = expectation(&ind, marginal)?;
            let both = oracle.sq(&ind)?;
            let err = mean_h + p_hat - 2.0 * both;
            if err <= 0.5 - eps - 3.0 * tp {
                out.hypothesis = h;
                out.estimated_error = Some(err);
                out.sq_queries = oracle.queries_made() - start;
                return Ok(out);
            }
        }
    }
    Err(Error::ContractViolation(format!(
        "no correlated query in {} simulations (verdicts {:?})",
        params.rounds,
        out.quiet_verdicts.iter().map(|v| v.label()).collect::<Vec<_>>()
    )))
}

/// SQ refuter for dictators under the uniform marginal: structure when some
/// coordinate agrees with the label with frequency at least 3/4.
#[derive(Clone, Debug)]
pub struct CoordinateRefuter {
    pub n: usize,
    pub tau: f64,
    pub alpha: f64,
}

impl SqRefuter for CoordinateRefuter {
    fn name(&self) -> &'static str {
        "coordinate_refuter"
    }

    fn n(&self) -> usize {
        self.n
    }

    fn declared(&self) -> SqRefuterDecl {
        SqRefuterDecl { q: self.n as u64, tau: self.tau, alpha: self.alpha, eta: 0.0 }
    }

    fn run(&self, oracle: &mut dyn RefutationSqOracle, _rng: &mut dyn RngCore) -> Result<RefutationVerdict> {
        for i in 1..=self.n {
            let bit = 1u32 << (i - 1);
            let agree = LabeledTest::new(
                TestFunction::map(move |x| if x & bit == 0 { 1.0 } else { 0.0 }),
                TestFunction::map(move |x| if x & bit != 0 { 1.0 } else { 0.0 }),
            );
            if oracle.sq(&agree)? >= 0.75 {
                return Ok(RefutationVerdict::Structure);
            }
        }
        Ok(RefutationVerdict::Noise)
    }
}

/// Refuter that never looks at its oracle.
#[derive(Clone, Debug)]
pub struct ConstantRefuter {
    pub n: usize,
    pub verdict: RefutationVerdict,
}

impl SqRefuter for ConstantRefuter {
    fn name(&self) -> &'static str {
        "constant_refuter"
    }

    fn n(&self) -> usize {
        self.n
    }

    fn declared(&self) -> SqRefuterDecl {
        SqRefuterDecl { q: 0, tau: 0.1, alpha: 0.25, eta: 0.0 }
    }

    fn run(&self, _oracle: &mut dyn RefutationSqOracle, _rng: &mut dyn RngCore) -> Result<RefutationVerdict> {
        Ok(self.verdict)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracles::{TargetSqOracle, ToleranceMode};
    use crate::rng::rng_from_seed;

    #[test]
    fn rounding_examples() {
        let n = 6;
        let mut rng = rng_from_seed(1);
        assert_eq!(round_classifier(&TestFunction::one(), n, true, &mut rng).unwrap(), BooleanFunction::constant(n, true).unwrap());
        let g = BooleanFunction::parity(n, 0b101).unwrap();
        let h = round_classifier(&TestFunction::indicator(g.clone()), n, true, &mut rng).unwrap();
        assert_eq!(h, g);
        assert_eq!(round_classifier(&TestFunction::indicator(g.clone()), n, false, &mut rng).unwrap(), g.complement());
        let u = Distribution::uniform(n).unwrap();
        let half = TestFunction::Constant(0.5);
        let avg: f64 = (0..1000)
            .map(|_| round_classifier(&half, n, true, &mut rng).unwrap().dist(&g, &u).unwrap())
            .sum::<f64>()
            / 1000.0;
        assert!((avg - 0.5).abs() < 0.02, "{avg}");
    }

    #[test]
    fn parameter_inequalities() {
        let decl = SqRefuterDecl { q: 8, tau: 0.1, alpha: 0.25, eta: 0.0 };
        let p = WeakLearnParams::for_refuter(&decl, 0.0125);
        p.validate().unwrap();
        let mut bad = p.clone();
        bad.tau_prime = 0.01;
        assert!(bad.validate().is_err());
        bad = p;
        bad.alpha = 0.49;
        assert!(bad.validate().is_err());
    }

    #[test]
    fn dictator_is_weakly_learned() {
        let n = 8;
        let u = Distribution::uniform(n).unwrap();
        let target = BooleanFunction::dictator(n, 4).unwrap();
        let refuter = CoordinateRefuter { n, tau: 0.1, alpha: 0.25 };
        let params = WeakLearnParams::for_refuter(&refuter.declared(), 0.0125);
        let mode = ToleranceMode::AdversarialSign { tau: params.tau_prime, policy: crate::oracles::SignPolicy::Plus };
        let mut o = TargetSqOracle::new(target.clone(), u.clone(), mode, rng_from_seed(1)).unwrap();
        let out = sq_refuter_to_weak_learner(&refuter, &mut o, &u, &params, &mut rng_from_seed(2)).unwrap();
        assert!(out.hypothesis.dist(&target, &u).unwrap() <= 0.5 - params.eps);
        assert!(!out.shortcut);

        let one = BooleanFunction::constant(n, true).unwrap();
        let mut o = TargetSqOracle::new(one.clone(), u.clone(), ToleranceMode::Exact, rng_from_seed(1)).unwrap();
        let out = sq_refuter_to_weak_learner(&refuter, &mut o, &u, &params, &mut rng_from_seed(2)).unwrap();
        assert!(out.shortcut);
        assert_eq!(out.hypothesis, one);
    }

    #[test]
    fn oblivious_refuter_is_a_contract_violation() {
        let n = 8;
        let u = Distribution::uniform(n).unwrap();
        let target = BooleanFunction::dictator(n, 4).unwrap();
        let refuter = ConstantRefuter { n, verdict: RefutationVerdict::Noise };
        let params = WeakLearnParams::for_refuter(&refuter.declared(), 0.0125);
        let mut o = TargetSqOracle::new(target, u.clone(), ToleranceMode::Exact, rng_from_seed(1)).unwrap();
        let err = sq_refuter_to_weak_learner(&refuter, &mut o, &u, &params, &mut rng_from_seed(2)).unwrap_err();
        assert!(matches!(err, Error::ContractViolation(_)));
    }
}
