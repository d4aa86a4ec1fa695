use crate::boolean_core::{BooleanFunction, Distribution};
use crate::rng::StdRng;
use crate::{Error, Result};

use super::budget::QueryBudget;
use super::labeled::LabeledDistribution;
use super::mqsq::TestFunction;
use super::tolerance::{QueryKind, ToleranceMode};

/// A test on labeled pairs: `φ(x, 0) = zero(x)` and `φ(x, 1) = one(x)`.
#[derive(Clone, Debug)]
pub struct LabeledTest {
    pub zero: TestFunction,
    pub one: TestFunction,
}

impl LabeledTest {
    pub fn new(zero: TestFunction, one: TestFunction) -> Self {
        Self { zero, one }
    }

    /// `φ(x, y) = y`.
    pub fn label() -> Self {
        Self::new(TestFunction::Constant(0.0), TestFunction::Constant(1.0))
    }

    /// `φ(x, y) = ψ(x)`.
    pub fn marginal(psi: TestFunction) -> Self {
        Self::new(psi.clone(), psi)
    }

    /// `φ(x, y) = ψ(x)·y`.
    pub fn times_label(psi: TestFunction) -> Self {
        Self::new(TestFunction::Constant(0.0), psi)
    }

    #[inline]
    pub fn value(&self, bits: u32, y: bool) -> Result<f64> {
        if y {
            self.one.checked(bits)
        } else {
            self.zero.checked(bits)
        }
    }
}

/// Answers `E_{(x,y)∼Dref}[φ(x, y)]` within tolerance.
pub trait RefutationSqOracle {
    fn n(&self) -> usize;
    fn sq(&mut self, phi: &LabeledTest) -> Result<f64>;
    fn tau(&self) -> f64;
    fn queries_made(&self) -> u64;
}

/// Refutation SQ oracle over an explicit [`LabeledDistribution`].
pub struct LabeledSqOracle {
    dref: LabeledDistribution,
    mode: ToleranceMode,
    rng: StdRng,
    budget: QueryBudget,
}

impl LabeledSqOracle {
    pub fn new(dref: LabeledDistribution, mode: ToleranceMode, rng: StdRng) -> Result<Self> {
        mode.validate()?;
        Ok(Self { dref, mode, rng, budget: QueryBudget::unlimited() })
    }

    pub fn with_budget(mut self, budget: QueryBudget) -> Self {
        self.budget = budget;
        self
    }

    pub fn source(&self) -> &LabeledDistribution {
        &self.dref
    }

    /// `Σ_x D_x(x) [y(x) φ(x,1) + (1 − y(x)) φ(x,0)]`.
    pub fn exact(&self, phi: &LabeledTest) -> Result<f64> {
        exact_refutation_value(&self.dref, phi)
    }
}

pub fn exact_refutation_value(dref: &LabeledDistribution, phi: &LabeledTest) -> Result<f64> {
    let mut acc = 0.0;
    let mut err = None;
    dref.marginal().for_each_support(|b, w| {
        if err.is_some() {
            return;
        }
        let y = dref.y(b);
        match (phi.value(b, true), phi.value(b, false)) {
            (Ok(v1), Ok(v0)) => acc += w * (y * v1 + (1.0 - y) * v0),
            (Err(e), _) | (_, Err(e)) => err = Some(e),
        }
    });
    match err {
        Some(e) => Err(e),
        None => Ok(acc),
    }
}

impl RefutationSqOracle for LabeledSqOracle {
    fn n(&self) -> usize {
        self.dref.n()
    }

    fn sq(&mut self, phi: &LabeledTest) -> Result<f64> {
        self.budget.charge_sq()?;
        match self.mode {
            ToleranceMode::Sampling { num_samples, .. } => {
                let mut acc = 0.0;
                for _ in 0..num_samples {
                    let (x, y) = self.dref.sample(&mut self.rng);
                    acc += phi.value(x.bits(), y)?;
                }
                Ok(acc / num_samples as f64)
            }
            ref mode => Ok(mode.perturb(self.exact(phi)?, QueryKind::Refutation)),
        }
    }

    fn tau(&self) -> f64 {
        self.mode.tau()
    }

    fn queries_made(&self) -> u64 {
        self.budget.sq_used
    }
}

/// Answers `E_{x∼D}[φ(x) f*(x)]`: the statistical oracle of a learning task.
pub trait CorrelationSqOracle {
    fn n(&self) -> usize;
    fn sq(&mut self, phi: &TestFunction) -> Result<f64>;
    fn tau(&self) -> f64;
    fn queries_made(&self) -> u64;
}

/// Correlation oracle with direct access to `f*` and `D`.
pub struct TargetSqOracle {
    target: BooleanFunction,
    marginal: Distribution,
    mode: ToleranceMode,
    rng: StdRng,
    budget: QueryBudget,
}

impl TargetSqOracle {
    pub fn new(target: BooleanFunction, marginal: Distribution, mode: ToleranceMode, rng: StdRng) -> Result<Self> {
        if target.n() != marginal.n() {
            return Err(Error::DimensionMismatch { expected: target.n(), got: marginal.n() });
        }
        mode.validate()?;
        Ok(Self { target, marginal, mode, rng, budget: QueryBudget::unlimited() })
    }

    pub fn with_budget(mut self, budget: QueryBudget) -> Self {
        self.budget = budget;
        self
    }

    pub fn exact(&self, phi: &TestFunction) -> Result<f64> {
        let mut acc = 0.0;
        let mut err = None;
        self.marginal.for_each_support(|b, w| match phi.checked(b) {
            Ok(v) => {
                if self.target.eval_bits(b) {
                    acc += w * v
                }
            }
            Err(e) => err = Some(e),
        });
        match err {
            Some(e) => Err(e),
            None => Ok(acc),
        }
    }
}

impl CorrelationSqOracle for TargetSqOracle {
    fn n(&self) -> usize {
        self.target.n()
    }

    fn sq(&mut self, phi: &TestFunction) -> Result<f64> {
        self.budget.charge_sq()?;
        match self.mode {
            ToleranceMode::Sampling { num_samples, .. } => {
                let mut acc = 0.0;
                for _ in 0..num_samples {
                    let x = self.marginal.sample(&mut self.rng).bits();
                    let v = phi.checked(x)?;
                    if self.target.eval_bits(x) {
                        acc += v;
                    }
                }
                Ok(acc / num_samples as f64)
            }
            ref mode => Ok(mode.perturb(self.exact(phi)?, QueryKind::Correlation)),
        }
    }

    fn tau(&self) -> f64 {
        self.mode.tau()
    }

    fn queries_made(&self) -> u64 {
        self.budget.sq_used
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;

    #[test]
    fn refutation_examples() {
        let n = 4;
        let u = Distribution::uniform(n).unwrap();
        let noisy = LabeledDistribution::bernoulli(u.clone(), 0.3).unwrap();
        let mut o = LabeledSqOracle::new(noisy, ToleranceMode::Exact, rng_from_seed(1)).unwrap();
        assert!((o.sq(&LabeledTest::label()).unwrap() - 0.3).abs() < 1e-12);
        assert!((o.sq(&LabeledTest::marginal(TestFunction::one())).unwrap() - 1.0).abs() < 1e-12);
        let g = BooleanFunction::dictator(n, 1).unwrap();
        let det = LabeledDistribution::deterministic(u, g.clone()).unwrap();
        let mut o = LabeledSqOracle::new(det, ToleranceMode::Exact, rng_from_seed(1)).unwrap();
        let phi = LabeledTest::times_label(TestFunction::indicator(g));
        assert!((o.sq(&phi).unwrap() - 0.5).abs() < 1e-12);
        let bad = LabeledTest::marginal(TestFunction::map(|_| -0.5));
        assert!(o.sq(&bad).is_err());
        assert_eq!(o.queries_made(), 2);
    }

    #[test]
    fn sampling_mode_is_close() {
        let n = 6;
        let u = Distribution::uniform(n).unwrap();
        let g = BooleanFunction::parity(n, 0b11).unwrap();
        let det = LabeledDistribution::deterministic(u.clone(), g.clone()).unwrap();
        let mode = ToleranceMode::sampling_for(0.02, 0.01);
        let tau = mode.tau();
        let mut o = LabeledSqOracle::new(det, mode.clone(), rng_from_seed(5)).unwrap();
        let a = o.sq(&LabeledTest::label()).unwrap();
        assert!((a - 0.5).abs() <= tau);
        let mut c = TargetSqOracle::new(g, u, mode, rng_from_seed(6)).unwrap();
        let a = c.sq(&TestFunction::one()).unwrap();
        assert!((a - 0.5).abs() <= tau);
    }
}
