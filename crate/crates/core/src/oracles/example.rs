use crate::boolean_core::{BitVector, BooleanFunction};
use crate::rng::StdRng;
use crate::{Error, Result};

use super::budget::{QueryBudget, QueryLog};
use super::labeled::LabeledDistribution;

/// I.i.d. labeled examples from a [`LabeledDistribution`].
pub struct ExampleOracle {
    source: LabeledDistribution,
    rng: StdRng,
    budget: QueryBudget,
}

impl ExampleOracle {
    pub fn new(source: LabeledDistribution, rng: StdRng) -> Self {
        Self { source, rng, budget: QueryBudget::unlimited() }
    }

    pub fn with_budget(mut self, budget: QueryBudget) -> Self {
        self.budget = budget;
        self
    }

    pub fn source(&self) -> &LabeledDistribution {
        &self.source
    }

    pub fn samples_drawn(&self) -> u64 {
        self.budget.samples_used
    }

    pub fn draw_examples(&mut self, m: usize) -> Result<Vec<(BitVector, bool)>> {
        self.budget.charge_samples(m as u64)?;
        Ok((0..m).map(|_| self.source.sample(&mut self.rng)).collect())
    }
}

/// Answers point queries `x ↦ f*(x)`.
pub trait MembershipOracle {
    fn n(&self) -> usize;
    fn mq(&mut self, x: &BitVector) -> Result<bool>;
    fn queries_made(&self) -> u64;
}

/// Membership oracle backed by a [`BooleanFunction`], with budget and log.
pub struct FunctionMembershipOracle {
    target: BooleanFunction,
    budget: QueryBudget,
    log: QueryLog<BitVector>,
}

impl FunctionMembershipOracle {
    pub fn new(target: BooleanFunction) -> Self {
        Self { target, budget: QueryBudget::unlimited(), log: QueryLog::default() }
    }

    pub fn with_budget(mut self, budget: QueryBudget) -> Self {
        self.budget = budget;
        self
    }

    pub fn log(&self) -> &QueryLog<BitVector> {
        &self.log
    }

    pub fn target(&self) -> &BooleanFunction {
        &self.target
    }
}

impl MembershipOracle for FunctionMembershipOracle {
    fn n(&self) -> usize {
        self.target.n()
    }

    fn mq(&mut self, x: &BitVector) -> Result<bool> {
        if x.n() != self.target.n() {
            return Err(Error::DimensionMismatch { expected: self.target.n(), got: x.n() });
        }
        self.budget.charge_mq()?;
        self.log.push(*x);
        Ok(self.target.eval_bits(x.bits()))
    }

    fn queries_made(&self) -> u64 {
        self.budget.mq_used
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boolean_core::Distribution;
    use crate::boolean_core::Body;
    use crate::rng::rng_from_seed;

    #[test]
    fn deterministic_and_bernoulli_draws() {
        let n = 6;
        let g = BooleanFunction::parity(n, 0b1001).unwrap();
        let src = LabeledDistribution::deterministic(Distribution::uniform(n).unwrap(), g.clone()).unwrap();
        let mut ex = ExampleOracle::new(src, rng_from_seed(1));
        for (x, y) in ex.draw_examples(500).unwrap() {
            assert_eq!(y, g.eval(&x).unwrap());
        }
        assert_eq!(ex.samples_drawn(), 500);
        let src = LabeledDistribution::bernoulli(Distribution::uniform(n).unwrap(), 0.5).unwrap();
        let mut ex = ExampleOracle::new(src, rng_from_seed(2));
        let ys = ex.draw_examples(100_000).unwrap();
        let mean = ys.iter().filter(|(_, y)| *y).count() as f64 / 1e5;
        assert!((mean - 0.5).abs() < 0.01);
    }

    #[test]
    fn point_mass_marginal() {
        let x0 = BitVector::parse("01101").unwrap();
        let src = LabeledDistribution::bernoulli(crate::boolean_core::Distribution::point_mass(x0), 0.3).unwrap();
        let mut ex = ExampleOracle::new(src, rng_from_seed(3));
        assert!(ex.draw_examples(100).unwrap().iter().all(|(x, _)| *x == x0));
    }

    #[test]
    fn example_budget() {
        let src = LabeledDistribution::bernoulli(Distribution::uniform(3).unwrap(), 0.5).unwrap();
        let mut ex = ExampleOracle::new(src, rng_from_seed(4))
            .with_budget(QueryBudget { max_samples: Some(10), ..Default::default() });
        ex.draw_examples(10).unwrap();
        assert!(ex.draw_examples(1).is_err());
    }

    #[test]
    fn membership_counts_and_memoizes() {
        let f = BooleanFunction::lazy_biased(8, 0.5, 7).unwrap();
        let mut mq = FunctionMembershipOracle::new(f);
        let x = BitVector::parse("10110010").unwrap();
        let a = mq.mq(&x).unwrap();
        assert_eq!(mq.mq(&x).unwrap(), a);
        assert_eq!(mq.queries_made(), 2);
        assert_eq!(mq.log().entries().len(), 2);
        if let Body::Lazy(l) = mq.target().body() {
            assert_eq!(l.realized(), 1);
        }
        for _ in 0..3 {
            mq.mq(&x.flip(1).unwrap()).unwrap();
        }
        assert_eq!(mq.queries_made(), 5);
        let mut limited = FunctionMembershipOracle::new(BooleanFunction::constant(2, true).unwrap())
            .with_budget(QueryBudget { max_mq: Some(1), ..Default::default() });
        let y = BitVector::parse("11").unwrap();
        limited.mq(&y).unwrap();
        assert!(limited.mq(&y).is_err());
        assert_eq!(limited.queries_made(), 1);
    }
}
