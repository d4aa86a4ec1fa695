use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::boolean_core::{BitVector, BooleanFunction, Distribution};
use crate::{Error, Result};

/// Conditional label rule `y(x) = Pr[y = 1 | x]`.
#[derive(Clone, Debug)]
pub enum LabelRule {
    Deterministic(BooleanFunction),
    ConstantBernoulli(f64),
    /// Dense table of `y(x)` values in `[0, 1]`.
    General(Vec<f64>),
}

/// A refutation instance: an `x`-marginal plus a label rule.
#[derive(Clone, Debug)]
pub struct LabeledDistribution {
    marginal: Distribution,
    labels: LabelRule,
}

impl LabeledDistribution {
    pub fn new(marginal: Distribution, labels: LabelRule) -> Result<Self> {
        let n = marginal.n();
        match &labels {
            LabelRule::Deterministic(g) if g.n() != n => {
                return Err(Error::DimensionMismatch { expected: n, got: g.n() })
            }
            LabelRule::ConstantBernoulli(p) if !(0.0..=1.0).contains(p) => {
                return Err(Error::InvalidParameter(format!("label bias {p} outside [0, 1]")))
            }
            LabelRule::General(y) => {
                if y.len() != 1 << n {
                    return Err(Error::InvalidParameter("label table must have 2^n entries".into()));
                }
                if let Some(v) = y.iter().find(|v| !(0.0..=1.0).contains(*v)) {
                    return Err(Error::InvalidParameter(format!("label probability {v} outside [0, 1]")));
                }
            }
            _ => {}
        }
        Ok(Self { marginal, labels })
    }

    pub fn deterministic(marginal: Distribution, g: BooleanFunction) -> Result<Self> {
        Self::new(marginal, LabelRule::Deterministic(g))
    }

    pub fn bernoulli(marginal: Distribution, p: f64) -> Result<Self> {
        Self::new(marginal, LabelRule::ConstantBernoulli(p))
    }

    pub fn n(&self) -> usize {
        self.marginal.n()
    }

    pub fn marginal(&self) -> &Distribution {
        &self.marginal
    }

    pub fn labels(&self) -> &LabelRule {
        &self.labels
    }

    #[inline]
    pub fn y(&self, bits: u32) -> f64 {
        match &self.labels {
            LabelRule::Deterministic(g) => g.eval_bits(bits) as u8 as f64,
            LabelRule::ConstantBernoulli(p) => *p,
            LabelRule::General(y) => y[bits as usize],
        }
    }

    /// `p = E_{(x,y)}[y]`.
    pub fn p_overall(&self) -> f64 {
        if let LabelRule::ConstantBernoulli(p) = self.labels {
            return p;
        }
        let mut acc = 0.0;
        self.marginal.for_each_support(|b, w| acc += w * self.y(b));
        acc
    }

    /// `Pr_{(x,y)}[f(x) ≠ y] = Σ_x D_x(x)[f(x)(1 − y(x)) + (1 − f(x)) y(x)]`.
    pub fn err(&self, f: &BooleanFunction) -> Result<f64> {
        if f.n() != self.n() {
            return Err(Error::DimensionMismatch { expected: self.n(), got: f.n() });
        }
        let mut acc = 0.0;
        self.marginal.for_each_support(|b, w| {
            let y = self.y(b);
            acc += w * if f.eval_bits(b) { 1.0 - y } else { y };
        });
        Ok(acc)
    }

    pub fn sample<R: RngCore + ?Sized>(&self, rng: &mut R) -> (BitVector, bool) {
        let x = self.marginal.sample(rng);
        let y = match &self.labels {
            LabelRule::Deterministic(g) => g.eval_bits(x.bits()),
            LabelRule::ConstantBernoulli(p) => rng.gen_bool(*p),
            LabelRule::General(y) => rng.gen_bool(y[x.index()]),
        };
        (x, y)
    }
}

/// Anything that produces labeled examples.
pub trait ExampleSource {
    fn n(&self) -> usize;
    fn draw(&mut self, rng: &mut dyn RngCore) -> Result<(BitVector, bool)>;
}

impl ExampleSource for LabeledDistribution {
    fn n(&self) -> usize {
        self.marginal.n()
    }

    fn draw(&mut self, rng: &mut dyn RngCore) -> Result<(BitVector, bool)> {
        Ok(self.sample(rng))
    }
}

/// Label-rule description used by configs and run records.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case", deny_unknown_fields)]
pub enum LabelSpec {
    Deterministic { n: usize, hex: String },
    ConstantBernoulli { p: f64 },
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn err_examples() {
        let n = 5;
        let u = Distribution::uniform(n).unwrap();
        let g = BooleanFunction::parity(n, 0b11).unwrap();
        let det = LabeledDistribution::deterministic(u.clone(), g.clone()).unwrap();
        assert_eq!(det.err(&g).unwrap(), 0.0);
        assert_eq!(det.err(&g.complement()).unwrap(), 1.0);
        let p = 0.3;
        let noisy = LabeledDistribution::bernoulli(u.clone(), p).unwrap();
        let f = BooleanFunction::and(n, 0b11).unwrap();
        let mu = f.mean(&u).unwrap();
        assert!((noisy.err(&f).unwrap() - (mu * (1.0 - p) + (1.0 - mu) * p)).abs() < 1e-12);
        assert!(noisy.err(&BooleanFunction::constant(4, true).unwrap()).is_err());
    }

    #[test]
    fn validation() {
        let u = Distribution::uniform(3).unwrap();
        assert!(LabeledDistribution::bernoulli(u.clone(), 1.2).is_err());
        assert!(LabeledDistribution::new(u.clone(), LabelRule::General(vec![0.5; 4])).is_err());
        assert!(LabeledDistribution::new(u.clone(), LabelRule::General(vec![2.0; 8])).is_err());
        let g = BooleanFunction::constant(4, true).unwrap();
        assert!(LabeledDistribution::deterministic(u, g).is_err());
    }

    #[test]
    fn p_overall_and_sampling() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let u = Distribution::uniform(4).unwrap();
        let d = LabeledDistribution::deterministic(u, BooleanFunction::and(4, 0b11).unwrap()).unwrap();
        assert_eq!(d.p_overall(), 0.25);
        for _ in 0..200 {
            let (x, y) = d.sample(&mut rng);
            assert_eq!(y, x.bit(1) && x.bit(2));
        }
    }
}
