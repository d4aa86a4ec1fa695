//! Learners that touch the target only through MQ-SQs.
//!
//! Query patterns used here:
//! - influence of `i` under a restriction `R`: Type I and Type II with `φ ≡ 1`,
//!   `D*` uniform on `R`'s subcube and `π = x ↦ x ⊕ e_i`;
//! - the mean of `f` on a subcube: Type I with `φ ≡ 1`;
//! - the error of a candidate tree `T` on a subcube: Type I with
//!   `φ = 1 − T` plus Type I with `φ ≡ 1`, since `Pr[f ≠ T] = E[f(1−T)] + E[T] − E[fT]`;
//! - a ±1 Fourier coefficient: two Type I queries, `φ = (χ_S + 1)/2` and `φ ≡ 1`;
//! - a Fourier bucket weight: Type II with `φ ≡ 1` and `π = x ↦ x ⊕ δ`,
//!   converted to ±1 products with one Type I mean.
//!
//! The last two patterns are what the proper decision-tree learner of Blanc,
//! Lange, Qiao and Tan needs; that learner itself is not implemented.

use rand::{Rng, RngCore};

use crate::boolean_core::{full_mask, BooleanFunction, Distribution, Permutation, Restriction};
use crate::oracles::{MqsqOracle, MqsqQuery, TestFunction};
use crate::{Error, Result};

use super::concept::Hypothesis;

/// Learner that talks only to an MQ-SQ oracle.
pub trait MqsqLearner: Send + Sync {
    fn name(&self) -> &'static str;
    /// Upper bound on the number of MQ-SQs issued.
    fn declared_queries(&self, n: usize) -> u64;
    /// Tolerance under which the guarantee holds.
    fn declared_tau(&self) -> f64;
    /// Upper bound on `‖D*‖₂²` over issued Type I/II queries.
    fn declared_max_d_star_l2_sq(&self, n: usize) -> f64;
    fn run(&self, oracle: &mut dyn MqsqOracle, rng: &mut dyn RngCore) -> Result<Hypothesis>;
}

fn subcube_of(n: usize, restriction: Option<&Restriction>) -> Result<Distribution> {
    match restriction {
        None => Distribution::uniform(n),
        Some(r) => {
            if r.n() != n {
                return Err(Error::DimensionMismatch { expected: n, got: r.n() });
            }
            Ok(Distribution::subcube(r.clone()))
        }
    }
}

/// `Pr[f(x) ≠ f(x ⊕ e_i)]` for `x` uniform on the subcube of `restriction`,
/// as `2E[f] − 2E[f · f∘π]`; within `4τ` of the truth.
pub fn influence_mqsq(oracle: &mut dyn MqsqOracle, coord: usize, restriction: Option<&Restriction>) -> Result<f64> {
    let n = oracle.n();
    if coord == 0 || coord > n {
        return Err(Error::CoordinateOutOfRange { coord, n });
    }
    if restriction.is_some_and(|r| r.is_fixed(coord)) {
        return Err(Error::InvalidRestriction(format!("coordinate {coord} is fixed")));
    }
    let d_star = subcube_of(n, restriction)?;
    let mean = oracle.query(&MqsqQuery::TypeI { phi: TestFunction::one(), d_star: d_star.clone() })?;
    let pi = Permutation::flip(n, coord)?;
    let corr = oracle.query(&MqsqQuery::TypeII { phi: TestFunction::one(), d_star, pi })?;
    Ok(2.0 * mean - 2.0 * corr)
}

/// Junta learning: keep coordinates whose influence estimate is at least
/// `2^{-k}`, then round the subcube mean of `f` for every assignment to them.
pub fn learn_junta_mqsq(oracle: &mut dyn MqsqOracle, k: usize) -> Result<Hypothesis> {
    let n = oracle.n();
    if k > n {
        return Err(Error::InvalidParameter(format!("junta size {k} exceeds dimension {n}")));
    }
    let threshold = (-(k as f64)).exp2();
    let mut relevant = Vec::new();
    for i in 1..=n {
        if influence_mqsq(oracle, i, None)? >= threshold {
            relevant.push(i);
        }
    }
    if relevant.len() > k {
        return Err(Error::Learner(format!(
            "{} coordinates pass the influence threshold for a {k}-junta",
            relevant.len()
        )));
    }
    let cells = 1usize << relevant.len();
    let mut table = Vec::with_capacity(cells);
    for a in 0..cells {
        let fixed: Vec<(usize, bool)> = relevant.iter().enumerate().map(|(j, &c)| (c, a >> j & 1 == 1)).collect();
        let d_star = Distribution::subcube(Restriction::new(n, &fixed)?);
        let mean = oracle.query(&MqsqQuery::TypeI { phi: TestFunction::one(), d_star })?;
        table.push(mean >= 0.5);
    }
    Ok(Hypothesis::Function(BooleanFunction::junta(n, &relevant, &table)?))
}

/// [`learn_junta_mqsq`] as an [`MqsqLearner`].
#[derive(Clone, Debug)]
pub struct JuntaMqsqLearner {
    pub k: usize,
}

impl MqsqLearner for JuntaMqsqLearner {
    fn name(&self) -> &'static str {
        "junta_mqsq"
    }

    fn declared_queries(&self, n: usize) -> u64 {
        2 * n as u64 + (1u64 << self.k)
    }

    fn declared_tau(&self) -> f64 {
        (-(self.k as f64 + 2.0)).exp2()
    }

    fn declared_max_d_star_l2_sq(&self, n: usize) -> f64 {
        (-((n - self.k.min(n)) as f64)).exp2()
    }

    fn run(&self, oracle: &mut dyn MqsqOracle, _rng: &mut dyn RngCore) -> Result<Hypothesis> {
        learn_junta_mqsq(oracle, self.k)
    }
}

fn uniform_mean(oracle: &mut dyn MqsqOracle) -> Result<f64> {
    let n = oracle.n();
    oracle.query(&MqsqQuery::TypeI { phi: TestFunction::one(), d_star: Distribution::uniform(n)? })
}

/// Coefficient of `χ_S` in the ±1 form `1 − 2f`:
/// `E[χ_S] − 4E[f·(χ_S+1)/2] + 2E[f]`, within `6τ`.
pub fn km_coeff_mqsq(oracle: &mut dyn MqsqOracle, s: u32) -> Result<f64> {
    let n = oracle.n();
    if s & !full_mask(n) != 0 {
        return Err(Error::StrayBits { n });
    }
    let shifted = oracle.query(&MqsqQuery::TypeI {
        phi: TestFunction::ShiftedCharacter(s),
        d_star: Distribution::uniform(n)?,
    })?;
    let mean = uniform_mean(oracle)?;
    let chi_mean = if s == 0 { 1.0 } else { 0.0 };
    Ok(chi_mean - 4.0 * shifted + 2.0 * mean)
}

/// Estimates `Σ_{U ⊆ J̄} ĝ(S ∪ U)²` for `g = 1 − 2f` as
/// `E_{δ∼Δ_J} χ_S(δ) E_x[g(x) g(x⊕δ)]`, `Δ_J` uniform on vectors supported
/// on `J`. Each inner term is `1 − 4E[f] + 4E[f·f∘π_δ]`. When `samples`
/// reaches `2^{|J|}` every `δ` is enumerated once instead of sampled.
pub fn km_weight_mqsq(
    oracle: &mut dyn MqsqOracle,
    s: u32,
    j: u32,
    samples: usize,
    rng: &mut dyn RngCore,
) -> Result<f64> {
    let n = oracle.n();
    if (s | j) & !full_mask(n) != 0 {
        return Err(Error::StrayBits { n });
    }
    if s & !j != 0 {
        return Err(Error::InvalidParameter(format!("{s:#b} is not a subset of {j:#b}")));
    }
    if samples == 0 {
        return Err(Error::InvalidParameter("weight estimate needs at least one sample".into()));
    }
    let size = j.count_ones();
    let enumerate = size < 63 && samples as u64 >= 1u64 << size;
    let mean = if j == 0 { 0.0 } else { uniform_mean(oracle)? };
    let uniform = Distribution::uniform(n)?;
    let mut term = |delta: u32| -> Result<f64> {
        if delta == 0 {
            return Ok(1.0);
        }
        let pi = Permutation::xor_shift(n, delta)?;
        let corr = oracle.query(&MqsqQuery::TypeII { phi: TestFunction::one(), d_star: uniform.clone(), pi })?;
        let sign = if (s & delta).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
        Ok(sign * (1.0 - 4.0 * mean + 4.0 * corr))
    };
    let mut acc = 0.0;
    let count;
    if enumerate {
        let mut cur = 0u32;
        let mut c = 0u64;
        loop {
            acc += term(cur)?;
            c += 1;
            cur = cur.wrapping_sub(j) & j;
            if cur == 0 {
                break;
            }
        }
        count = c as f64;
    } else {
        for _ in 0..samples {
            let delta = rng.gen::<u32>() & j;
            acc += term(delta)?;
        }
        count = samples as f64;
    }
    Ok(acc / count)
}

/// Knobs of the bucket search.
#[derive(Clone, Debug, PartialEq)]
pub struct KmParams {
    pub sparsity: usize,
    pub eps: f64,
    /// Cap on `δ` samples per bucket weight.
    pub max_weight_samples: usize,
}

impl KmParams {
    pub fn new(sparsity: usize, eps: f64) -> Self {
        Self { sparsity, eps, max_weight_samples: 100_000 }
    }

    /// `θ = ε² / (4s)`.
    pub fn threshold(&self) -> f64 {
        self.eps * self.eps / (4.0 * self.sparsity as f64)
    }

    /// Required tolerance `ε / (8s)`.
    pub fn tau(&self) -> f64 {
        self.eps / (8.0 * self.sparsity as f64)
    }

    /// Largest number of buckets a level may keep, `4s/ε²`.
    pub fn max_buckets(&self) -> usize {
        (1.0 / self.threshold()).floor() as usize
    }

    /// `⌈32 ln(40ns/ε) / θ²⌉` capped at `max_weight_samples`.
    pub fn weight_samples(&self, n: usize) -> usize {
        let th = self.threshold();
        let raw = (32.0 * (40.0 * n as f64 * self.sparsity as f64 / self.eps).ln() / (th * th)).ceil();
        if raw >= self.max_weight_samples as f64 {
            self.max_weight_samples
        } else {
            raw.max(1.0) as usize
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.sparsity == 0 || !(self.eps > 0.0 && self.eps < 1.0) || self.max_weight_samples == 0 {
            return Err(Error::InvalidParameter("KM needs s ≥ 1, ε in (0,1) and a positive sample cap".into()));
        }
        Ok(())
    }
}

/// Sparse ±1 approximation found by [`km_learn`].
#[derive(Clone, Debug)]
pub struct KmOutcome {
    pub hypothesis: BooleanFunction,
    /// Surviving `(S, estimated ĝ(S))` pairs.
    pub coefficients: Vec<(u32, f64)>,
    pub max_level_buckets: usize,
}

/// Bucket search over prefixes `J = {1..j}`: a bucket `(S, J)` survives when
/// its weight estimate is at least `θ`. Survivors at `j = n` get coefficient
/// estimates, and the hypothesis is the sign of the sparse sum mapped back to
/// `{0,1}`.
pub fn km_learn(oracle: &mut dyn MqsqOracle, params: &KmParams, rng: &mut dyn RngCore) -> Result<KmOutcome> {
    params.validate()?;
    let n = oracle.n();
    let theta = params.threshold();
    let samples = params.weight_samples(n);
    let cap = params.max_buckets();
    let mut buckets: Vec<u32> = vec![0];
    let mut widest = 1;
    for level in 1..=n {
        let j = full_mask(n) >> (n - level);
        let bit = 1u32 << (level - 1);
        let mut next = Vec::new();
        for &s in &buckets {
            for child in [s, s | bit] {
                if km_weight_mqsq(oracle, child, j, samples, rng)? >= theta {
                    next.push(child);
                }
            }
        }
        if next.len() > cap {
            return Err(Error::Learner(format!(
                "{} buckets survive at level {level}, more than 4s/ε² = {cap}",
                next.len()
            )));
        }
        widest = widest.max(next.len());
        buckets = next;
    }
    let mut coefficients = Vec::with_capacity(buckets.len());
    for &s in &buckets {
        coefficients.push((s, km_coeff_mqsq(oracle, s)?));
    }
    let hypothesis = BooleanFunction::from_fn(n, |x| {
        let v: f64 = coefficients.iter().map(|&(s, c)| c * x.character(s)).sum();
        v < 0.0
    })?;
    Ok(KmOutcome { hypothesis, coefficients, max_level_buckets: widest })
}

/// [`km_learn`] as an [`MqsqLearner`].
#[derive(Clone, Debug)]
pub struct KmLearner {
    pub params: KmParams,
}

impl MqsqLearner for KmLearner {
    fn name(&self) -> &'static str {
        "kushilevitz_mansour"
    }

    fn declared_queries(&self, n: usize) -> u64 {
        let per_bucket = 1 + self.params.weight_samples(n) as u64;
        let buckets = self.params.max_buckets() as u64;
        n as u64 * 2 * buckets * per_bucket + 2 * buckets
    }

    fn declared_tau(&self) -> f64 {
        self.params.tau()
    }

    fn declared_max_d_star_l2_sq(&self, n: usize) -> f64 {
        (-(n as f64)).exp2()
    }

    fn run(&self, oracle: &mut dyn MqsqOracle, rng: &mut dyn RngCore) -> Result<Hypothesis> {
        Ok(Hypothesis::Function(km_learn(oracle, &self.params, rng)?.hypothesis))
    }
}

/// Relevant coordinates of a learned junta hypothesis, for reporting.
pub fn junta_support(h: &BooleanFunction) -> Result<Vec<usize>> {
    let n = h.n();
    let mut out = Vec::new();
    for i in 1..=n {
        if crate::boolean_core::influence_exact(h, i, None)? > 0.0 {
            out.push(i);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boolean_core::{influence_exact, mask_of};
    use crate::oracles::{DirectMqsqOracle, SignPolicy, ToleranceMode};
    use crate::rng::rng_from_seed;

    fn exact(f: &BooleanFunction) -> DirectMqsqOracle {
        let u = Distribution::uniform(f.n()).unwrap();
        DirectMqsqOracle::new(f.clone(), u, ToleranceMode::Exact, rng_from_seed(0)).unwrap()
    }

    #[test]
    fn influence_examples() {
        let n = 6;
        let par = BooleanFunction::parity(n, 0b101).unwrap();
        assert!((influence_mqsq(&mut exact(&par), 1, None).unwrap() - 1.0).abs() < 1e-12);
        assert!(influence_mqsq(&mut exact(&par), 2, None).unwrap().abs() < 1e-12);
        let and = BooleanFunction::and(n, 0b11).unwrap();
        assert!((influence_mqsq(&mut exact(&and), 1, None).unwrap() - 0.5).abs() < 1e-12);
        let r = Restriction::new(n, &[(2, true)]).unwrap();
        let got = influence_mqsq(&mut exact(&and), 1, Some(&r)).unwrap();
        assert!((got - influence_exact(&and, 1, Some(&r)).unwrap()).abs() < 1e-12);
        assert!(influence_mqsq(&mut exact(&and), 2, Some(&r)).is_err());
    }

    #[test]
    fn junta_recovery() {
        let n = 10;
        let f = BooleanFunction::parity(n, 0b111).unwrap();
        let h = learn_junta_mqsq(&mut exact(&f), 3).unwrap();
        assert_eq!(h.function().unwrap(), &f);
        let c = BooleanFunction::constant(n, true).unwrap();
        let h = learn_junta_mqsq(&mut exact(&c), 3).unwrap();
        assert_eq!(h.function().unwrap(), &c);
        let big = BooleanFunction::parity(n, 0b1111).unwrap();
        assert!(learn_junta_mqsq(&mut exact(&big), 3).is_err());
    }

    #[test]
    fn coefficient_examples() {
        let n = 5;
        let par = BooleanFunction::parity(n, 0b110).unwrap();
        assert!((km_coeff_mqsq(&mut exact(&par), 0b110).unwrap() - 1.0).abs() < 1e-12);
        assert!(km_coeff_mqsq(&mut exact(&par), 0b011).unwrap().abs() < 1e-12);
        let and = BooleanFunction::and(n, 0b11).unwrap();
        assert!((km_coeff_mqsq(&mut exact(&and), 0b11).unwrap() + 0.5).abs() < 1e-12);
        assert!((km_coeff_mqsq(&mut exact(&and), 0).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn bucket_weight_examples() {
        let n = 5;
        let and = BooleanFunction::and(n, 0b11).unwrap();
        let mut rng = rng_from_seed(3);
        let w = km_weight_mqsq(&mut exact(&and), 0, 0b1, 10_000, &mut rng).unwrap();
        assert!((w - 0.5).abs() < 0.05);
        let w = km_weight_mqsq(&mut exact(&and), 0, 0b1, 1, &mut rng).unwrap();
        assert!((w - 0.5).abs() <= 0.5 + 1e-12);
        let par = BooleanFunction::parity(n, 0b10110).unwrap();
        let w = km_weight_mqsq(&mut exact(&par), 0b110, 0b111, 100, &mut rng).unwrap();
        assert!((w - 1.0).abs() < 1e-12);
        let w = km_weight_mqsq(&mut exact(&par), 0b010, 0b111, 100, &mut rng).unwrap();
        assert!(w.abs() < 1e-12);
        assert!(km_weight_mqsq(&mut exact(&par), 0b1000, 0b111, 100, &mut rng).is_err());
    }

    #[test]
    fn km_examples() {
        let n = 10;
        let mut rng = rng_from_seed(4);
        let par = BooleanFunction::parity(n, mask_of(&[2, 5, 9])).unwrap();
        let out = km_learn(&mut exact(&par), &KmParams::new(1, 0.1), &mut rng).unwrap();
        assert_eq!(out.hypothesis, par);
        let maj = BooleanFunction::from_fn(n, |x| (x.bits() & 0b111).count_ones() >= 2).unwrap();
        let params = KmParams::new(4, 0.1);
        let u = Distribution::uniform(n).unwrap();
        let mode = ToleranceMode::AdversarialSign { tau: params.tau(), policy: SignPolicy::Plus };
        let mut o = DirectMqsqOracle::new(maj.clone(), u.clone(), mode, rng_from_seed(1)).unwrap();
        let out = km_learn(&mut o, &params, &mut rng).unwrap();
        assert_eq!(out.hypothesis.dist(&maj, &u).unwrap(), 0.0);
        let c = BooleanFunction::constant(n, false).unwrap();
        let out = km_learn(&mut exact(&c), &KmParams::new(1, 0.1), &mut rng).unwrap();
        assert_eq!(out.hypothesis, c);
    }
}
