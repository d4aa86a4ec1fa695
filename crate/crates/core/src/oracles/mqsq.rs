//! The five-type MQ-SQ oracle. For a target `f` with marginal `D` it answers,
//! within tolerance `τ`:
//!
//! | type | expectation |
//! |------|-------------|
//! | I    | `E_{x∼D*}[φ(x) f(x)]` |
//! | II   | `E_{x∼D*}[φ(x) f(x) f(π(x))]` |
//! | III  | `E_{x∼D}[φ(x)]` |
//! | IV   | `E_{x∼D}[φ(x) f(x)]` |
//! | V    | `E_{x∼D}[φ(x) f(x) f(π(x))]` |
//!
//! `D*` is chosen by the learner and known; `D` is the unknown marginal.

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::boolean_core::{fwht_in_place, BooleanFunction, Distribution, Permutation, PermutationForm};
use crate::rng::StdRng;
use crate::{Error, Result};

use super::budget::{QueryBudget, QueryLog};
use super::tolerance::{QueryKind, ToleranceMode};

/// A `[0,1]`-valued test function on `{0,1}^n`.
#[derive(Clone)]
pub enum TestFunction {
    Constant(f64),
    /// `(χ_S(x) + 1) / 2` for the subset mask `S`.
    ShiftedCharacter(u32),
    /// A 0/1 function used as a test.
    Indicator(Arc<BooleanFunction>),
    /// Dense values indexed by point.
    Table(Arc<Vec<f64>>),
    Map(Arc<dyn Fn(u32) -> f64 + Send + Sync>),
}

impl fmt::Debug for TestFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TestFunction::Constant(c) => write!(f, "Constant({c})"),
            TestFunction::ShiftedCharacter(s) => write!(f, "ShiftedCharacter({s:#b})"),
            TestFunction::Indicator(g) => write!(f, "Indicator(n={})", g.n()),
            TestFunction::Table(t) => write!(f, "Table(len={})", t.len()),
            TestFunction::Map(_) => write!(f, "Map(..)"),
        }
    }
}

impl TestFunction {
    pub fn constant(c: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&c) {
            return Err(Error::TestFunctionRange(c));
        }
        Ok(TestFunction::Constant(c))
    }

    pub fn one() -> Self {
        TestFunction::Constant(1.0)
    }

    pub fn table(values: Vec<f64>) -> Result<Self> {
        if let Some(v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::TestFunctionRange(*v));
        }
        Ok(TestFunction::Table(Arc::new(values)))
    }

    pub fn indicator(g: BooleanFunction) -> Self {
        TestFunction::Indicator(Arc::new(g))
    }

    pub fn map(f: impl Fn(u32) -> f64 + Send + Sync + 'static) -> Self {
        TestFunction::Map(Arc::new(f))
    }

    #[inline]
    pub fn value(&self, bits: u32) -> f64 {
        match self {
            TestFunction::Constant(c) => *c,
            TestFunction::ShiftedCharacter(s) => {
                if (bits & s).count_ones() & 1 == 0 {
                    1.0
                } else {
                    0.0
                }
            }
            TestFunction::Indicator(g) => g.eval_bits(bits) as u8 as f64,
            TestFunction::Table(t) => t[bits as usize],
            TestFunction::Map(m) => m(bits),
        }
    }

    #[inline]
    pub fn checked(&self, bits: u32) -> Result<f64> {
        let v = self.value(bits);
        if (0.0..=1.0).contains(&v) {
            Ok(v)
        } else {
            Err(Error::TestFunctionRange(v))
        }
    }
}

/// One MQ-SQ query.
#[derive(Clone, Debug)]
pub enum MqsqQuery {
    TypeI { phi: TestFunction, d_star: Distribution },
    TypeII { phi: TestFunction, d_star: Distribution, pi: Permutation },
    TypeIII { phi: TestFunction },
    TypeIV { phi: TestFunction },
    TypeV { phi: TestFunction, pi: Permutation },
}

impl MqsqQuery {
    pub fn kind(&self) -> QueryKind {
        match self {
            MqsqQuery::TypeI { .. } => QueryKind::TypeI,
            MqsqQuery::TypeII { .. } => QueryKind::TypeII,
            MqsqQuery::TypeIII { .. } => QueryKind::TypeIII,
            MqsqQuery::TypeIV { .. } => QueryKind::TypeIV,
            MqsqQuery::TypeV { .. } => QueryKind::TypeV,
        }
    }

    pub fn d_star(&self) -> Option<&Distribution> {
        match self {
            MqsqQuery::TypeI { d_star, .. } | MqsqQuery::TypeII { d_star, .. } => Some(d_star),
            _ => None,
        }
    }

    pub fn phi(&self) -> &TestFunction {
        match self {
            MqsqQuery::TypeI { phi, .. }
            | MqsqQuery::TypeII { phi, .. }
            | MqsqQuery::TypeIII { phi }
            | MqsqQuery::TypeIV { phi }
            | MqsqQuery::TypeV { phi, .. } => phi,
        }
    }

    pub fn pi(&self) -> Option<&Permutation> {
        match self {
            MqsqQuery::TypeII { pi, .. } | MqsqQuery::TypeV { pi, .. } => Some(pi),
            _ => None,
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if let Some(d) = self.d_star() {
            if d.n() != n {
                return Err(Error::DimensionMismatch { expected: n, got: d.n() });
            }
        }
        if let Some(p) = self.pi() {
            if p.n() != n {
                return Err(Error::DimensionMismatch { expected: n, got: p.n() });
            }
            if let PermutationForm::Table(_) = p.form() {
                if !p.is_fixed_point_free() {
                    return Err(Error::InvalidPermutation("permutation has a fixed point".into()));
                }
            }
        }
        if let TestFunction::Constant(c) = self.phi() {
            if !(0.0..=1.0).contains(c) {
                return Err(Error::TestFunctionRange(*c));
            }
        }
        Ok(())
    }
}

/// Log entry for an answered MQ-SQ.
#[derive(Clone, Debug, Serialize)]
pub struct MqsqLogEntry {
    pub kind: QueryKind,
    pub d_star_l2_sq: Option<f64>,
    pub answer: f64,
}

/// Anything answering MQ-SQs for a hidden target.
pub trait MqsqOracle {
    fn n(&self) -> usize;
    fn query(&mut self, q: &MqsqQuery) -> Result<f64>;
    /// Declared tolerance of the answers.
    fn tau(&self) -> f64;
    fn queries_made(&self) -> u64;
    /// Largest `‖D*‖₂²` over answered Type I/II queries (`0` if none).
    fn max_d_star_l2_sq(&self) -> f64;
}

/// MQ-SQ oracle with direct access to the target and the marginal.
pub struct DirectMqsqOracle {
    f: BooleanFunction,
    marginal: Distribution,
    mode: ToleranceMode,
    rng: StdRng,
    budget: QueryBudget,
    log: QueryLog<MqsqLogEntry>,
    max_norm: f64,
    uniform_mean: Option<f64>,
    autocorr: Option<Vec<f64>>,
}

const AUTOCORR_MAX_N: usize = 16;

impl DirectMqsqOracle {
    pub fn new(f: BooleanFunction, marginal: Distribution, mode: ToleranceMode, rng: StdRng) -> Result<Self> {
        if f.n() != marginal.n() {
            return Err(Error::DimensionMismatch { expected: f.n(), got: marginal.n() });
        }
        mode.validate()?;
        Ok(Self {
            f,
            marginal,
            mode,
            rng,
            budget: QueryBudget::unlimited(),
            log: QueryLog::default(),
            max_norm: 0.0,
            uniform_mean: None,
            autocorr: None,
        })
    }

    pub fn with_budget(mut self, budget: QueryBudget) -> Self {
        self.budget = budget;
        self
    }

    pub fn log(&self) -> &QueryLog<MqsqLogEntry> {
        &self.log
    }

    pub fn target(&self) -> &BooleanFunction {
        &self.f
    }

    pub fn mode(&self) -> &ToleranceMode {
        &self.mode
    }

    /// `2^{-n} Σ_x f(x) f(x ⊕ δ)` for all `δ`, via two transforms. All
    /// intermediate values are integers below `2^53`, so the table is exact.
    fn autocorrelation(&mut self) -> &[f64] {
        if self.autocorr.is_none() {
            let n = self.f.n();
            let mut a: Vec<f64> = (0..1u32 << n).map(|b| self.f.eval_bits(b) as u8 as f64).collect();
            fwht_in_place(&mut a);
            a.iter_mut().for_each(|v| *v *= *v);
            fwht_in_place(&mut a);
            let scale = (-(2.0 * n as f64)).exp2();
            a.iter_mut().for_each(|v| *v *= scale);
            self.autocorr = Some(a);
        }
        self.autocorr.as_deref().expect("filled above")
    }

    fn uniform_mean(&mut self) -> f64 {
        if self.uniform_mean.is_none() {
            let n = self.f.n();
            let ones = (0..1u32 << n).filter(|&b| self.f.eval_bits(b)).count();
            self.uniform_mean = Some(ones as f64 / (1u64 << n) as f64);
        }
        self.uniform_mean.expect("filled above")
    }

    /// Exact expectation, by full-support summation except for the two
    /// closed-form cases with constant `φ` under uniform `D*`.
    pub fn exact(&mut self, q: &MqsqQuery) -> Result<f64> {
        q.validate(self.f.n())?;
        match q {
            MqsqQuery::TypeI { phi: TestFunction::Constant(c), d_star } if d_star.is_uniform() && self.f.is_dense() => {
                Ok(c * self.uniform_mean())
            }
            MqsqQuery::TypeII { phi: TestFunction::Constant(c), d_star, pi }
                if d_star.is_uniform() && self.f.is_dense() && self.f.n() <= AUTOCORR_MAX_N =>
            {
                if let PermutationForm::XorShift(delta) = pi.form() {
                    let d = *delta as usize;
                    return Ok(c * self.autocorrelation()[d]);
                }
                brute_force(&self.f, &self.marginal, q)
            }
            _ => brute_force(&self.f, &self.marginal, q),
        }
    }

    fn sampled(&mut self, q: &MqsqQuery, num_samples: usize) -> Result<f64> {
        let d = q.d_star().unwrap_or(&self.marginal);
        let mut acc = 0.0;
        for _ in 0..num_samples {
            let x = d.sample(&mut self.rng).bits();
            acc += integrand(&self.f, q, x)?;
        }
        Ok(acc / num_samples as f64)
    }
}

#[inline]
fn integrand(f: &BooleanFunction, q: &MqsqQuery, x: u32) -> Result<f64> {
    let phi = q.phi().checked(x)?;
    Ok(match q {
        MqsqQuery::TypeIII { .. } => phi,
        MqsqQuery::TypeI { .. } | MqsqQuery::TypeIV { .. } => phi * f.eval_bits(x) as u8 as f64,
        MqsqQuery::TypeII { pi, .. } | MqsqQuery::TypeV { pi, .. } => {
            if f.eval_bits(x) && f.eval_bits(pi.apply_bits(x)) {
                phi
            } else {
                0.0
            }
        }
    })
}

/// Exact answer by summing the integrand over the support of `D*` (Types I,
/// II) or of `D` (Types III–V).
pub fn brute_force(f: &BooleanFunction, marginal: &Distribution, q: &MqsqQuery) -> Result<f64> {
    q.validate(f.n())?;
    let d = q.d_star().unwrap_or(marginal);
    let mut acc = 0.0;
    let mut err = None;
    d.for_each_support(|x, w| {
        if err.is_some() {
            return;
        }
        match integrand(f, q, x) {
            Ok(v) => acc += w * v,
            Err(e) => err = Some(e),
        }
    });
    match err {
        Some(e) => Err(e),
        None => Ok(acc),
    }
}

impl MqsqOracle for DirectMqsqOracle {
    fn n(&self) -> usize {
        self.f.n()
    }

    fn query(&mut self, q: &MqsqQuery) -> Result<f64> {
        q.validate(self.f.n())?;
        self.budget.charge_sq()?;
        let answer = match self.mode.clone() {
            ToleranceMode::Sampling { num_samples, .. } => self.sampled(q, num_samples)?,
            mode => {
                let exact = self.exact(q)?;
                mode.perturb(exact, q.kind())
            }
        };
        let norm = q.d_star().map(|d| d.l2_norm_sq());
        if let Some(v) = norm {
            self.max_norm = self.max_norm.max(v);
        }
        self.log.push(MqsqLogEntry { kind: q.kind(), d_star_l2_sq: norm, answer });
        Ok(answer)
    }

    fn tau(&self) -> f64 {
        self.mode.tau()
    }

    fn queries_made(&self) -> u64 {
        self.budget.sq_used
    }

    fn max_d_star_l2_sq(&self) -> f64 {
        self.max_norm
    }
}

/// `E_{D*}[φ]` for a known `D*`, summed over its support.
pub fn expectation(phi: &TestFunction, d: &Distribution) -> Result<f64> {
    if let TestFunction::Constant(c) = phi {
        return Ok(*c);
    }
    let mut acc = 0.0;
    let mut err = None;
    d.for_each_support(|x, w| match phi.checked(x) {
        Ok(v) => acc += w * v,
        Err(e) => err = Some(e),
    });
    match err {
        Some(e) => Err(e),
        None => Ok(acc),
    }
}
