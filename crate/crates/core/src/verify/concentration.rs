use serde::Serialize;

use crate::boolean_core::{BooleanFunction, Distribution, Permutation};
use crate::oracles::{LabeledDistribution, TestFunction};
use crate::reductions::filtered_distribution;
use crate::rng::{derive_seed, rng_from_seed};
use crate::{Error, Result};

/// Violation count of one deviation statistic.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DeviationPart {
    pub name: String,
    pub violations: usize,
    pub max_deviation: f64,
    pub mean_value: f64,
}

/// Empirical tail of a concentration statement over random `p`-biased `f`.
///
/// `nominal_bound` is the symbolic success probability with the unknown
/// constant written as `Ω`; `exponent` is the value of its argument with that
/// constant set to 1. A trial violates when any part deviates by more than
/// `deviation`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConcentrationReport {
    pub suite: String,
    pub n: usize,
    pub p: f64,
    pub deviation: f64,
    pub trials: usize,
    pub seed: u64,
    pub violations: usize,
    pub violation_rate: f64,
    pub nominal_bound: String,
    pub exponent: f64,
    pub parts: Vec<DeviationPart>,
}

struct Tally {
    names: Vec<&'static str>,
    violations: Vec<usize>,
    max_dev: Vec<f64>,
    sums: Vec<f64>,
    any: usize,
    trials: usize,
}

impl Tally {
    fn new(names: &[&'static str]) -> Self {
        let k = names.len();
        Tally { names: names.to_vec(), violations: vec![0; k], max_dev: vec![0.0; k], sums: vec![0.0; k], any: 0, trials: 0 }
    }

    /// Records one trial given `(value, deviation)` per part.
    fn record(&mut self, parts: &[(f64, f64)], limit: f64) {
        let mut violated = false;
        for (j, &(value, dev)) in parts.iter().enumerate() {
            self.sums[j] += value;
            self.max_dev[j] = self.max_dev[j].max(dev);
            if dev > limit {
                self.violations[j] += 1;
                violated = true;
            }
        }
        self.any += violated as usize;
        self.trials += 1;
    }

    fn finish(self, suite: &str, n: usize, p: f64, deviation: f64, seed: u64, bound: &str, exponent: f64) -> ConcentrationReport {
        let t = self.trials.max(1) as f64;
        let parts = (0..self.names.len())
            .map(|j| DeviationPart {
                name: self.names[j].into(),
                violations: self.violations[j],
                max_deviation: self.max_dev[j],
                mean_value: self.sums[j] / t,
            })
            .collect();
        ConcentrationReport {
            suite: suite.into(),
            n,
            p,
            deviation,
            trials: self.trials,
            seed,
            violations: self.any,
            violation_rate: self.any as f64 / t,
            nominal_bound: bound.into(),
            exponent,
            parts,
        }
    }
}

fn check_trials(trials: usize, deviation: f64) -> Result<()> {
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be positive".into()));
    }
    if !(deviation >= 0.0) {
        return Err(Error::InvalidParameter(format!("deviation {deviation} must be non-negative")));
    }
    Ok(())
}

fn random_f(n: usize, p: f64, seed: u64, suite: &str, i: usize) -> Result<BooleanFunction> {
    let mut rng = rng_from_seed(derive_seed(seed, suite, i as u64));
    BooleanFunction::random_dense(n, p, &mut rng)
}

fn tabulate(phi: &TestFunction, n: usize) -> Result<Vec<f64>> {
    (0..1u32 << n).map(|b| phi.checked(b)).collect()
}

fn marginal_weights(d: &Distribution) -> Vec<f64> {
    d.to_explicit()
}

fn biased_exponent(deviation: f64, p: f64, l2: f64) -> f64 {
    deviation * deviation * p * p * (1.0 - p) * (1.0 - p) / l2
}

/// Normalizer concentration: `|Z - p(1-p)| <= deviation * p(1-p)`, where `p`
/// is the overall label mean of `dref`.
pub fn check_normalizer(dref: &LabeledDistribution, trials: usize, deviation: f64, seed: u64) -> Result<ConcentrationReport> {
    check_trials(trials, deviation)?;
    let (n, p) = (dref.n(), dref.p_overall());
    let target = p * (1.0 - p);
    let mut tally = Tally::new(&["normalizer"]);
    for i in 0..trials {
        let f = random_f(n, p, seed, "normalizer", i)?;
        let z = match filtered_distribution(dref, &f) {
            Ok((_, z)) => z,
            Err(Error::ZeroNormalizer) => 0.0,
            Err(e) => return Err(e),
        };
        tally.record(&[(z, (z - target).abs())], deviation * target);
    }
    let l2 = dref.marginal().l2_norm_sq();
    Ok(tally.finish("normalizer", n, p, deviation, seed, "1 - 2exp(-Ω(δ²p²(1-p)²/‖D_x‖²))", biased_exponent(deviation, p, l2)))
}

/// Error blowup under filtering: for a fresh hypothesis `g` per trial
/// (drawn by `hypothesis`), `Pr_D[g != f] <= Pr_ref[g != y] + deviation`.
/// Trials where the filtered distribution is undefined count as violations.
pub fn check_error_blowup(
    dref: &LabeledDistribution,
    hypothesis: impl Fn(usize) -> Result<BooleanFunction>,
    trials: usize,
    deviation: f64,
    seed: u64,
) -> Result<ConcentrationReport> {
    check_trials(trials, deviation)?;
    let (n, p) = (dref.n(), dref.p_overall());
    let mut tally = Tally::new(&["excess_error"]);
    for i in 0..trials {
        let f = random_f(n, p, seed, "error-blowup", i)?;
        let g = hypothesis(i)?;
        let ref_err = dref.err(&g)?;
        let excess = match filtered_distribution(dref, &f) {
            Ok((d, _)) => g.dist(&f, &d)? - ref_err,
            Err(Error::ZeroNormalizer) => f64::INFINITY,
            Err(e) => return Err(e),
        };
        tally.record(&[(excess, excess.max(0.0))], deviation);
    }
    let l2 = dref.marginal().l2_norm_sq();
    Ok(tally.finish("error-blowup", n, p, deviation, seed, "1 - exp(-Ω(δ²p²(1-p)²/‖D_x‖²))", biased_exponent(deviation, p, l2)))
}

/// Splits the edges `x -> pi(x)` of a fixed-point-free permutation into at
/// most three classes, none of which touches a point twice. Returns the class
/// of every edge, indexed by its tail.
pub fn three_color_edges(pi: &Permutation) -> Result<Vec<u8>> {
    if !pi.is_fixed_point_free() {
        return Err(Error::Precondition("permutation has a fixed point".into()));
    }
    let size = 1usize << pi.n();
    let mut color = vec![u8::MAX; size];
    for start in 0..size {
        if color[start] != u8::MAX {
            continue;
        }
        let mut cycle = vec![start as u32];
        let mut x = pi.apply_bits(start as u32);
        while x as usize != start {
            cycle.push(x);
            x = pi.apply_bits(x);
        }
        let len = cycle.len();
        for (j, &v) in cycle.iter().enumerate() {
            color[v as usize] = if len % 2 == 1 && j == len - 1 { 2 } else { (j % 2) as u8 };
        }
    }
    Ok(color)
}

/// Confirms that no color class of `colors` touches a point twice.
pub fn verify_coloring(pi: &Permutation, colors: &[u8]) -> Result<()> {
    let size = 1usize << pi.n();
    if colors.len() != size {
        return Err(Error::ContractViolation("coloring has the wrong length".into()));
    }
    let mut seen = vec![[false; 3]; size];
    for x in 0..size {
        let c = colors[x] as usize;
        if c > 2 {
            return Err(Error::ContractViolation(format!("edge from {x} has color {c}")));
        }
        for v in [x, pi.apply_bits(x as u32) as usize] {
            if seen[v][c] {
                return Err(Error::ContractViolation(format!("point {v} repeated in color class {c}")));
            }
            seen[v][c] = true;
        }
    }
    Ok(())
}

/// Correlation with a random `p`-biased `f` under a fixed distribution:
/// `E[phi f]` against `p E[phi]` and `E[phi f (f∘pi)]` against `p² E[phi]`.
pub fn check_type12(
    d_star: &Distribution,
    p: f64,
    pi: &Permutation,
    phi: &TestFunction,
    trials: usize,
    deviation: f64,
    seed: u64,
) -> Result<ConcentrationReport> {
    check_trials(trials, deviation)?;
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidParameter(format!("bias {p} outside [0, 1]")));
    }
    let n = d_star.n();
    if pi.n() != n {
        return Err(Error::DimensionMismatch { expected: n, got: pi.n() });
    }
    verify_coloring(pi, &three_color_edges(pi)?)?;
    let w = marginal_weights(d_star);
    let ph = tabulate(phi, n)?;
    let mean_phi: f64 = w.iter().zip(&ph).map(|(a, b)| a * b).sum();
    let (t1, t2) = (p * mean_phi, p * p * mean_phi);
    let image: Vec<usize> = (0..1u32 << n).map(|b| pi.apply_bits(b) as usize).collect();
    let mut tally = Tally::new(&["linear", "pair"]);
    for i in 0..trials {
        let f = random_f(n, p, seed, "type12", i)?;
        let fv: Vec<f64> = (0..1u32 << n).map(|b| f.eval_bits(b) as u8 as f64).collect();
        let (mut e1, mut e2) = (0.0, 0.0);
        for x in 0..fv.len() {
            let wp = w[x] * ph[x] * fv[x];
            e1 += wp;
            e2 += wp * fv[image[x]];
        }
        tally.record(&[(e1, (e1 - t1).abs()), (e2, (e2 - t2).abs())], deviation);
    }
    let l2 = d_star.l2_norm_sq();
    Ok(tally.finish("type12", n, p, deviation, seed, "1 - 6exp(-Ω(ε²/‖D*‖²))", deviation * deviation / l2))
}

/// Statistics of the filtered distribution `D` built from `dref` and a random
/// `p`-biased `f`: `E_D[phi]`, `E_D[phi f]` and `E_D[phi f (f∘pi)]` against
/// `E_ref[phi]`, `E_ref[phi y]` and `p E_ref[phi y]`.
pub fn check_type345(
    dref: &LabeledDistribution,
    pi: &Permutation,
    phi: &TestFunction,
    trials: usize,
    deviation: f64,
    seed: u64,
) -> Result<ConcentrationReport> {
    check_trials(trials, deviation)?;
    let (n, p) = (dref.n(), dref.p_overall());
    if pi.n() != n {
        return Err(Error::DimensionMismatch { expected: n, got: pi.n() });
    }
    verify_coloring(pi, &three_color_edges(pi)?)?;
    let wx = marginal_weights(dref.marginal());
    let ph = tabulate(phi, n)?;
    let t3: f64 = wx.iter().zip(&ph).map(|(a, b)| a * b).sum();
    let t4: f64 = (0..wx.len()).map(|x| wx[x] * ph[x] * dref.y(x as u32)).sum();
    let t5 = p * t4;
    let image: Vec<usize> = (0..1u32 << n).map(|b| pi.apply_bits(b) as usize).collect();
    let mut tally = Tally::new(&["marginal", "label", "pair"]);
    for i in 0..trials {
        let f = random_f(n, p, seed, "type345", i)?;
        let d = match filtered_distribution(dref, &f) {
            Ok((d, _)) => d.to_explicit(),
            Err(Error::ZeroNormalizer) => {
                tally.record(&[(0.0, f64::INFINITY); 3], deviation);
                continue;
            }
            Err(e) => return Err(e),
        };
        let fv: Vec<f64> = (0..1u32 << n).map(|b| f.eval_bits(b) as u8 as f64).collect();
        let (mut e3, mut e4, mut e5) = (0.0, 0.0, 0.0);
        for x in 0..fv.len() {
            let a = d[x] * ph[x];
            e3 += a;
            e4 += a * fv[x];
            e5 += a * fv[x] * fv[image[x]];
        }
        tally.record(&[(e3, (e3 - t3).abs()), (e4, (e4 - t4).abs()), (e5, (e5 - t5).abs())], deviation);
    }
    let l2 = dref.marginal().l2_norm_sq();
    Ok(tally.finish("type345", n, p, deviation, seed, "1 - 8exp(-Ω(ε²p²(1-p)²/‖D_x‖²))", biased_exponent(deviation, p, l2)))
}
