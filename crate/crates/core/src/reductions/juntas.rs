use rand::RngCore;
use serde::Serialize;

use crate::boolean_core::{full_mask, BitVector, BooleanFunction, Restriction};
use crate::learners::{ConceptClass, JuntaBase, ReferenceTlq, ReferenceTlqParams};
use crate::oracles::ExampleSource;
use crate::{Error, Result};

use super::refutation::{ceil_count, ExampleRefuter, LearnerRefuter, RefutationParams, RefutationVerdict};

/// Examples of `f^{>ℓ}`: the first `ℓ` coordinates of each drawn point are
/// replaced by fresh uniform bits while the label is kept.
pub struct PrefixRandomized<'a> {
    inner: &'a mut dyn ExampleSource,
    prefix: usize,
}

impl<'a> PrefixRandomized<'a> {
    pub fn new(inner: &'a mut dyn ExampleSource, prefix: usize) -> Result<Self> {
        if prefix > inner.n() {
            return Err(Error::InvalidParameter(format!("prefix {prefix} exceeds n = {}", inner.n())));
        }
        Ok(Self { inner, prefix })
    }
}

impl ExampleSource for PrefixRandomized<'_> {
    fn n(&self) -> usize {
        self.inner.n()
    }

    fn draw(&mut self, rng: &mut dyn RngCore) -> Result<(BitVector, bool)> {
        let (x, y) = self.inner.draw(rng)?;
        if self.prefix == 0 {
            return Ok((x, y));
        }
        let m = full_mask(self.prefix);
        let bits = (x.bits() & !m) | (rng.next_u32() & m);
        Ok((BitVector::new(x.n(), bits)?, y))
    }
}

/// Examples consistent with a restriction, projected onto the free
/// coordinates. Gives up after `max_tries` consecutive misses.
pub struct RestrictedSource<'a> {
    inner: &'a mut dyn ExampleSource,
    restriction: Restriction,
    free: Vec<usize>,
    max_tries: usize,
}

impl<'a> RestrictedSource<'a> {
    pub fn new(inner: &'a mut dyn ExampleSource, restriction: Restriction, max_tries: usize) -> Result<Self> {
        if restriction.n() != inner.n() {
            return Err(Error::DimensionMismatch { expected: inner.n(), got: restriction.n() });
        }
        if restriction.num_free() == 0 {
            return Err(Error::InvalidRestriction("no free coordinates left".into()));
        }
        let free = restriction.free_coords();
        Ok(Self { inner, restriction, free, max_tries: max_tries.max(1) })
    }
}

impl ExampleSource for RestrictedSource<'_> {
    fn n(&self) -> usize {
        self.free.len()
    }

    fn draw(&mut self, rng: &mut dyn RngCore) -> Result<(BitVector, bool)> {
        let (mask, vals) = (self.restriction.fixed_mask(), self.restriction.fixed_values());
        for _ in 0..self.max_tries {
            let (x, y) = self.inner.draw(rng)?;
            if x.bits() & mask != vals {
                continue;
            }
            let mut bits = 0u32;
            for (j, &c) in self.free.iter().enumerate() {
                bits |= ((x.bits() >> (c - 1)) & 1) << j;
            }
            return Ok((BitVector::new(self.free.len(), bits)?, y));
        }
        Err(Error::Starved(format!("no example consistent with the restriction in {} draws", self.max_tries)))
    }
}

/// Estimates and the chosen coordinate of one feature-selection call.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FeatureSelection {
    pub coord: usize,
    pub runs_per_level: usize,
    /// Structure frequency on `f^{>ℓ}` for `ℓ = 0..=n`.
    pub structure_freq: Vec<f64>,
    /// `structure_freq[i−1] − structure_freq[i]` for `i = 1..=n`.
    pub drops: Vec<f64>,
    pub mean_estimate: f64,
}

/// Refuter runs per level so each frequency is within `1/(6k)` with
/// probability `1 − δ/(n+1)`.
pub fn feature_select_runs(n: usize, k: usize, delta: f64) -> usize {
    let acc = 1.0 / (6.0 * k as f64);
    ceil_count((2.0 * (n as f64 + 1.0) / delta).ln() / (2.0 * acc * acc))
}

/// Finds a relevant coordinate of a `k`-junta from a refuter by rerandomizing
/// ever longer prefixes and locating the largest drop in the structure
/// frequency. Ties go to the smallest coordinate.
pub fn feature_select(
    refuter: &dyn ExampleRefuter,
    source: &mut dyn ExampleSource,
    k: usize,
    delta: f64,
    rng: &mut dyn RngCore,
) -> Result<FeatureSelection> {
    let n = source.n();
    if refuter.n() != n {
        return Err(Error::DimensionMismatch { expected: refuter.n(), got: n });
    }
    if k == 0 || !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidParameter("need k ≥ 1 and δ in (0,1)".into()));
    }
    let alpha = refuter.alpha();
    let probe = ceil_count((4.0 / delta).ln() * 2.0 / (alpha * alpha));
    let mut ones = 0usize;
    for _ in 0..probe {
        ones += source.draw(rng)?.1 as usize;
    }
    let mean = ones as f64 / probe as f64;
    if mean < alpha / 2.0 || mean > 1.0 - alpha / 2.0 {
        return Err(Error::Precondition(format!("target mean ≈ {mean:.3} outside [{alpha}, {}]", 1.0 - alpha)));
    }
    let runs = feature_select_runs(n, k, delta);
    let mut freq = Vec::with_capacity(n + 1);
    for ell in 0..=n {
        let mut structure = 0usize;
        for _ in 0..runs {
            let mut src = PrefixRandomized::new(source, ell)?;
            if refuter.refute(&mut src, rng)? == RefutationVerdict::Structure {
                structure += 1;
            }
        }
        freq.push(structure as f64 / runs as f64);
    }
    let drops: Vec<f64> = (1..=n).map(|i| freq[i - 1] - freq[i]).collect();
    let (best, gap) = drops.iter().enumerate().fold((0, f64::NEG_INFINITY), |b, (i, &d)| if d > b.1 { (i, d) } else { b });
    if gap < 1.0 / (6.0 * k as f64) {
        return Err(Error::ContractViolation(format!(
            "largest structure-frequency drop {gap:.3} is below 1/(6k) = {:.3}",
            1.0 / (6.0 * k as f64)
        )));
    }
    Ok(FeatureSelection { coord: best + 1, runs_per_level: runs, structure_freq: freq, drops, mean_estimate: mean })
}

/// Decision tree over original coordinates.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum JuntaTree {
    Leaf { value: bool },
    Split { coord: usize, zero: Box<JuntaTree>, one: Box<JuntaTree> },
}

impl JuntaTree {
    pub fn depth(&self) -> usize {
        match self {
            JuntaTree::Leaf { .. } => 0,
            JuntaTree::Split { zero, one, .. } => 1 + zero.depth().max(one.depth()),
        }
    }

    pub fn eval_bits(&self, bits: u32) -> bool {
        match self {
            JuntaTree::Leaf { value } => *value,
            JuntaTree::Split { coord, zero, one } => {
                if bits >> (coord - 1) & 1 == 1 {
                    one.eval_bits(bits)
                } else {
                    zero.eval_bits(bits)
                }
            }
        }
    }

    pub fn to_function(&self, n: usize) -> Result<BooleanFunction> {
        BooleanFunction::from_fn(n, |x| self.eval_bits(x.bits()))
    }
}

/// Builds a refuter for `k`-juntas on `n` coordinates.
pub trait JuntaRefuterFamily {
    fn refuter(&self, n: usize, k: usize) -> Result<Box<dyn ExampleRefuter>>;
}

/// Refuters from [`ReferenceTlq`] over all `k`-juntas, with fixed parameters.
#[derive(Clone, Debug)]
pub struct ReferenceJuntaRefuters {
    pub refutation: RefutationParams,
    pub learner: ReferenceTlqParams,
}

impl JuntaRefuterFamily for ReferenceJuntaRefuters {
    fn refuter(&self, n: usize, k: usize) -> Result<Box<dyn ExampleRefuter>> {
        let class = ConceptClass::Juntas { n, k, base: JuntaBase::All };
        let learner = ReferenceTlq::new(class, self.learner.clone())?;
        Ok(Box::new(LearnerRefuter::new(n, self.refutation.clone(), Box::new(learner))?))
    }
}

/// Knobs of [`learn_junta_via_refutation`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct JuntaLearnParams {
    pub k: usize,
    /// A node becomes a leaf once its restriction is `4ε`-close to constant.
    pub eps: f64,
    pub delta: f64,
    /// Consecutive misses tolerated by the restricted stream.
    pub max_tries: usize,
}

/// Grows a decision tree: each node not `4ε`-close to constant gets the
/// coordinate that feature selection finds on the restricted stream.
pub fn learn_junta_via_refutation(
    family: &dyn JuntaRefuterFamily,
    source: &mut dyn ExampleSource,
    params: &JuntaLearnParams,
    rng: &mut dyn RngCore,
) -> Result<JuntaTree> {
    if !(params.eps > 0.0 && params.eps < 0.125) || !(params.delta > 0.0 && params.delta < 1.0) {
        return Err(Error::InvalidParameter("need ε in (0, 1/8) and δ in (0, 1)".into()));
    }
    let n = source.n();
    let node_delta = params.delta * (-(params.k as f64 + 2.0)).exp2();
    grow(family, source, params, node_delta, Restriction::empty(n)?, rng)
}

fn grow(
    family: &dyn JuntaRefuterFamily,
    source: &mut dyn ExampleSource,
    params: &JuntaLearnParams,
    node_delta: f64,
    restriction: Restriction,
    rng: &mut dyn RngCore,
) -> Result<JuntaTree> {
    let depth = restriction.num_fixed();
    let mean_draws = ceil_count((2.0 / node_delta).ln() / (2.0 * params.eps * params.eps));
    let free = restriction.free_coords();
    let mut ones = 0usize;
    {
        let mut src = restricted(source, &restriction, params.max_tries)?;
        for _ in 0..mean_draws {
            ones += src.draw(rng)?.1 as usize;
        }
    }
    let mean = ones as f64 / mean_draws as f64;
    if mean.min(1.0 - mean) <= 4.0 * params.eps || free.is_empty() {
        return Ok(JuntaTree::Leaf { value: mean >= 0.5 });
    }
    if depth >= params.k {
        return Err(Error::ContractViolation(format!("tree depth would exceed k = {}", params.k)));
    }
    let k_node = params.k - depth;
    let refuter = family.refuter(free.len(), k_node)?;
    let pick = {
        let mut src = restricted(source, &restriction, params.max_tries)?;
        feature_select(refuter.as_ref(), src.as_mut(), k_node, node_delta, rng)?
    };
    let coord = free[pick.coord - 1];
    let zero = grow(family, source, params, node_delta, restriction.extend(coord, false)?, rng)?;
    let one = grow(family, source, params, node_delta, restriction.extend(coord, true)?, rng)?;
    Ok(JuntaTree::Split { coord, zero: Box::new(zero), one: Box::new(one) })
}

/// Unrestricted nodes read the base stream directly.
fn restricted<'a>(
    source: &'a mut dyn ExampleSource,
    restriction: &Restriction,
    max_tries: usize,
) -> Result<Box<dyn ExampleSource + 'a>> {
    if restriction.num_fixed() == 0 {
        Ok(Box::new(Passthrough(source)))
    } else {
        Ok(Box::new(RestrictedSource::new(source, restriction.clone(), max_tries)?))
    }
}

struct Passthrough<'a>(&'a mut dyn ExampleSource);

impl ExampleSource for Passthrough<'_> {
    fn n(&self) -> usize {
        self.0.n()
    }

    fn draw(&mut self, rng: &mut dyn RngCore) -> Result<(BitVector, bool)> {
        self.0.draw(rng)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boolean_core::Distribution;
    use crate::oracles::LabeledDistribution;
    use crate::rng::rng_from_seed;

    #[test]
    fn prefix_source_keeps_labels_and_suffix() {
        let n = 6;
        let g = BooleanFunction::dictator(n, 5).unwrap();
        let mut base = LabeledDistribution::deterministic(Distribution::uniform(n).unwrap(), g.clone()).unwrap();
        let mut src = PrefixRandomized::new(&mut base, 3).unwrap();
        let mut rng = rng_from_seed(1);
        for _ in 0..200 {
            let (x, y) = src.draw(&mut rng).unwrap();
            assert_eq!(g.eval_bits(x.bits()), y);
        }
        assert!(PrefixRandomized::new(&mut base, 7).is_err());
    }

    #[test]
    fn restricted_source_projects() {
        let n = 5;
        let g = BooleanFunction::parity(n, 0b10010).unwrap();
        let mut base = LabeledDistribution::deterministic(Distribution::uniform(n).unwrap(), g.clone()).unwrap();
        let r = Restriction::new(n, &[(2, true), (4, false)]).unwrap();
        let mut src = RestrictedSource::new(&mut base, r.clone(), 1000).unwrap();
        assert_eq!(src.n(), 3);
        let mut rng = rng_from_seed(2);
        for _ in 0..100 {
            let (x, y) = src.draw(&mut rng).unwrap();
            let full = r.lift(&x).unwrap();
            assert_eq!(g.eval_bits(full.bits()), y);
        }
    }

    #[test]
    fn tree_evaluation() {
        let t = JuntaTree::Split {
            coord: 2,
            zero: Box::new(JuntaTree::Leaf { value: false }),
            one: Box::new(JuntaTree::Leaf { value: true }),
        };
        assert_eq!(t.depth(), 1);
        assert_eq!(t.to_function(4).unwrap(), BooleanFunction::dictator(4, 2).unwrap());
    }
}
