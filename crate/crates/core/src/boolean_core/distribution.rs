use rand::Rng;
use serde::{Deserialize, Serialize};

use super::bitvec::{check_dim, full_mask, BitVector};
use super::restriction::{Restriction, SubcubeIter};
use crate::{Error, Result};

const MASS_TOL: f64 = 1e-9;
const NORMALIZE_TOL: f64 = 1e-6;

/// Serialized description of a distribution over `{0,1}^n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case", deny_unknown_fields)]
pub enum DistributionSpec {
    Uniform { n: usize },
    Subcube { n: usize, fixed: Vec<(usize, bool)> },
    PointMass { n: usize, x: String },
    Explicit { n: usize, weights: Vec<f64> },
}

#[derive(Clone, Debug, PartialEq)]
pub enum Form {
    Uniform,
    SubcubeUniform(Restriction),
    PointMass(BitVector),
    Explicit { weights: Vec<f64>, cumulative: Vec<f64> },
}

/// A probability mass function over `{0,1}^n`.
#[derive(Clone, Debug, PartialEq)]
pub struct Distribution {
    n: usize,
    form: Form,
}

impl Distribution {
    pub fn uniform(n: usize) -> Result<Self> {
        check_dim(n)?;
        Ok(Self { n, form: Form::Uniform })
    }

    pub fn subcube(r: Restriction) -> Self {
        Self { n: r.n(), form: Form::SubcubeUniform(r) }
    }

    pub fn point_mass(x: BitVector) -> Self {
        Self { n: x.n(), form: Form::PointMass(x) }
    }

    /// Weights of length `2^n`; mass off by at most `1e-6` is renormalized.
    pub fn explicit(n: usize, weights: Vec<f64>) -> Result<Self> {
        check_dim(n)?;
        if weights.len() != 1 << n {
            return Err(Error::InvalidDistribution(format!(
                "expected {} weights, got {}",
                1usize << n,
                weights.len()
            )));
        }
        if let Some(w) = weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
            return Err(Error::InvalidDistribution(format!("weight {w} is not a nonnegative number")));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > NORMALIZE_TOL {
            return Err(Error::InvalidDistribution(format!("total mass {total} is not 1")));
        }
        let weights: Vec<f64> = weights.into_iter().map(|w| w / total).collect();
        let mut acc = 0.0;
        let cumulative = weights
            .iter()
            .map(|w| {
                acc += w;
                acc
            })
            .collect();
        Ok(Self { n, form: Form::Explicit { weights, cumulative } })
    }

    pub fn from_spec(spec: &DistributionSpec) -> Result<Self> {
        match spec {
            DistributionSpec::Uniform { n } => Self::uniform(*n),
            DistributionSpec::Subcube { n, fixed } => Ok(Self::subcube(Restriction::new(*n, fixed)?)),
            DistributionSpec::PointMass { n, x } => {
                let x = BitVector::parse(x)?;
                if x.n() != *n {
                    return Err(Error::DimensionMismatch { expected: *n, got: x.n() });
                }
                Ok(Self::point_mass(x))
            }
            DistributionSpec::Explicit { n, weights } => Self::explicit(*n, weights.clone()),
        }
    }

    pub fn to_spec(&self) -> DistributionSpec {
        match &self.form {
            Form::Uniform => DistributionSpec::Uniform { n: self.n },
            Form::SubcubeUniform(r) => DistributionSpec::Subcube { n: self.n, fixed: r.fixed().to_vec() },
            Form::PointMass(x) => DistributionSpec::PointMass { n: self.n, x: x.to_string() },
            Form::Explicit { weights, .. } => DistributionSpec::Explicit { n: self.n, weights: weights.clone() },
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn form(&self) -> &Form {
        &self.form
    }

    pub fn is_uniform(&self) -> bool {
        matches!(self.form, Form::Uniform)
    }

    pub fn pmf(&self, x: &BitVector) -> f64 {
        if x.n() != self.n {
            return 0.0;
        }
        match &self.form {
            Form::Uniform => (-(self.n as f64)).exp2(),
            Form::SubcubeUniform(r) => {
                if r.contains(x) {
                    (-(r.num_free() as f64)).exp2()
                } else {
                    0.0
                }
            }
            Form::PointMass(x0) => {
                if x0 == x {
                    1.0
                } else {
                    0.0
                }
            }
            Form::Explicit { weights, .. } => weights[x.index()],
        }
    }

    /// `‖D‖₂² = Σ_x D(x)²`.
    pub fn l2_norm_sq(&self) -> f64 {
        match &self.form {
            Form::Uniform => (-(self.n as f64)).exp2(),
            Form::SubcubeUniform(r) => (-(r.num_free() as f64)).exp2(),
            Form::PointMass(_) => 1.0,
            Form::Explicit { weights, .. } => weights.iter().map(|w| w * w).sum(),
        }
    }

    /// Number of points with positive mass.
    pub fn support_size(&self) -> usize {
        match &self.form {
            Form::Uniform => 1 << self.n,
            Form::SubcubeUniform(r) => 1 << r.num_free(),
            Form::PointMass(_) => 1,
            Form::Explicit { weights, .. } => weights.iter().filter(|w| **w > 0.0).count(),
        }
    }

    /// Visits every support point as `(packed bits, mass)`.
    pub fn for_each_support(&self, mut visit: impl FnMut(u32, f64)) {
        match &self.form {
            Form::Uniform => {
                let w = (-(self.n as f64)).exp2();
                for b in 0..=full_mask(self.n) {
                    visit(b, w);
                }
            }
            Form::SubcubeUniform(r) => {
                let w = (-(r.num_free() as f64)).exp2();
                for x in SubcubeIter::new(self.n, r.fixed_mask(), r.fixed_values()) {
                    visit(x.bits(), w);
                }
            }
            Form::PointMass(x) => visit(x.bits(), 1.0),
            Form::Explicit { weights, .. } => {
                for (b, &w) in weights.iter().enumerate() {
                    if w > 0.0 {
                        visit(b as u32, w);
                    }
                }
            }
        }
    }

    /// PMF as a dense vector of length `2^n`.
    pub fn to_explicit(&self) -> Vec<f64> {
        let mut v = vec![0.0; 1 << self.n];
        self.for_each_support(|b, w| v[b as usize] = w);
        v
    }

    pub fn total_mass(&self) -> f64 {
        let mut t = 0.0;
        self.for_each_support(|_, w| t += w);
        t
    }

    pub fn check_mass(&self) -> Result<()> {
        let t = self.total_mass();
        if (t - 1.0).abs() > MASS_TOL {
            return Err(Error::InvalidDistribution(format!("total mass {t}")));
        }
        Ok(())
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> BitVector {
        match &self.form {
            Form::Uniform => BitVector::random(self.n, rng),
            Form::SubcubeUniform(r) => BitVector::from_raw(self.n, r.apply_bits(rng.next_u32() & full_mask(self.n))),
            Form::PointMass(x) => *x,
            Form::Explicit { cumulative, weights } => {
                let u: f64 = rng.gen();
                let i = cumulative.partition_point(|&c| c <= u).min(weights.len() - 1);
                // float slack at the top end can land on a zero-mass tail entry
                let i = if weights[i] > 0.0 { i } else { weights.iter().rposition(|w| *w > 0.0).unwrap_or(i) };
                BitVector::from_raw(self.n, i as u32)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn explicit_l2(d: &Distribution) -> f64 {
        d.to_explicit().iter().map(|w| w * w).sum()
    }

    #[test]
    fn structured_norms_match_explicit_computation() {
        for n in 1..=10 {
            let u = Distribution::uniform(n).unwrap();
            assert_eq!(u.l2_norm_sq(), (-(n as f64)).exp2());
            assert_eq!(u.l2_norm_sq(), explicit_l2(&u));
            let fixed: Vec<(usize, bool)> = (1..=n / 2).map(|c| (c, c % 2 == 0)).collect();
            let s = Distribution::subcube(Restriction::new(n, &fixed).unwrap());
            assert_eq!(s.l2_norm_sq(), (-((n - n / 2) as f64)).exp2());
            assert_eq!(s.l2_norm_sq(), explicit_l2(&s));
            let p = Distribution::point_mass(BitVector::new(n, 0).unwrap());
            assert_eq!(p.l2_norm_sq(), 1.0);
            assert_eq!(p.l2_norm_sq(), explicit_l2(&p));
            for d in [&u, &s, &p] {
                d.check_mass().unwrap();
            }
        }
    }

    #[test]
    fn explicit_normalizes_small_drift_and_rejects_large() {
        let d = Distribution::explicit(1, vec![0.5, 0.5 + 5e-7]).unwrap();
        assert!((d.total_mass() - 1.0).abs() < 1e-12);
        assert!(Distribution::explicit(1, vec![0.5, 0.6]).is_err());
        assert!(Distribution::explicit(1, vec![1.5, -0.5]).is_err());
        assert!(Distribution::explicit(2, vec![1.0]).is_err());
    }

    #[test]
    fn sampling_respects_support() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x0 = BitVector::parse("1011").unwrap();
        let pm = Distribution::point_mass(x0);
        assert!((0..100).all(|_| pm.sample(&mut rng) == x0));
        let r = Restriction::new(6, &[(2, true), (5, false)]).unwrap();
        let s = Distribution::subcube(r.clone());
        assert!((0..1000).all(|_| r.contains(&s.sample(&mut rng))));
        let e = Distribution::explicit(2, vec![0.0, 0.25, 0.0, 0.75]).unwrap();
        let mut hits = [0usize; 4];
        for _ in 0..20000 {
            hits[e.sample(&mut rng).index()] += 1;
        }
        assert_eq!(hits[0] + hits[2], 0);
        assert!((hits[3] as f64 / 20000.0 - 0.75).abs() < 0.02);
    }

    #[test]
    fn spec_round_trip() {
        let d = Distribution::subcube(Restriction::new(5, &[(3, true)]).unwrap());
        let json = serde_json::to_string(&d.to_spec()).unwrap();
        let back: DistributionSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(Distribution::from_spec(&back).unwrap(), d);
        assert!(serde_json::from_str::<DistributionSpec>(r#"{"form":"uniform","n":3,"extra":1}"#).is_err());
    }
}
