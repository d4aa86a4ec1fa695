//! Fourier analysis on `{0,1}^n` under the `b ↦ 1 − 2b` convention,
//! `χ_S(x) = ∏_{i∈S} (−1)^{x_i}` and `ĝ(S) = E_U[g(x) χ_S(x)]`.

use rand::Rng;

use super::bitvec::{check_coord, check_dim, full_mask, BitVector};
use super::function::BooleanFunction;
use super::restriction::Restriction;
use crate::{Error, Result};

/// Fourier coefficients indexed by subset mask.
#[derive(Clone, Debug, PartialEq)]
pub struct FourierSpectrum {
    n: usize,
    coeffs: Vec<f64>,
}

impl FourierSpectrum {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn coeff(&self, s: u32) -> f64 {
        self.coeffs[s as usize]
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// `(mask, coefficient)` pairs with `|coefficient| > tol`.
    pub fn support(&self, tol: f64) -> Vec<(u32, f64)> {
        self.coeffs.iter().enumerate().filter(|(_, c)| c.abs() > tol).map(|(s, &c)| (s as u32, c)).collect()
    }

    pub fn total_weight(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum()
    }

    /// `Σ_{T : T ∩ J = S} ĝ(T)²` for `J` given as a mask.
    pub fn bucket_weight(&self, s: u32, j: u32) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(t, _)| (*t as u32) & j == s)
            .map(|(_, c)| c * c)
            .sum()
    }
}

/// Unnormalized in-place transform: `a[S] ← Σ_x a[x] χ_S(x)`.
pub fn fwht_in_place(a: &mut [f64]) {
    let len = a.len();
    debug_assert!(len.is_power_of_two());
    let mut h = 1;
    while h < len {
        for block in a.chunks_exact_mut(2 * h) {
            let (lo, hi) = block.split_at_mut(h);
            for (u, v) in lo.iter_mut().zip(hi.iter_mut()) {
                let (s, d) = (*u + *v, *u - *v);
                *u = s;
                *v = d;
            }
        }
        h *= 2;
    }
}

fn dim_of(len: usize) -> Result<usize> {
    if !len.is_power_of_two() {
        return Err(Error::InvalidTable(format!("length {len} is not a power of two")));
    }
    let n = len.trailing_zeros() as usize;
    check_dim(n)?;
    Ok(n)
}

/// Forward transform of a real table of length `2^n`.
pub fn walsh_hadamard(values: &[f64]) -> Result<FourierSpectrum> {
    let n = dim_of(values.len())?;
    let mut coeffs = values.to_vec();
    fwht_in_place(&mut coeffs);
    let scale = (-(n as f64)).exp2();
    coeffs.iter_mut().for_each(|c| *c *= scale);
    Ok(FourierSpectrum { n, coeffs })
}

/// Inverse transform: `g(x) = Σ_S ĝ(S) χ_S(x)`.
pub fn inverse_walsh_hadamard(spec: &FourierSpectrum) -> Vec<f64> {
    let mut v = spec.coeffs.clone();
    fwht_in_place(&mut v);
    v
}

/// Spectrum of the ±1 form of a 0/1 function.
pub fn spectrum(f: &BooleanFunction) -> Result<FourierSpectrum> {
    if !f.is_dense() {
        return Err(Error::NotDense);
    }
    walsh_hadamard(&f.to_pm1())
}

/// `Pr_{x∼U(R)}[f(x) ≠ f(x ⊕ e_i)]`, exact; `R` defaults to the whole cube.
pub fn influence_exact(f: &BooleanFunction, coord: usize, restriction: Option<&Restriction>) -> Result<f64> {
    if !f.is_dense() {
        return Err(Error::NotDense);
    }
    let n = f.n();
    check_coord(coord, n)?;
    let bit = 1u32 << (coord - 1);
    let (fixed_mask, fixed_values) = match restriction {
        Some(r) => {
            if r.n() != n {
                return Err(Error::DimensionMismatch { expected: n, got: r.n() });
            }
            if r.is_fixed(coord) {
                return Err(Error::InvalidRestriction(format!("coordinate {coord} is fixed")));
            }
            (r.fixed_mask(), r.fixed_values())
        }
        None => (0, 0),
    };
    // Sum over pairs {x, x⊕e_i}: enumerate points of the subcube with x_i = 0.
    let free = full_mask(n) & !fixed_mask & !bit;
    let mut flips = 0u64;
    let mut pairs = 0u64;
    let mut cur = 0u32;
    loop {
        let x = fixed_values | cur;
        if f.eval_bits(x) != f.eval_bits(x | bit) {
            flips += 1;
        }
        pairs += 1;
        cur = cur.wrapping_sub(free) & free;
        if cur == 0 {
            break;
        }
    }
    Ok(flips as f64 / pairs as f64)
}

/// `Σ_{S∋i} ĝ(S)²`, which equals the influence of coordinate `i`.
pub fn influence_from_spectrum(spec: &FourierSpectrum, coord: usize) -> Result<f64> {
    check_coord(coord, spec.n)?;
    let bit = 1usize << (coord - 1);
    Ok(spec.coeffs.iter().enumerate().filter(|(s, _)| s & bit != 0).map(|(_, c)| c * c).sum())
}

/// `f(x^{>ℓ})`: the first `ℓ` coordinates are redrawn uniformly on every call.
pub fn prefix_randomized_eval<R: Rng + ?Sized>(
    f: &BooleanFunction,
    ell: usize,
    x: &BitVector,
    rng: &mut R,
) -> Result<bool> {
    if x.n() != f.n() {
        return Err(Error::DimensionMismatch { expected: f.n(), got: x.n() });
    }
    if ell > f.n() {
        return Err(Error::InvalidParameter(format!("prefix length {ell} exceeds n = {}", f.n())));
    }
    Ok(f.eval_bits(prefix_randomize_bits(x.bits(), ell, rng)))
}

#[inline]
pub(crate) fn prefix_randomize_bits<R: Rng + ?Sized>(bits: u32, ell: usize, rng: &mut R) -> u32 {
    if ell == 0 {
        return bits;
    }
    let m = full_mask(ell);
    (bits & !m) | (rng.next_u32() & m)
}
