use super::bitvec::{check_coord, check_dim, full_mask, BitVector};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PermutationForm {
    /// `x ↦ x ⊕ δ`.
    XorShift(u32),
    /// Image of each packed point.
    Table(Vec<u32>),
}

/// A fixed-point-free bijection of `{0,1}^n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Permutation {
    n: usize,
    form: PermutationForm,
}

impl Permutation {
    pub fn xor_shift(n: usize, delta: u32) -> Result<Self> {
        check_dim(n)?;
        if delta == 0 {
            return Err(Error::InvalidPermutation("xor shift by zero fixes every point".into()));
        }
        if delta & !full_mask(n) != 0 {
            return Err(Error::StrayBits { n });
        }
        Ok(Self { n, form: PermutationForm::XorShift(delta) })
    }

    /// `x ↦ x ⊕ e_i`.
    pub fn flip(n: usize, coord: usize) -> Result<Self> {
        check_coord(coord, n)?;
        Self::xor_shift(n, 1 << (coord - 1))
    }

    pub fn table(n: usize, image: Vec<u32>) -> Result<Self> {
        check_dim(n)?;
        if image.len() != 1 << n {
            return Err(Error::InvalidPermutation(format!("expected {} entries", 1usize << n)));
        }
        let mut seen = vec![false; image.len()];
        for (x, &y) in image.iter().enumerate() {
            if y as usize >= image.len() || seen[y as usize] {
                return Err(Error::InvalidPermutation("not a bijection".into()));
            }
            seen[y as usize] = true;
            if y as usize == x {
                return Err(Error::InvalidPermutation(format!("fixed point at {x}")));
            }
        }
        Ok(Self { n, form: PermutationForm::Table(image) })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn form(&self) -> &PermutationForm {
        &self.form
    }

    #[inline]
    pub fn apply_bits(&self, bits: u32) -> u32 {
        match &self.form {
            PermutationForm::XorShift(d) => bits ^ d,
            PermutationForm::Table(t) => t[bits as usize],
        }
    }

    pub fn apply(&self, x: &BitVector) -> Result<BitVector> {
        if x.n() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, got: x.n() });
        }
        Ok(BitVector::from_raw(self.n, self.apply_bits(x.bits())))
    }

    /// Exhaustive check that no point is fixed.
    pub fn is_fixed_point_free(&self) -> bool {
        (0..=full_mask(self.n)).all(|b| self.apply_bits(b) != b)
    }

    /// Exhaustive bijectivity check.
    pub fn is_bijective(&self) -> bool {
        let mut seen = vec![false; 1 << self.n];
        for b in 0..=full_mask(self.n) {
            let y = self.apply_bits(b) as usize;
            if seen[y] {
                return false;
            }
            seen[y] = true;
        }
        true
    }
}
