use serde::{Deserialize, Serialize};

use super::bitvec::{check_coord, check_dim, full_mask, BitVector};
use crate::{Error, Result};

/// A set of fixed coordinates with assigned bits; the points agreeing with it
/// form a subcube.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Restriction {
    n: usize,
    /// Fixed coordinates, ascending, with their values.
    fixed: Vec<(usize, bool)>,
}

impl Restriction {
    pub fn empty(n: usize) -> Result<Self> {
        check_dim(n)?;
        Ok(Self { n, fixed: Vec::new() })
    }

    pub fn new(n: usize, fixed: &[(usize, bool)]) -> Result<Self> {
        check_dim(n)?;
        let mut v = fixed.to_vec();
        v.sort_by_key(|&(c, _)| c);
        for w in v.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(Error::InvalidRestriction(format!("coordinate {} fixed twice", w[0].0)));
            }
        }
        for &(c, _) in &v {
            check_coord(c, n)?;
        }
        Ok(Self { n, fixed: v })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn fixed(&self) -> &[(usize, bool)] {
        &self.fixed
    }

    pub fn num_fixed(&self) -> usize {
        self.fixed.len()
    }

    pub fn num_free(&self) -> usize {
        self.n - self.fixed.len()
    }

    pub fn fixed_mask(&self) -> u32 {
        self.fixed.iter().fold(0, |m, &(c, _)| m | 1 << (c - 1))
    }

    pub fn fixed_values(&self) -> u32 {
        self.fixed.iter().fold(0, |m, &(c, b)| if b { m | 1 << (c - 1) } else { m })
    }

    pub fn is_fixed(&self, coord: usize) -> bool {
        self.fixed.iter().any(|&(c, _)| c == coord)
    }

    pub fn free_coords(&self) -> Vec<usize> {
        let m = self.fixed_mask();
        (1..=self.n).filter(|c| m >> (c - 1) & 1 == 0).collect()
    }

    pub fn contains(&self, x: &BitVector) -> bool {
        x.n() == self.n && x.bits() & self.fixed_mask() == self.fixed_values()
    }

    /// Restriction with one more fixed coordinate.
    pub fn extend(&self, coord: usize, value: bool) -> Result<Self> {
        if self.is_fixed(coord) {
            return Err(Error::InvalidRestriction(format!("coordinate {coord} already fixed")));
        }
        let mut v = self.fixed.clone();
        v.push((coord, value));
        Self::new(self.n, &v)
    }

    /// Forces the fixed coordinates of `bits` to their assigned values.
    #[inline]
    pub fn apply_bits(&self, bits: u32) -> u32 {
        (bits & !self.fixed_mask()) | self.fixed_values()
    }

    /// Points of the subcube, in increasing order of their free-coordinate pattern.
    pub fn points(&self) -> SubcubeIter {
        SubcubeIter::new(self.n, self.fixed_mask(), self.fixed_values())
    }

    /// Drops fixed coordinates, packing the free ones in ascending order.
    pub fn project(&self, x: &BitVector) -> Result<BitVector> {
        if !self.contains(x) {
            return Err(Error::InvalidRestriction("point outside the subcube".into()));
        }
        let mut bits = 0u32;
        for (j, c) in self.free_coords().into_iter().enumerate() {
            if x.bit(c) {
                bits |= 1 << j;
            }
        }
        BitVector::new(self.num_free(), bits)
    }

    /// Inverse of [`Restriction::project`].
    pub fn lift(&self, y: &BitVector) -> Result<BitVector> {
        if y.n() != self.num_free() {
            return Err(Error::DimensionMismatch { expected: self.num_free(), got: y.n() });
        }
        let mut bits = self.fixed_values();
        for (j, c) in self.free_coords().into_iter().enumerate() {
            if y.bit(j + 1) {
                bits |= 1 << (c - 1);
            }
        }
        BitVector::new(self.n, bits)
    }
}

/// Enumerates a subcube by counting over the free bits (Gosper-style masked
/// increment).
pub struct SubcubeIter {
    n: usize,
    free: u32,
    base: u32,
    cur: u32,
    done: bool,
}

impl SubcubeIter {
    pub(crate) fn new(n: usize, fixed_mask: u32, fixed_values: u32) -> Self {
        Self { n, free: full_mask(n) & !fixed_mask, base: fixed_values, cur: 0, done: false }
    }
}

impl Iterator for SubcubeIter {
    type Item = BitVector;

    fn next(&mut self) -> Option<BitVector> {
        if self.done {
            return None;
        }
        let out = BitVector::from_raw(self.n, self.base | self.cur);
        self.cur = (self.cur.wrapping_sub(self.free)) & self.free;
        if self.cur == 0 {
            self.done = true;
        }
        Some(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validates_coordinates() {
        assert!(Restriction::new(4, &[(1, true), (1, false)]).is_err());
        assert!(Restriction::new(4, &[(5, true)]).is_err());
        assert!(Restriction::new(4, &[(0, true)]).is_err());
    }

    #[test]
    fn subcube_enumeration_and_projection() {
        let r = Restriction::new(4, &[(2, true), (4, false)]).unwrap();
        let pts: Vec<_> = r.points().collect();
        assert_eq!(pts.len(), 4);
        assert!(pts.iter().all(|x| r.contains(x)));
        let mut seen: Vec<u32> = pts.iter().map(|x| x.bits()).collect();
        seen.sort();
        seen.dedup();
        assert_eq!(seen.len(), 4);
        for x in &pts {
            let y = r.project(x).unwrap();
            assert_eq!(r.lift(&y).unwrap(), *x);
        }
        assert_eq!(r.free_coords(), vec![1, 3]);
    }

    #[test]
    fn full_restriction_has_one_point() {
        let r = Restriction::new(2, &[(1, true), (2, false)]).unwrap();
        let pts: Vec<_> = r.points().collect();
        assert_eq!(pts, vec![BitVector::parse("10").unwrap()]);
        assert_eq!(Restriction::empty(3).unwrap().points().count(), 8);
    }
}
