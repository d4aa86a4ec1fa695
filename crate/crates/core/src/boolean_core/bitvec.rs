use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const MAX_DIM: usize = 24;

pub(crate) fn check_dim(n: usize) -> Result<()> {
    if n == 0 || n > MAX_DIM {
        return Err(Error::DimensionOutOfRange(n));
    }
    Ok(())
}

pub(crate) fn check_coord(coord: usize, n: usize) -> Result<()> {
    if coord == 0 || coord > n {
        return Err(Error::CoordinateOutOfRange { coord, n });
    }
    Ok(())
}

/// Mask with the low `n` bits set.
#[inline]
pub fn full_mask(n: usize) -> u32 {
    if n >= 32 {
        u32::MAX
    } else {
        (1u32 << n) - 1
    }
}

/// Bitmask of a list of 1-indexed coordinates.
pub fn mask_of(coords: &[usize]) -> u32 {
    coords.iter().fold(0u32, |m, &c| m | (1u32 << (c - 1)))
}

/// 1-indexed coordinates present in `mask`, ascending.
pub fn coords_of(mask: u32) -> Vec<usize> {
    (0..32).filter(|b| mask >> b & 1 == 1).map(|b| b + 1).collect()
}

/// A point of `{0,1}^n`; coordinate `i` lives in bit `i - 1`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BitVector {
    n: u8,
    bits: u32,
}

impl BitVector {
    pub fn new(n: usize, bits: u32) -> Result<Self> {
        check_dim(n)?;
        if bits & !full_mask(n) != 0 {
            return Err(Error::StrayBits { n });
        }
        Ok(Self { n: n as u8, bits })
    }

    /// Caller guarantees `n` is valid and `bits < 2^n`.
    #[inline]
    pub(crate) fn from_raw(n: usize, bits: u32) -> Self {
        debug_assert!(bits & !full_mask(n) == 0);
        Self { n: n as u8, bits }
    }

    pub fn zeros(n: usize) -> Result<Self> {
        Self::new(n, 0)
    }

    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        Self::from_raw(n, rng.next_u32() & full_mask(n))
    }

    /// Parses a string of `0`/`1` characters, coordinate 1 first.
    pub fn parse(s: &str) -> Result<Self> {
        let n = s.len();
        check_dim(n)?;
        let mut bits = 0u32;
        for (i, ch) in s.chars().enumerate() {
            match ch {
                '0' => {}
                '1' => bits |= 1 << i,
                other => return Err(Error::InvalidParameter(format!("bad bit character {other:?}"))),
            }
        }
        Ok(Self::from_raw(n, bits))
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n as usize
    }

    #[inline]
    pub fn bits(&self) -> u32 {
        self.bits
    }

    #[inline]
    pub fn index(&self) -> usize {
        self.bits as usize
    }

    pub fn get(&self, coord: usize) -> Result<bool> {
        check_coord(coord, self.n())?;
        Ok(self.bits >> (coord - 1) & 1 == 1)
    }

    #[inline]
    pub fn bit(&self, coord: usize) -> bool {
        self.bits >> (coord - 1) & 1 == 1
    }

    pub fn flip(&self, coord: usize) -> Result<Self> {
        check_coord(coord, self.n())?;
        Ok(Self::from_raw(self.n(), self.bits ^ (1 << (coord - 1))))
    }

    pub fn xor(&self, other: &BitVector) -> Result<Self> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch { expected: self.n(), got: other.n() });
        }
        Ok(Self::from_raw(self.n(), self.bits ^ other.bits))
    }

    #[inline]
    pub fn weight(&self) -> u32 {
        self.bits.count_ones()
    }

    /// `χ_S(x) = (-1)^{|S ∩ x|}` for the subset mask `s`.
    #[inline]
    pub fn character(&self, s: u32) -> f64 {
        if (self.bits & s).count_ones() & 1 == 0 {
            1.0
        } else {
            -1.0
        }
    }
}

impl fmt::Display for BitVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 1..=self.n() {
            write!(f, "{}", if self.bit(i) { '1' } else { '0' })?;
        }
        Ok(())
    }
}

impl fmt::Debug for BitVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitVector({self})")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_dimensions_and_stray_bits() {
        assert!(BitVector::new(0, 0).is_err());
        assert!(BitVector::new(25, 0).is_err());
        assert_eq!(BitVector::new(3, 8), Err(Error::StrayBits { n: 3 }));
        assert!(BitVector::new(24, full_mask(24)).is_ok());
    }

    #[test]
    fn parse_and_display_round_trip() {
        let x = BitVector::parse("0101").unwrap();
        assert!(!x.bit(1) && x.bit(2) && !x.bit(3) && x.bit(4));
        assert_eq!(x.bits(), 0b1010);
        assert_eq!(x.to_string(), "0101");
        assert!(BitVector::parse("01a").is_err());
    }

    #[test]
    fn flip_xor_and_coordinate_checks() {
        let x = BitVector::parse("000").unwrap();
        assert_eq!(x.flip(2).unwrap().to_string(), "010");
        assert!(x.flip(0).is_err());
        assert!(x.flip(4).is_err());
        let y = BitVector::parse("0000").unwrap();
        assert!(x.xor(&y).is_err());
    }

    #[test]
    fn characters() {
        let x = BitVector::parse("110").unwrap();
        assert_eq!(x.character(mask_of(&[1, 2])), 1.0);
        assert_eq!(x.character(mask_of(&[1])), -1.0);
        assert_eq!(x.character(0), 1.0);
        assert_eq!(coords_of(mask_of(&[2, 5])), vec![2, 5]);
    }
}
