use std::collections::HashMap;
use std::sync::RwLock;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use serde::{Deserialize, Serialize};

use super::bitvec::{check_dim, full_mask, BitVector};
use super::distribution::Distribution;
use crate::{Error, Result};

/// Packed truth table with exactly `2^n` entries.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DenseTable {
    n: usize,
    words: Vec<u64>,
}

impl DenseTable {
    fn zeros(n: usize) -> Self {
        let len = ((1usize << n) + 63) / 64;
        Self { n, words: vec![0; len] }
    }

    #[inline]
    pub fn get(&self, idx: usize) -> bool {
        self.words[idx >> 6] >> (idx & 63) & 1 == 1
    }

    #[inline]
    fn set(&mut self, idx: usize, v: bool) {
        let w = &mut self.words[idx >> 6];
        if v {
            *w |= 1 << (idx & 63);
        } else {
            *w &= !(1 << (idx & 63));
        }
    }

    pub fn len(&self) -> usize {
        1 << self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn count_ones(&self) -> u64 {
        self.words.iter().map(|w| w.count_ones() as u64).sum()
    }
}

struct LazyState {
    memo: HashMap<u32, bool>,
    rng: ChaCha8Rng,
}

/// A p-biased random function realized on demand. Each point is drawn once
/// from its own stream and memoized.
pub struct LazyBiased {
    p: f64,
    state: RwLock<LazyState>,
}

impl LazyBiased {
    fn eval(&self, bits: u32) -> bool {
        if let Some(&b) = self.state.read().expect("memo lock").memo.get(&bits) {
            return b;
        }
        let mut st = self.state.write().expect("memo lock");
        if let Some(&b) = st.memo.get(&bits) {
            return b;
        }
        let b = st.rng.gen_bool(self.p);
        st.memo.insert(bits, b);
        b
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn realized(&self) -> usize {
        self.state.read().expect("memo lock").memo.len()
    }
}

impl Clone for LazyBiased {
    fn clone(&self) -> Self {
        let st = self.state.read().expect("memo lock");
        Self { p: self.p, state: RwLock::new(LazyState { memo: st.memo.clone(), rng: st.rng.clone() }) }
    }
}

impl std::fmt::Debug for LazyBiased {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "LazyBiased(p={}, realized={})", self.p, self.realized())
    }
}

#[derive(Clone, Debug)]
pub enum Body {
    Dense(DenseTable),
    Lazy(LazyBiased),
}

/// A `{0,1}`-valued function on `{0,1}^n`.
#[derive(Clone, Debug)]
pub struct BooleanFunction {
    n: usize,
    body: Body,
}

impl PartialEq for BooleanFunction {
    /// Dense functions compare by table; lazy ones never compare equal.
    fn eq(&self, other: &Self) -> bool {
        match (&self.body, &other.body) {
            (Body::Dense(a), Body::Dense(b)) => a == b,
            _ => false,
        }
    }
}

impl BooleanFunction {
    pub fn from_fn(n: usize, f: impl Fn(BitVector) -> bool) -> Result<Self> {
        check_dim(n)?;
        let mut t = DenseTable::zeros(n);
        for idx in 0..(1usize << n) {
            t.set(idx, f(BitVector::from_raw(n, idx as u32)));
        }
        Ok(Self { n, body: Body::Dense(t) })
    }

    pub fn from_bits(n: usize, bits: &[bool]) -> Result<Self> {
        check_dim(n)?;
        if bits.len() != 1 << n {
            return Err(Error::InvalidTable(format!("expected {} entries, got {}", 1usize << n, bits.len())));
        }
        let mut t = DenseTable::zeros(n);
        for (i, &b) in bits.iter().enumerate() {
            t.set(i, b);
        }
        Ok(Self { n, body: Body::Dense(t) })
    }

    pub fn constant(n: usize, value: bool) -> Result<Self> {
        Self::from_fn(n, |_| value)
    }

    /// 0/1 parity (XOR) of the coordinates in `mask`.
    pub fn parity(n: usize, mask: u32) -> Result<Self> {
        if mask & !full_mask(n) != 0 {
            return Err(Error::StrayBits { n });
        }
        Self::from_fn(n, |x| (x.bits() & mask).count_ones() & 1 == 1)
    }

    pub fn dictator(n: usize, coord: usize) -> Result<Self> {
        super::bitvec::check_coord(coord, n)?;
        Self::from_fn(n, |x| x.bit(coord))
    }

    /// AND of the coordinates in `mask` (constant 1 for the empty mask).
    pub fn and(n: usize, mask: u32) -> Result<Self> {
        if mask & !full_mask(n) != 0 {
            return Err(Error::StrayBits { n });
        }
        Self::from_fn(n, |x| x.bits() & mask == mask)
    }

    /// Function of the coordinates `coords` given by a truth table over them;
    /// bit `j` of the table index is the value of `coords[j]`.
    pub fn junta(n: usize, coords: &[usize], table: &[bool]) -> Result<Self> {
        if table.len() != 1 << coords.len() {
            return Err(Error::InvalidTable("junta table length must be 2^k".into()));
        }
        for &c in coords {
            super::bitvec::check_coord(c, n)?;
        }
        Self::from_fn(n, |x| {
            let idx = coords.iter().enumerate().fold(0usize, |a, (j, &c)| a | (x.bit(c) as usize) << j);
            table[idx]
        })
    }

    /// A p-biased random function with its own stream.
    pub fn lazy_biased(n: usize, p: f64, seed: u64) -> Result<Self> {
        check_dim(n)?;
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidParameter(format!("bias {p} outside [0, 1]")));
        }
        let state = LazyState { memo: HashMap::new(), rng: ChaCha8Rng::seed_from_u64(seed) };
        Ok(Self { n, body: Body::Lazy(LazyBiased { p, state: RwLock::new(state) }) })
    }

    /// Fully realized p-biased random table.
    pub fn random_dense<R: Rng + ?Sized>(n: usize, p: f64, rng: &mut R) -> Result<Self> {
        check_dim(n)?;
        let mut t = DenseTable::zeros(n);
        for idx in 0..(1usize << n) {
            t.set(idx, rng.gen_bool(p));
        }
        Ok(Self { n, body: Body::Dense(t) })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn body(&self) -> &Body {
        &self.body
    }

    pub fn is_dense(&self) -> bool {
        matches!(self.body, Body::Dense(_))
    }

    pub fn table(&self) -> Option<&DenseTable> {
        match &self.body {
            Body::Dense(t) => Some(t),
            Body::Lazy(_) => None,
        }
    }

    pub fn eval(&self, x: &BitVector) -> Result<bool> {
        if x.n() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, got: x.n() });
        }
        Ok(self.eval_bits(x.bits()))
    }

    /// Evaluation on a packed point; the caller guarantees `bits < 2^n`.
    #[inline]
    pub fn eval_bits(&self, bits: u32) -> bool {
        match &self.body {
            Body::Dense(t) => t.get(bits as usize),
            Body::Lazy(l) => l.eval(bits),
        }
    }

    /// Realizes every point, turning a lazy function into a dense one.
    pub fn to_dense(&self) -> Self {
        match &self.body {
            Body::Dense(_) => self.clone(),
            Body::Lazy(_) => Self::from_fn(self.n, |x| self.eval_bits(x.bits())).expect("valid dimension"),
        }
    }

    pub fn complement(&self) -> Self {
        Self::from_fn(self.n, |x| !self.eval_bits(x.bits())).expect("valid dimension")
    }

    pub fn xor(&self, other: &Self) -> Result<Self> {
        self.same_dim(other.n)?;
        Self::from_fn(self.n, |x| self.eval_bits(x.bits()) ^ other.eval_bits(x.bits()))
    }

    fn same_dim(&self, n: usize) -> Result<()> {
        if n != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, got: n });
        }
        Ok(())
    }

    /// `E_{x∼D}[f(x)]`, summed exactly over the support of `D`.
    pub fn mean(&self, d: &Distribution) -> Result<f64> {
        self.same_dim(d.n())?;
        let mut acc = 0.0;
        d.for_each_support(|x, w| {
            if self.eval_bits(x) {
                acc += w;
            }
        });
        Ok(acc)
    }

    /// `Pr_{x∼D}[f(x) ≠ g(x)]`.
    pub fn dist(&self, g: &Self, d: &Distribution) -> Result<f64> {
        self.same_dim(g.n)?;
        self.same_dim(d.n())?;
        let mut acc = 0.0;
        d.for_each_support(|x, w| {
            if self.eval_bits(x) != g.eval_bits(x) {
                acc += w;
            }
        });
        Ok(acc)
    }

    /// Values under `b ↦ 1 − 2b`, indexed by point.
    pub fn to_pm1(&self) -> Vec<f64> {
        (0..1u32 << self.n).map(|b| if self.eval_bits(b) { -1.0 } else { 1.0 }).collect()
    }

    /// Hex encoding of the packed table (entry `i` in bit `i mod 8` of byte `i / 8`).
    pub fn to_hex(&self) -> String {
        let dense = self.to_dense();
        let t = dense.table().expect("dense");
        let nbytes = ((1usize << self.n) + 7) / 8;
        let bytes: Vec<u8> = (0..nbytes).map(|i| (t.words[i / 8] >> (8 * (i % 8))) as u8).collect();
        hex::encode(bytes)
    }

    pub fn from_hex(n: usize, s: &str) -> Result<Self> {
        check_dim(n)?;
        let bytes = hex::decode(s).map_err(|e| Error::InvalidTable(e.to_string()))?;
        let nbytes = ((1usize << n) + 7) / 8;
        if bytes.len() != nbytes {
            return Err(Error::InvalidTable(format!("expected {nbytes} bytes, got {}", bytes.len())));
        }
        let mut t = DenseTable::zeros(n);
        for idx in 0..(1usize << n) {
            t.set(idx, bytes[idx / 8] >> (idx % 8) & 1 == 1);
        }
        if n < 3 && bytes[0] >> (1usize << n) != 0 {
            return Err(Error::InvalidTable("bits set past the table end".into()));
        }
        Ok(Self { n, body: Body::Dense(t) })
    }
}

/// Serialized form: `n` header plus hex-packed table.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TruthTable {
    pub n: usize,
    pub hex: String,
}

impl From<&BooleanFunction> for TruthTable {
    fn from(f: &BooleanFunction) -> Self {
        Self { n: f.n(), hex: f.to_hex() }
    }
}

impl TryFrom<&TruthTable> for BooleanFunction {
    type Error = Error;

    fn try_from(t: &TruthTable) -> Result<Self> {
        BooleanFunction::from_hex(t.n, &t.hex)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boolean_core::bitvec::mask_of;

    #[test]
    fn eval_examples() {
        let zero = BooleanFunction::constant(5, false).unwrap();
        assert!(!zero.eval(&BitVector::parse("10110").unwrap()).unwrap());
        let par = BooleanFunction::parity(4, mask_of(&[1, 2])).unwrap();
        assert!(!par.eval(&BitVector::parse("1100").unwrap()).unwrap());
        assert!(par.eval(&BitVector::parse("1000").unwrap()).unwrap());
        assert!(par.eval(&BitVector::parse("110").unwrap()).is_err());
    }

    #[test]
    fn lazy_is_memo_consistent() {
        let f = BooleanFunction::lazy_biased(4, 0.3, 11).unwrap();
        let x = BitVector::parse("0101").unwrap();
        let a = f.eval(&x).unwrap();
        for _ in 0..10 {
            assert_eq!(f.eval(&x).unwrap(), a);
        }
        if let Body::Lazy(l) = f.body() {
            assert_eq!(l.realized(), 1);
        }
        assert!(BooleanFunction::lazy_biased(4, 1.5, 0).is_err());
    }

    #[test]
    fn lazy_concurrent_reads_agree() {
        let f = std::sync::Arc::new(BooleanFunction::lazy_biased(10, 0.5, 3).unwrap());
        let handles: Vec<_> = (0..4)
            .map(|_| {
                let f = f.clone();
                std::thread::spawn(move || (0..1024u32).map(|b| f.eval_bits(b)).collect::<Vec<_>>())
            })
            .collect();
        let outs: Vec<_> = handles.into_iter().map(|h| h.join().unwrap()).collect();
        assert!(outs.windows(2).all(|w| w[0] == w[1]));
    }

    #[test]
    fn mean_and_dist_examples() {
        let u2 = Distribution::uniform(2).unwrap();
        let and = BooleanFunction::and(2, 0b11).unwrap();
        assert_eq!(and.mean(&u2).unwrap(), 0.25);
        let u6 = Distribution::uniform(6).unwrap();
        let p = BooleanFunction::parity(6, 0b101).unwrap();
        assert_eq!(p.mean(&u6).unwrap(), 0.5);
        assert_eq!(p.dist(&p, &u6).unwrap(), 0.0);
        assert_eq!(p.dist(&p.complement(), &u6).unwrap(), 1.0);
        let q = BooleanFunction::parity(6, 0b110).unwrap();
        assert_eq!(p.dist(&q, &u6).unwrap(), 0.5);
        let one = BooleanFunction::constant(6, true).unwrap();
        let pm = Distribution::point_mass(BitVector::parse("101010").unwrap());
        assert_eq!(one.mean(&pm).unwrap(), 1.0);
        assert!(p.dist(&BooleanFunction::constant(5, true).unwrap(), &u6).is_err());
    }

    #[test]
    fn hex_round_trip() {
        for n in 1..=9 {
            let mut rng = ChaCha8Rng::seed_from_u64(n as u64);
            let f = BooleanFunction::random_dense(n, 0.5, &mut rng).unwrap();
            let t = TruthTable::from(&f);
            let g = BooleanFunction::try_from(&t).unwrap();
            assert_eq!(f, g);
        }
        assert!(BooleanFunction::from_hex(3, "0000").is_err());
        assert!(BooleanFunction::from_hex(2, "f0").is_err());
    }

    #[test]
    fn junta_constructor_matches_formula() {
        let f = BooleanFunction::junta(5, &[2, 4], &[false, true, true, false]).unwrap();
        let g = BooleanFunction::parity(5, mask_of(&[2, 4])).unwrap();
        assert_eq!(f, g);
    }
}
