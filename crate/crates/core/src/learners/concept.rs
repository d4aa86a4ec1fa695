use serde::{Deserialize, Serialize};

use crate::boolean_core::{coords_of, full_mask, BooleanFunction};
use crate::{Error, Result};

/// Finite concept class over `{0,1}^n`.
#[derive(Clone, Debug)]
pub enum ConceptClass {
    /// 0/1 parities `⊕_{i∈S} x_i` with `|S| ≤ k`, by size then mask.
    Parities { n: usize, k: usize },
    /// Functions of at most `k` coordinates.
    Juntas { n: usize, k: usize, base: JuntaBase },
    /// `x ↦ x_i` for `i = 1..n`.
    Dictators { n: usize },
    Explicit { n: usize, members: Vec<BooleanFunction> },
}

/// Which functions a junta class places on each coordinate subset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "base", rename_all = "snake_case")]
pub enum JuntaBase {
    /// Every table on every subset of size `≤ k`.
    All,
    /// Fixed tables of length `2^k`, placed on every ordered `k`-subset in
    /// increasing coordinate order.
    Listed { tables: Vec<Vec<bool>> },
}

/// Serializable description of a [`ConceptClass`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "class", rename_all = "snake_case", deny_unknown_fields)]
pub enum ConceptSpec {
    Parities { k: usize },
    Juntas { k: usize },
    Dictators,
}

impl ConceptClass {
    pub fn from_spec(n: usize, spec: &ConceptSpec) -> Result<Self> {
        let c = match spec {
            ConceptSpec::Parities { k } => ConceptClass::Parities { n, k: *k },
            ConceptSpec::Juntas { k } => ConceptClass::Juntas { n, k: *k, base: JuntaBase::All },
            ConceptSpec::Dictators => ConceptClass::Dictators { n },
        };
        c.validate()?;
        Ok(c)
    }

    pub fn n(&self) -> usize {
        match self {
            ConceptClass::Parities { n, .. }
            | ConceptClass::Juntas { n, .. }
            | ConceptClass::Dictators { n }
            | ConceptClass::Explicit { n, .. } => *n,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n();
        match self {
            ConceptClass::Parities { k, .. } | ConceptClass::Juntas { k, .. } if *k > n => {
                Err(Error::InvalidParameter(format!("arity {k} exceeds dimension {n}")))
            }
            ConceptClass::Juntas { k, base: JuntaBase::Listed { tables }, .. } => {
                if tables.iter().any(|t| t.len() != 1usize << k) {
                    return Err(Error::InvalidParameter("junta base tables must have length 2^k".into()));
                }
                Ok(())
            }
            ConceptClass::Explicit { members, .. } => {
                if members.iter().any(|g| g.n() != n) {
                    return Err(Error::InvalidParameter("class member of the wrong dimension".into()));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    pub fn is_empty(&self) -> bool {
        match self {
            ConceptClass::Explicit { members, .. } => members.is_empty(),
            ConceptClass::Juntas { base: JuntaBase::Listed { tables }, .. } => tables.is_empty(),
            _ => false,
        }
    }

    /// Number of members in enumeration order, counting repeats; saturates.
    pub fn size(&self) -> u128 {
        let n = self.n();
        match self {
            ConceptClass::Parities { k, .. } => subsets_up_to(n, *k).len() as u128,
            ConceptClass::Juntas { k, base: JuntaBase::All, .. } => subsets_up_to(n, *k)
                .iter()
                .map(|s| {
                    let cells = 1u32 << s.count_ones();
                    if cells >= 128 {
                        u128::MAX
                    } else {
                        1u128 << cells
                    }
                })
                .fold(0u128, |a, b| a.saturating_add(b)),
            ConceptClass::Juntas { k, base: JuntaBase::Listed { tables }, .. } => {
                subsets_of_size(n, *k).len() as u128 * tables.len() as u128
            }
            ConceptClass::Dictators { .. } => n as u128,
            ConceptClass::Explicit { members, .. } => members.len() as u128,
        }
    }

    /// All members in enumeration order. Junta classes with every table are
    /// only listed when small.
    pub fn members(&self) -> Result<Vec<BooleanFunction>> {
        let n = self.n();
        match self {
            ConceptClass::Parities { k, .. } => {
                subsets_up_to(n, *k).into_iter().map(|s| BooleanFunction::parity(n, s)).collect()
            }
            ConceptClass::Dictators { .. } => (1..=n).map(|i| BooleanFunction::dictator(n, i)).collect(),
            ConceptClass::Explicit { members, .. } => Ok(members.clone()),
            ConceptClass::Juntas { k, base: JuntaBase::Listed { tables }, .. } => {
                let mut out = Vec::new();
                for s in subsets_of_size(n, *k) {
                    let coords = coords_of(s);
                    for t in tables {
                        out.push(BooleanFunction::junta(n, &coords, t)?);
                    }
                }
                Ok(out)
            }
            ConceptClass::Juntas { k, base: JuntaBase::All, .. } => {
                if self.size() > 1 << 16 {
                    return Err(Error::InvalidParameter("junta class too large to list".into()));
                }
                let mut out = Vec::new();
                for s in subsets_up_to(n, *k) {
                    let coords = coords_of(s);
                    let cells = 1usize << coords.len();
                    for code in 0u64..1 << cells {
                        let table: Vec<bool> = (0..cells).map(|c| code >> c & 1 == 1).collect();
                        out.push(BooleanFunction::junta(n, &coords, &table)?);
                    }
                }
                Ok(out)
            }
        }
    }
}

/// Masks of all subsets of `{1..n}` of size `≤ k`, by size then value.
pub fn subsets_up_to(n: usize, k: usize) -> Vec<u32> {
    (0..=k.min(n)).flat_map(|s| subsets_of_size(n, s)).collect()
}

/// Masks of all subsets of `{1..n}` of size exactly `k`, increasing.
pub fn subsets_of_size(n: usize, k: usize) -> Vec<u32> {
    if k > n {
        return Vec::new();
    }
    if k == 0 {
        return vec![0];
    }
    let limit = full_mask(n);
    let mut out = Vec::new();
    // Gosper's hack.
    let mut s: u32 = (1u32 << k) - 1;
    while s <= limit && s != 0 {
        out.push(s);
        let c = s & s.wrapping_neg();
        let r = s + c;
        if r == 0 || r > limit {
            break;
        }
        s = (((r ^ s) >> 2) / c) | r;
    }
    out
}

/// Learner output: a total function on `{0,1}^n`, or a rejection `⊥`.
#[derive(Clone, Debug)]
pub enum Hypothesis {
    Function(BooleanFunction),
    Reject,
}

impl Hypothesis {
    pub fn is_reject(&self) -> bool {
        matches!(self, Hypothesis::Reject)
    }

    pub fn function(&self) -> Option<&BooleanFunction> {
        match self {
            Hypothesis::Function(h) => Some(h),
            Hypothesis::Reject => None,
        }
    }

    pub fn into_function(self) -> Option<BooleanFunction> {
        match self {
            Hypothesis::Function(h) => Some(h),
            Hypothesis::Reject => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn subset_enumeration() {
        assert_eq!(subsets_of_size(4, 2), vec![0b0011, 0b0101, 0b0110, 0b1001, 0b1010, 0b1100]);
        assert_eq!(subsets_up_to(3, 3).len(), 8);
        assert_eq!(subsets_of_size(24, 24), vec![full_mask(24)]);
        assert_eq!(subsets_of_size(3, 4), Vec::<u32>::new());
    }

    #[test]
    fn class_sizes_match_members() {
        let n = 5;
        for c in [
            ConceptClass::Parities { n, k: 2 },
            ConceptClass::Dictators { n },
            ConceptClass::Juntas { n, k: 1, base: JuntaBase::All },
            ConceptClass::Juntas { n, k: 2, base: JuntaBase::Listed { tables: vec![vec![false, false, false, true]] } },
        ] {
            assert_eq!(c.members().unwrap().len() as u128, c.size());
        }
        assert!(ConceptClass::Parities { n: 3, k: 4 }.validate().is_err());
    }
}
