use crate::boolean_core::{coords_of, BitVector, BooleanFunction};
use crate::{Error, Result};

use super::concept::{subsets_up_to, ConceptClass, JuntaBase};

/// Empirical risk minimizer and its error on the sample.
#[derive(Clone, Debug)]
pub struct ErmFit {
    pub hypothesis: BooleanFunction,
    pub empirical_error: f64,
    /// Position of the winner in the class enumeration.
    pub index: usize,
}

fn empirical_error(h: &BooleanFunction, samples: &[(BitVector, bool)]) -> f64 {
    if samples.is_empty() {
        return 0.0;
    }
    let wrong = samples.iter().filter(|(x, y)| h.eval_bits(x.bits()) != *y).count();
    wrong as f64 / samples.len() as f64
}

/// Argmin of empirical error over `class`; ties go to the earliest member.
///
/// Junta classes with every table are fitted per coordinate subset by
/// majority vote in each cell (ties and empty cells vote 0), which is the
/// earliest minimizer in that subset's table enumeration.
pub fn erm_agnostic(samples: &[(BitVector, bool)], class: &ConceptClass) -> Result<ErmFit> {
    class.validate()?;
    if class.is_empty() {
        return Err(Error::InvalidParameter("empty concept class".into()));
    }
    let n = class.n();
    if let Some((x, _)) = samples.iter().find(|(x, _)| x.n() != n) {
        return Err(Error::DimensionMismatch { expected: n, got: x.n() });
    }
    let m = samples.len().max(1) as f64;
    match class {
        ConceptClass::Parities { k, .. } => {
            let (index, mask, wrong) = best_by(subsets_up_to(n, *k), |s| {
                samples.iter().filter(|(x, y)| ((x.bits() & s).count_ones() % 2 == 1) != *y).count()
            });
            Ok(ErmFit { hypothesis: BooleanFunction::parity(n, mask)?, empirical_error: wrong as f64 / m, index })
        }
        ConceptClass::Dictators { .. } => {
            let (index, coord, wrong) =
                best_by((1..=n).collect(), |i| samples.iter().filter(|(x, y)| x.bit(i) != *y).count());
            Ok(ErmFit { hypothesis: BooleanFunction::dictator(n, coord)?, empirical_error: wrong as f64 / m, index })
        }
        ConceptClass::Juntas { k, base: JuntaBase::All, .. } => {
            let mut best: Option<(usize, Vec<usize>, Vec<bool>)> = None;
            for s in subsets_up_to(n, *k) {
                let coords = coords_of(s);
                let cells = 1usize << coords.len();
                let mut counts = vec![[0usize; 2]; cells];
                for (x, y) in samples {
                    let cell = coords.iter().enumerate().fold(0usize, |a, (j, &c)| a | (x.bit(c) as usize) << j);
                    counts[cell][*y as usize] += 1;
                }
                let wrong: usize = counts.iter().map(|c| c[0].min(c[1])).sum();
                if best.as_ref().is_none_or(|b| wrong < b.0) {
                    let table = counts.iter().map(|c| c[1] > c[0]).collect();
                    best = Some((wrong, coords, table));
                }
            }
            let (wrong, coords, table) = best.expect("class is nonempty");
            let hypothesis = BooleanFunction::junta(n, &coords, &table)?;
            let index = position_in_all_juntas(n, *k, &coords, &table);
            Ok(ErmFit { hypothesis, empirical_error: wrong as f64 / m, index })
        }
        _ => {
            let members = class.members()?;
            let (index, _, _) =
                best_by((0..members.len()).collect(), |i| (empirical_error(&members[i], samples) * m).round() as usize);
            let hypothesis = members[index].clone();
            let e = empirical_error(&hypothesis, samples);
            Ok(ErmFit { hypothesis, empirical_error: e, index })
        }
    }
}

fn best_by<T: Copy>(items: Vec<T>, mut wrong: impl FnMut(T) -> usize) -> (usize, T, usize) {
    let mut best = (0, items[0], usize::MAX);
    for (i, &it) in items.iter().enumerate() {
        let w = wrong(it);
        if w < best.2 {
            best = (i, it, w);
        }
    }
    best
}

fn position_in_all_juntas(n: usize, k: usize, coords: &[usize], table: &[bool]) -> usize {
    let target = crate::boolean_core::mask_of(coords);
    let mut offset = 0usize;
    for s in subsets_up_to(n, k) {
        if s == target {
            let code = table.iter().enumerate().fold(0usize, |a, (c, &b)| a | (b as usize) << c);
            return offset.saturating_add(code);
        }
        offset = offset.saturating_add(1usize.checked_shl(1u32 << s.count_ones()).unwrap_or(usize::MAX));
    }
    offset
}
