use serde::{Deserialize, Serialize};

use crate::boolean_core::{BooleanFunction, Distribution};
use crate::learners::ConceptClass;
use crate::Result;

/// Largest class size handled by the exact clique search.
pub const EXACT_LIMIT: usize = 24;

const BAND_SLACK: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SqDimMode {
    Exact,
    Greedy,
}

/// Result of an SQ-dimension computation. When `exact` is false, `d` is only
/// a lower bound.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SqDimension {
    pub d: usize,
    pub exact: bool,
    pub class_size: usize,
}

/// Whether a pairwise disagreement rate fits the band for a set of size `d`:
/// `[(1 - d^-3) / 2, (1 + d^-3) / 2]`.
pub fn in_band(dist: f64, d: usize) -> bool {
    let w = 1.0 / (d as f64).powi(3);
    (dist - 0.5).abs() <= w / 2.0 + BAND_SLACK
}

fn distance_matrix(fs: &[BooleanFunction], d: &Distribution) -> Result<Vec<Vec<f64>>> {
    let k = fs.len();
    let mut m = vec![vec![0.0; k]; k];
    for i in 0..k {
        for j in i + 1..k {
            let v = fs[i].dist(&fs[j], d)?;
            m[i][j] = v;
            m[j][i] = v;
        }
    }
    Ok(m)
}

fn adjacency(dist: &[Vec<f64>], d: usize) -> Vec<u32> {
    let k = dist.len();
    (0..k)
        .map(|i| (0..k).filter(|&j| j != i && in_band(dist[i][j], d)).fold(0u32, |a, j| a | 1 << j))
        .collect()
}

/// Maximum clique size by Bron–Kerbosch with pivoting, stopping once `goal`
/// is reached.
fn max_clique(adj: &[u32], goal: usize) -> usize {
    fn expand(adj: &[u32], size: usize, mut cand: u32, mut excl: u32, best: &mut usize, goal: usize) {
        if cand == 0 && excl == 0 {
            *best = (*best).max(size);
            return;
        }
        if *best >= goal || size + (cand.count_ones() as usize) <= *best {
            return;
        }
        let pivot = (cand | excl).trailing_zeros() as usize;
        let pivot = (0..adj.len())
            .filter(|&u| (cand | excl) >> u & 1 == 1)
            .max_by_key(|&u| (adj[u] & cand).count_ones())
            .unwrap_or(pivot);
        let mut todo = cand & !adj[pivot];
        while todo != 0 {
            let v = todo.trailing_zeros() as usize;
            todo &= todo - 1;
            expand(adj, size + 1, cand & adj[v], excl & adj[v], best, goal);
            cand &= !(1 << v);
            excl |= 1 << v;
        }
    }
    let mut best = 0;
    let all = if adj.len() == 32 { u32::MAX } else { (1u32 << adj.len()) - 1 };
    expand(adj, 0, all, 0, &mut best, goal);
    best
}

fn greedy_clique(dist: &[Vec<f64>], d: usize) -> usize {
    let k = dist.len();
    (0..k)
        .map(|start| {
            let mut chosen = vec![start];
            for j in (0..k).filter(|&j| j != start) {
                if chosen.iter().all(|&i| in_band(dist[i][j], d)) {
                    chosen.push(j);
                }
            }
            chosen.len()
        })
        .max()
        .unwrap_or(0)
}

/// SQ dimension of an explicit list of functions under `d`. Candidate sizes
/// are tried from the largest down; since the band only widens as the size
/// shrinks, the first size met by a clique is the answer. Greedy mode, and
/// exact mode on lists longer than [`EXACT_LIMIT`], report a lower bound.
pub fn sq_dimension_of(fs: &[BooleanFunction], d: &Distribution, mode: SqDimMode) -> Result<SqDimension> {
    let k = fs.len();
    let exact = mode == SqDimMode::Exact && k <= EXACT_LIMIT;
    if k <= 1 {
        return Ok(SqDimension { d: k, exact: true, class_size: k });
    }
    let dist = distance_matrix(fs, d)?;
    let mut found = 1;
    for cand in (2..=k).rev() {
        let size = if exact { max_clique(&adjacency(&dist, cand), cand) } else { greedy_clique(&dist, cand) };
        if size >= cand {
            found = cand;
            break;
        }
    }
    Ok(SqDimension { d: found, exact, class_size: k })
}

/// SQ dimension by checking every subset of `fs`; exponential in the list
/// length and kept as a cross-check for the clique search.
pub fn sq_dimension_by_enumeration(fs: &[BooleanFunction], d: &Distribution) -> Result<usize> {
    let k = fs.len();
    if k > 20 {
        return Err(crate::Error::InvalidParameter(format!("subset enumeration over {k} functions is too large")));
    }
    let dist = distance_matrix(fs, d)?;
    let mut best = k.min(1);
    for mask in 1u32..1 << k {
        let size = mask.count_ones() as usize;
        if size <= best {
            continue;
        }
        let idx: Vec<usize> = (0..k).filter(|&i| mask >> i & 1 == 1).collect();
        if idx.iter().enumerate().all(|(a, &i)| idx[a + 1..].iter().all(|&j| in_band(dist[i][j], size))) {
            best = size;
        }
    }
    Ok(best)
}

pub fn sq_dimension(class: &ConceptClass, d: &Distribution, mode: SqDimMode) -> Result<SqDimension> {
    sq_dimension_of(&class.members()?, d, mode)
}

/// A declared MQ-SQ learner: query count, tolerance and the largest squared
/// norm of any customized query distribution.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LearnerDecl {
    pub q: usize,
    pub tau: f64,
    pub max_query_l2_sq: f64,
}

/// Whether a declared learner falls where the SQ-dimension lower bound rules
/// testable learning out. Asymptotic thresholds are instantiated as
/// `q < d^(1/3) / 10`, `tau > 10 d^(-1/3)` and squared norms `<= 10 d^(-1/3)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LowerBoundReport {
    pub d: usize,
    pub q: usize,
    pub tau: f64,
    pub q_limit: f64,
    pub tau_limit: f64,
    pub norm_limit: f64,
    pub few_queries: bool,
    pub coarse_tolerance: bool,
    pub marginal_norm_small: bool,
    pub query_norm_small: bool,
    pub forbidden: bool,
}

pub fn lower_bound_from_dimension(decl: &LearnerDecl, d: usize, marginal_l2_sq: f64) -> LowerBoundReport {
    let root = (d.max(1) as f64).cbrt();
    let q_limit = root / 10.0;
    let tau_limit = 10.0 / root;
    let norm_limit = 10.0 / root;
    let few_queries = (decl.q as f64) < q_limit;
    let coarse_tolerance = decl.tau > tau_limit;
    let marginal_norm_small = marginal_l2_sq <= norm_limit;
    let query_norm_small = decl.max_query_l2_sq <= norm_limit;
    LowerBoundReport {
        d,
        q: decl.q,
        tau: decl.tau,
        q_limit,
        tau_limit,
        norm_limit,
        few_queries,
        coarse_tolerance,
        marginal_norm_small,
        query_norm_small,
        forbidden: few_queries && coarse_tolerance && marginal_norm_small && query_norm_small,
    }
}

pub fn lower_bound_check(decl: &LearnerDecl, class: &ConceptClass, d: &Distribution, mode: SqDimMode) -> Result<LowerBoundReport> {
    let dim = sq_dimension(class, d, mode)?;
    Ok(lower_bound_from_dimension(decl, dim.d, d.l2_norm_sq()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parity_classes_reach_two_to_the_n() {
        for n in 2..=4 {
            let c = ConceptClass::Parities { n, k: n };
            let r = sq_dimension(&c, &Distribution::uniform(n).unwrap(), SqDimMode::Exact).unwrap();
            assert_eq!(r.d, 1 << n);
            assert!(r.exact);
        }
    }

    #[test]
    fn singleton_and_complement_pair() {
        let u = Distribution::uniform(3).unwrap();
        let f = BooleanFunction::and(3, 0b11).unwrap();
        assert_eq!(sq_dimension_of(&[f.clone()], &u, SqDimMode::Exact).unwrap().d, 1);
        assert_eq!(sq_dimension_of(&[f.clone(), f.complement()], &u, SqDimMode::Exact).unwrap().d, 1);
        assert!(!in_band(1.0, 2));
    }

    #[test]
    fn greedy_is_a_lower_bound() {
        let u = Distribution::uniform(4).unwrap();
        let c = ConceptClass::Parities { n: 4, k: 2 };
        let g = sq_dimension(&c, &u, SqDimMode::Greedy).unwrap();
        let e = sq_dimension(&c, &u, SqDimMode::Exact).unwrap();
        assert!(!g.exact);
        assert!(g.d <= e.d);
    }

    #[test]
    fn lower_bound_thresholds() {
        let decl = LearnerDecl { q: 2, tau: 0.3, max_query_l2_sq: 0.01 };
        let r = lower_bound_from_dimension(&decl, 16, 1.0 / 16.0);
        assert!((r.q_limit - 16f64.cbrt() / 10.0).abs() < 1e-12);
        assert!(!r.few_queries && !r.coarse_tolerance && !r.forbidden);
        let one = lower_bound_from_dimension(&decl, 1, 1.0);
        assert!(!one.forbidden);
        let huge = lower_bound_from_dimension(&LearnerDecl { q: 1, tau: 0.45, max_query_l2_sq: 1e-6 }, 1 << 24, 1e-6);
        assert!(huge.forbidden);
    }
}
