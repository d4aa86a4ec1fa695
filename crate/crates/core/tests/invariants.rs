use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use tlq_core::boolean_core::{
    inverse_walsh_hadamard, walsh_hadamard, BitVector, BooleanFunction, Distribution, Permutation, Restriction,
};
use tlq_core::oracles::{LabeledDistribution, QueryKind, SignPolicy, ToleranceMode};
use tlq_core::reductions::{filtered_distribution, ErrorReason, RefutationParams, RefutationVerdict};
use tlq_core::rng::derive_seed;
use tlq_core::verify::{three_color_edges, verify_coloring, wilson_interval, Z95};

fn weights(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.01f64..1.0, 1 << n).prop_map(|w| {
        let t: f64 = w.iter().sum();
        w.into_iter().map(|v| v / t).collect()
    })
}

/// A permutation without fixed points assembled from random cycles of length
/// at least two.
fn derangement(n: usize, seed: u64) -> Permutation {
    let size = 1usize << n;
    let mut order: Vec<u32> = (0..size as u32).collect();
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut r);
    let mut image = vec![0u32; size];
    let mut start = 0;
    while start < size {
        let rest = size - start;
        let len = if rest <= 3 { rest } else { r.gen_range(2..rest - 1) };
        let len = if rest - len == 1 { len + 1 } else { len };
        for j in 0..len {
            image[order[start + j] as usize] = order[start + (j + 1) % len];
        }
        start += len;
    }
    Permutation::table(n, image).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn transform_round_trip_and_parseval(n in 1usize..=10, seed in any::<u64>()) {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let f = BooleanFunction::random_dense(n, 0.5, &mut r).unwrap();
        let v = f.to_pm1();
        let spec = walsh_hadamard(&v).unwrap();
        let back = inverse_walsh_hadamard(&spec);
        for (a, b) in v.iter().zip(&back) {
            prop_assert!((a - b).abs() <= 1e-12);
        }
        prop_assert!((spec.total_weight() - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn seeds_are_stable_and_spread(master in any::<u64>(), i in 0u64..1000) {
        prop_assert_eq!(derive_seed(master, "suite", i), derive_seed(master, "suite", i));
        prop_assert_ne!(derive_seed(master, "suite", i), derive_seed(master, "suite", i + 1));
        prop_assert_ne!(derive_seed(master, "suite", i), derive_seed(master, "other", i));
    }

    #[test]
    fn restriction_lift_inverts_project(n in 2usize..=10, fixed_bits in any::<u32>(), vals in any::<u32>(), x in any::<u32>()) {
        let mask = fixed_bits & ((1u32 << n) - 1) & !1;
        let fixed: Vec<(usize, bool)> = (1..=n).filter(|i| mask >> (i - 1) & 1 == 1).map(|i| (i, vals >> (i - 1) & 1 == 1)).collect();
        let r = Restriction::new(n, &fixed).unwrap();
        let point = BitVector::new(n, (x & ((1u32 << n) - 1) & !mask) | r.fixed_values()).unwrap();
        prop_assert!(r.contains(&point));
        let y = r.project(&point).unwrap();
        prop_assert_eq!(y.n(), r.num_free());
        prop_assert_eq!(r.lift(&y).unwrap(), point);
    }

    #[test]
    fn wilson_interval_brackets_estimate(trials in 1usize..5000, frac in 0.0f64..=1.0) {
        let k = ((trials as f64) * frac).round() as usize;
        let (lo, hi) = wilson_interval(k, trials, Z95);
        let phat = k as f64 / trials as f64;
        prop_assert!(0.0 <= lo && lo <= phat && phat <= hi && hi <= 1.0);
    }

    #[test]
    fn constant_labels_leave_marginal_unchanged(w in (1usize..=8).prop_flat_map(weights), p in 0.05f64..0.95, seed in any::<u64>()) {
        let n = w.len().trailing_zeros() as usize;
        let dx = Distribution::explicit(n, w).unwrap();
        let dref = LabeledDistribution::bernoulli(dx.clone(), p).unwrap();
        let f = BooleanFunction::random_dense(n, p, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let (d, z) = filtered_distribution(&dref, &f).unwrap();
        prop_assert!((z - p * (1.0 - p)).abs() <= 1e-12);
        for (a, b) in d.to_explicit().iter().zip(dx.to_explicit()) {
            prop_assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn derangements_color_into_three_matchings(n in 1usize..=9, seed in any::<u64>()) {
        let pi = derangement(n, seed);
        prop_assert!(pi.is_fixed_point_free());
        let colors = three_color_edges(&pi).unwrap();
        prop_assert!(verify_coloring(&pi, &colors).is_ok());
    }

    #[test]
    fn adversarial_answers_stay_within_tolerance(exact in 0.0f64..=1.0, tau in 0.0f64..0.2) {
        for policy in [SignPolicy::Plus, SignPolicy::Minus, SignPolicy::inflate_influence()] {
            let mode = ToleranceMode::AdversarialSign { tau, policy };
            for kind in [QueryKind::TypeI, QueryKind::TypeII, QueryKind::TypeIII, QueryKind::TypeIV, QueryKind::TypeV] {
                let a = mode.perturb(exact, kind);
                prop_assert!((a - exact).abs() <= tau + 1e-15);
            }
        }
    }

    #[test]
    fn validity_predicate_matches_formula(eta in 0.0f64..0.6, eps in 0.001f64..0.124, c in 1.0f64..4.0) {
        let ok = RefutationParams::new(eta, eps, c, 10, 4).validate().is_ok();
        prop_assert_eq!(ok, eta < (0.5 - 4.0 * eps) / c);
    }
}

#[test]
fn verdicts_serialize_with_tags() {
    for v in [RefutationVerdict::Noise, RefutationVerdict::Structure, RefutationVerdict::Error(ErrorReason::DuplicateInTest)] {
        let s = serde_json::to_string(&v).unwrap();
        let back: RefutationVerdict = serde_json::from_str(&s).unwrap();
        assert_eq!(back, v);
    }
}
