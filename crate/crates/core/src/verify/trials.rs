use std::collections::BTreeMap;

use serde::Serialize;

use crate::reductions::RefutationVerdict;
use crate::rng::{derive_seed, rng_from_seed, StdRng};
use crate::{Error, Result};

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

/// Smallest trial count accepted by the estimators.
pub const MIN_TRIALS: usize = 30;

/// Wilson score interval for `successes` out of `trials` at normal quantile `z`.
pub fn wilson_interval(successes: usize, trials: usize, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let phat = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (phat + z2 / (2.0 * n)) / denom;
    let half = z / denom * (phat * (1.0 - phat) / n + z2 / (4.0 * n * n)).sqrt();
    let lo = if successes == 0 { 0.0 } else { (center - half).max(0.0) };
    let hi = if successes == trials { 1.0 } else { (center + half).min(1.0) };
    (lo, hi)
}

/// Outcome counts of a seeded Monte-Carlo run and the Wilson interval for the
/// frequency of `target`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrialReport {
    pub suite: String,
    pub trials: usize,
    pub outcomes: BTreeMap<String, usize>,
    pub target: String,
    pub estimate: f64,
    pub lower: f64,
    pub upper: f64,
    pub seed: u64,
}

impl TrialReport {
    pub fn from_counts(suite: &str, seed: u64, target: &str, outcomes: BTreeMap<String, usize>) -> Self {
        let trials = outcomes.values().sum();
        let hits = outcomes.get(target).copied().unwrap_or(0);
        let (lower, upper) = wilson_interval(hits, trials, Z95);
        let estimate = if trials == 0 { 0.0 } else { hits as f64 / trials as f64 };
        TrialReport { suite: suite.into(), trials, outcomes, target: target.into(), estimate, lower, upper, seed }
    }

    pub fn hits(&self) -> usize {
        self.outcomes.get(&self.target).copied().unwrap_or(0)
    }
}

/// Runs `trials` independent trials, trial `i` seeded with
/// `derive_seed(seed, suite, i)`, and returns their results in trial order.
/// Work is split across `threads` scoped workers; the results do not depend
/// on the split.
pub fn run_trials<T, F>(suite: &str, trials: usize, seed: u64, threads: usize, trial: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64, &mut StdRng) -> T + Sync,
{
    let threads = threads.clamp(1, trials.max(1));
    let run = |i: usize| {
        let mut rng = rng_from_seed(derive_seed(seed, suite, i as u64));
        trial(i as u64, &mut rng)
    };
    if threads == 1 {
        return (0..trials).map(run).collect();
    }
    let chunk = trials.div_ceil(threads);
    std::thread::scope(|s| {
        let handles: Vec<_> = (0..trials)
            .step_by(chunk)
            .map(|start| {
                let run = &run;
                s.spawn(move || (start..(start + chunk).min(trials)).map(run).collect::<Vec<_>>())
            })
            .collect();
        handles.into_iter().flat_map(|h| h.join().expect("trial worker panicked")).collect()
    })
}

/// Tallies the labels returned by [`run_trials`] into a [`TrialReport`].
pub fn estimate_outcomes<F>(suite: &str, trials: usize, seed: u64, threads: usize, target: &str, trial: F) -> Result<TrialReport>
where
    F: Fn(u64, &mut StdRng) -> String + Sync,
{
    if trials < MIN_TRIALS {
        return Err(Error::InvalidParameter(format!("need at least {MIN_TRIALS} trials, got {trials}")));
    }
    Ok(tally(suite, seed, target, run_trials(suite, trials, seed, threads, trial)))
}

/// Counts labels into a report.
pub fn tally<S: AsRef<str>>(suite: &str, seed: u64, target: &str, labels: impl IntoIterator<Item = S>) -> TrialReport {
    let mut outcomes = BTreeMap::new();
    for l in labels {
        *outcomes.entry(l.as_ref().to_string()).or_insert(0) += 1;
    }
    TrialReport::from_counts(suite, seed, target, outcomes)
}

/// Label used for trials whose run returned an error.
pub const FAILED: &str = "failed";

/// Frequency with which `trial` returns `target`. Trials that return an
/// error are tallied under [`FAILED`].
pub fn estimate_verdict_prob<F>(
    suite: &str,
    trials: usize,
    seed: u64,
    threads: usize,
    target: RefutationVerdict,
    trial: F,
) -> Result<TrialReport>
where
    F: Fn(u64, &mut StdRng) -> Result<RefutationVerdict> + Sync,
{
    estimate_outcomes(suite, trials, seed, threads, target.label(), |i, rng| match trial(i, rng) {
        Ok(v) => v.label().to_string(),
        Err(_) => FAILED.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn binom_pmf(n: usize, k: usize, p: f64) -> f64 {
        let mut ln = 0.0;
        for i in 0..k {
            ln += ((n - i) as f64).ln() - ((i + 1) as f64).ln();
        }
        (ln + k as f64 * p.ln() + (n - k) as f64 * (1.0 - p).ln()).exp()
    }

    // The Wilson interval is the set of p the score test does not reject.
    fn score_bounds(k: usize, n: usize) -> (f64, f64) {
        let phat = k as f64 / n as f64;
        let inside = |p: f64| (phat - p).abs() <= Z95 * (p * (1.0 - p) / n as f64).sqrt();
        let bisect = |mut out: f64, mut inn: f64| {
            for _ in 0..200 {
                let mid = 0.5 * (out + inn);
                if inside(mid) {
                    inn = mid
                } else {
                    out = mid
                }
            }
            inn
        };
        let lo = if k == 0 { 0.0 } else { bisect(0.0, phat) };
        let hi = if k == n { 1.0 } else { bisect(1.0, phat) };
        (lo, hi)
    }

    #[test]
    fn wilson_matches_score_inversion() {
        for n in 1..=50 {
            for k in 0..=n {
                let (lo, hi) = wilson_interval(k, n, Z95);
                let (slo, shi) = score_bounds(k, n);
                assert!((lo - slo).abs() < 1e-9 && (hi - shi).abs() < 1e-9, "n={n} k={k}");
                let phat = k as f64 / n as f64;
                assert!(lo <= phat && phat <= hi);
            }
        }
    }

    #[test]
    fn wilson_coverage_under_exact_binomial() {
        // Exact coverage of the nominal 95% interval stays near nominal for
        // moderate p at every n up to 50.
        for n in 10..=50 {
            for &p in &[0.2, 0.3, 0.5, 0.7, 0.8] {
                let cover: f64 = (0..=n)
                    .filter(|&k| {
                        let (lo, hi) = wilson_interval(k, n, Z95);
                        lo <= p && p <= hi
                    })
                    .map(|k| binom_pmf(n, k, p))
                    .sum();
                assert!(cover >= 0.9, "n={n} p={p} coverage {cover}");
            }
        }
    }

    #[test]
    fn constant_refuter_estimates_one() {
        let r = estimate_verdict_prob("always-noise", 50, 1, 1, RefutationVerdict::Noise, |_, _| Ok(RefutationVerdict::Noise))
            .unwrap();
        assert_eq!(r.estimate, 1.0);
        assert_eq!(r.trials, 50);
        assert!(r.lower > 0.9);
    }

    #[test]
    fn fair_coin_and_thread_independence() {
        let coin = |_: u64, rng: &mut StdRng| {
            Ok(if rng.gen_bool(0.5) { RefutationVerdict::Noise } else { RefutationVerdict::Structure })
        };
        let a = estimate_verdict_prob("coin", 10_000, 9, 1, RefutationVerdict::Noise, coin).unwrap();
        let b = estimate_verdict_prob("coin", 10_000, 9, 4, RefutationVerdict::Noise, coin).unwrap();
        assert_eq!(a, b);
        assert!((0.48..=0.52).contains(&a.estimate));
        assert_eq!(a.outcomes.values().sum::<usize>(), 10_000);
    }

    #[test]
    fn errors_tallied_and_small_runs_rejected() {
        let r = estimate_verdict_prob("err", 30, 0, 2, RefutationVerdict::Noise, |i, _| {
            if i % 3 == 0 {
                Err(Error::ZeroNormalizer)
            } else {
                Ok(RefutationVerdict::Noise)
            }
        })
        .unwrap();
        assert_eq!(r.outcomes[FAILED], 10);
        assert_eq!(r.hits(), 20);
        assert!(estimate_verdict_prob("x", 29, 0, 1, RefutationVerdict::Noise, |_, _| Ok(RefutationVerdict::Noise)).is_err());
    }
}
