//! Suite runners. Every default regime is the calibrated desk-scale setting
//! used by the acceptance suite.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use tlq_core::boolean_core::{
    influence_exact, inverse_walsh_hadamard, spectrum, walsh_hadamard, BooleanFunction, Distribution, Permutation,
    Restriction,
};
use tlq_core::learners::{
    influence_mqsq, km_learn, ConceptClass, KmLearner, KmParams, MqsqLearner, ReferenceTlq, ReferenceTlqParams,
};
use tlq_core::oracles::{
    exact_refutation_value, DirectMqsqOracle, ExampleSource, LabelRule, LabeledDistribution, LabeledSqOracle,
    SignPolicy, TargetSqOracle, TestFunction, ToleranceMode,
};
use tlq_core::reductions::{
    feature_select, filtered_distribution, learn_junta_via_refutation, mqsq_to_sq_refuter, sq_refuter_to_weak_learner,
    CoordinateRefuter, JuntaLearnParams, JuntaRefuterFamily, JuntaTestableLearner, LearnerRefuter,
    MqsqRefutationParams, ReferenceJuntaRefuters, RefutationParams, RegimeReport, SqRefuter, WeakLearnParams,
};
use tlq_core::rng::{derive_seed, rng_from_seed, split, StdRng};
use tlq_core::verify::{
    check_error_blowup, check_normalizer, check_type12, check_type345, lower_bound_from_dimension, run_trials,
    sq_dimension_by_enumeration, sq_dimension_of, tally, ConcentrationReport, LearnerDecl, LowerBoundReport,
    SqDimMode, TrialReport,
};
use tlq_core::{Error, Result};

use crate::record::{Check, Row};

/// Outcome label for trial errors.
const FAILED: &str = "failed";

fn verdict_or_failed(r: Result<tlq_core::reductions::RefutationVerdict>) -> String {
    match r {
        Ok(v) => v.label().to_string(),
        Err(_) => FAILED.to_string(),
    }
}

fn bool_label(ok: bool, yes: &str, no: &str) -> String {
    if ok { yes } else { no }.to_string()
}

fn report_rows(rows: &mut Vec<Row>, prefix: &str, r: &TrialReport) {
    rows.push(Row::new(&format!("{prefix}.trials"), r.trials as f64));
    rows.push(Row::new(&format!("{prefix}.estimate"), r.estimate));
    rows.push(Row::new(&format!("{prefix}.wilson_lower"), r.lower));
    rows.push(Row::new(&format!("{prefix}.wilson_upper"), r.upper));
    for (label, count) in &r.outcomes {
        rows.push(Row::new(&format!("{prefix}.count.{label}"), *count as f64));
    }
}

/// Random function on `k` distinct random coordinates, every one of them
/// relevant, with mean in `[lo, hi]` under the uniform marginal.
fn planted_junta(n: usize, k: usize, lo: f64, hi: f64, rng: &mut StdRng) -> Result<(BooleanFunction, Vec<usize>)> {
    let mut coords: Vec<usize> = (1..=n).collect();
    coords.shuffle(rng);
    coords.truncate(k);
    coords.sort_unstable();
    for _ in 0..10_000 {
        let table: Vec<bool> = (0..1usize << k).map(|_| rng.gen_bool(0.5)).collect();
        let g = BooleanFunction::junta(n, &coords, &table)?;
        let mean = table.iter().filter(|&&b| b).count() as f64 / table.len() as f64;
        if mean < lo || mean > hi {
            continue;
        }
        let mut all_relevant = true;
        for &c in &coords {
            all_relevant &= influence_exact(&g, c, None)? > 0.0;
        }
        if all_relevant {
            return Ok((g, coords));
        }
    }
    Err(Error::InvalidParameter(format!("no {k}-junta with every coordinate relevant and mean in [{lo}, {hi}]")))
}

// ---------------------------------------------------------------- fourier

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FourierRegime {
    pub n_min: usize,
    pub n_max: usize,
    pub functions_per_n: usize,
}

impl Default for FourierRegime {
    fn default() -> Self {
        Self { n_min: 4, n_max: 14, functions_per_n: 100 }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct FourierResult {
    pub regime: FourierRegime,
    pub functions: usize,
    pub max_round_trip_error: f64,
    pub max_parseval_error: f64,
}

pub fn run_fourier(r: &FourierRegime, seed: u64) -> Result<FourierResult> {
    let mut round = 0.0f64;
    let mut parseval = 0.0f64;
    let mut functions = 0;
    for n in r.n_min..=r.n_max {
        let per_n = run_trials(&format!("fourier-{n}"), r.functions_per_n, seed, 1, |_, rng| -> Result<(f64, f64)> {
            let f = BooleanFunction::random_dense(n, rng.gen_range(0.05..0.95), rng)?;
            let v = f.to_pm1();
            let spec = walsh_hadamard(&v)?;
            let back = inverse_walsh_hadamard(&spec);
            let rt = v.iter().zip(&back).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            Ok((rt, (spec.total_weight() - 1.0).abs()))
        });
        for res in per_n {
            let (rt, pe) = res?;
            round = round.max(rt);
            parseval = parseval.max(pe);
            functions += 1;
        }
    }
    Ok(FourierResult { regime: r.clone(), functions, max_round_trip_error: round, max_parseval_error: parseval })
}

impl FourierResult {
    pub fn rows(&self) -> Vec<Row> {
        vec![
            Row::new("functions", self.functions as f64),
            Row::new("max_round_trip_error", self.max_round_trip_error),
            Row::new("max_parseval_error", self.max_parseval_error),
        ]
    }

    pub fn checks(&self) -> Vec<Check> {
        vec![
            Check::at_most("round_trip", self.max_round_trip_error, 1e-12),
            Check::at_most("parseval", self.max_parseval_error, 1e-9),
        ]
    }
}

// ---------------------------------------------------------------- influence

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InfluenceRegime {
    pub n_min: usize,
    pub n_max: usize,
    pub tau: f64,
    pub triples: usize,
}

impl Default for InfluenceRegime {
    fn default() -> Self {
        Self { n_min: 4, n_max: 12, tau: 0.01, triples: 500 }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct InfluenceResult {
    pub regime: InfluenceRegime,
    pub triples: usize,
    pub max_abs_error: f64,
    pub bound: f64,
    pub violations: usize,
}

pub fn run_influence(r: &InfluenceRegime, seed: u64) -> Result<InfluenceResult> {
    let errs = run_trials("influence", r.triples, seed, 1, |i, rng| -> Result<f64> {
        let n = rng.gen_range(r.n_min..=r.n_max);
        let f = BooleanFunction::random_dense(n, rng.gen_range(0.1..0.9), rng)?;
        let coord = rng.gen_range(1..=n);
        let mut fixed = Vec::new();
        for c in (1..=n).filter(|&c| c != coord) {
            if rng.gen_bool(0.3) {
                fixed.push((c, rng.gen_bool(0.5)));
            }
        }
        let restriction = Restriction::new(n, &fixed)?;
        let policy = match i % 4 {
            0 => SignPolicy::Plus,
            1 => SignPolicy::Minus,
            2 => SignPolicy::inflate_influence(),
            _ => SignPolicy::deflate_influence(),
        };
        let mode = ToleranceMode::AdversarialSign { tau: r.tau, policy };
        let mut oracle = DirectMqsqOracle::new(f.clone(), Distribution::uniform(n)?, mode, split(rng))?;
        let est = influence_mqsq(&mut oracle, coord, Some(&restriction))?;
        Ok((est - influence_exact(&f, coord, Some(&restriction))?).abs())
    });
    let bound = 4.0 * r.tau;
    let mut max_abs_error = 0.0f64;
    let mut violations = 0;
    for e in errs {
        let e = e?;
        max_abs_error = max_abs_error.max(e);
        violations += (e > bound + 1e-12) as usize;
    }
    Ok(InfluenceResult { regime: r.clone(), triples: r.triples, max_abs_error, bound, violations })
}

impl InfluenceResult {
    pub fn rows(&self) -> Vec<Row> {
        vec![
            Row::new("triples", self.triples as f64),
            Row::new("max_abs_error", self.max_abs_error),
            Row::new("bound", self.bound),
            Row::new("violations", self.violations as f64),
        ]
    }

    pub fn checks(&self) -> Vec<Check> {
        vec![Check::at_most("violations", self.violations as f64, 0.0)]
    }
}

// ---------------------------------------------------------------- km

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KmRegime {
    pub n_min: usize,
    pub n_max: usize,
    /// Planted targets are juntas on 1 to `max_k` coordinates, so their
    /// Fourier sparsity is at most `2^max_k`.
    pub max_k: usize,
    pub eps: f64,
    pub targets: usize,
}

impl Default for KmRegime {
    fn default() -> Self {
        Self { n_min: 8, n_max: 12, max_k: 3, eps: 0.1, targets: 50 }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct KmResult {
    pub regime: KmRegime,
    pub targets: usize,
    pub exact: usize,
    pub errors: usize,
    pub max_sparsity: usize,
    pub max_declared_queries: u64,
}

pub fn run_km(r: &KmRegime, seed: u64) -> Result<KmResult> {
    let outcomes = run_trials("km", r.targets, seed, 1, |i, rng| -> Result<(Option<f64>, usize, u64)> {
        let n = rng.gen_range(r.n_min..=r.n_max);
        let k = 1 + (i as usize) % r.max_k;
        let (f, _) = planted_junta(n, k, 0.0, 1.0, rng)?;
        let s = spectrum(&f)?.support(1e-12).len();
        let params = KmParams::new(s, r.eps);
        let policy = match i % 3 {
            0 => SignPolicy::Plus,
            1 => SignPolicy::Minus,
            _ => SignPolicy::inflate_fourier_weight(),
        };
        let u = Distribution::uniform(n)?;
        let mode = ToleranceMode::AdversarialSign { tau: params.tau(), policy };
        let mut oracle = DirectMqsqOracle::new(f.clone(), u.clone(), mode, split(rng))?;
        let declared = KmLearner { params: params.clone() }.declared_queries(n);
        let dist = km_learn(&mut oracle, &params, rng).ok().map(|out| out.hypothesis.dist(&f, &u)).transpose()?;
        Ok((dist, s, declared))
    });
    let mut res =
        KmResult { regime: r.clone(), targets: r.targets, exact: 0, errors: 0, max_sparsity: 0, max_declared_queries: 0 };
    for o in outcomes {
        let (dist, s, declared) = o?;
        res.max_sparsity = res.max_sparsity.max(s);
        res.max_declared_queries = res.max_declared_queries.max(declared);
        match dist {
            Some(d) => res.exact += (d == 0.0) as usize,
            None => res.errors += 1,
        }
    }
    Ok(res)
}

impl KmResult {
    pub fn rows(&self) -> Vec<Row> {
        vec![
            Row::new("targets", self.targets as f64),
            Row::new("exact_recoveries", self.exact as f64),
            Row::new("learner_errors", self.errors as f64),
            Row::new("max_sparsity", self.max_sparsity as f64),
            Row::new("max_declared_queries", self.max_declared_queries as f64),
        ]
    }

    pub fn checks(&self) -> Vec<Check> {
        vec![Check::at_least("exact_recoveries", self.exact as f64, self.targets as f64)]
    }
}

// ---------------------------------------------------------------- refute

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RefuteRegime {
    pub n: usize,
    /// Parity class `{χ_S : |S| ≤ k}`; structure targets have `|S| = k`.
    pub parity_k: usize,
    pub refutation: RefutationParams,
    pub learner: ReferenceTlqParams,
    pub noise_biases: Vec<f64>,
    pub trials: usize,
    pub threads: usize,
}

impl Default for RefuteRegime {
    fn default() -> Self {
        let mut refutation = RefutationParams::new(0.0, 0.03, 1.0, 40, 16);
        refutation.c3 = 0.009;
        refutation.oversample = 1.0;
        let mut learner = ReferenceTlqParams::new(0.03, 40, 16);
        learner.validation_margin = 0.3;
        Self { n: 12, parity_k: 3, refutation, learner, noise_biases: vec![0.5, 0.3, 0.7], trials: 400, threads: 1 }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RefuteResult {
    pub regime: RefuteRegime,
    pub m_prime: usize,
    pub condition: RegimeReport,
    pub structure: TrialReport,
    pub noise: Vec<(f64, TrialReport)>,
}

impl RefuteRegime {
    pub fn validate(&self) -> Result<()> {
        self.refutation.validate()?;
        self.learner.validate()?;
        if self.noise_biases.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::InvalidParameter("noise biases must lie in [0, 1]".into()));
        }
        Ok(())
    }

    fn refuter(&self) -> Result<LearnerRefuter> {
        let class = ConceptClass::Parities { n: self.n, k: self.parity_k };
        let learner = ReferenceTlq::new(class, self.learner.clone())?;
        LearnerRefuter::new(self.n, self.refutation.clone(), Box::new(learner))
    }
}

pub fn run_refute(r: &RefuteRegime, seed: u64) -> Result<RefuteResult> {
    r.validate()?;
    let refuter = r.refuter()?;
    let n = r.n;
    let u = Distribution::uniform(n)?;
    let structure_labels = run_trials("refute-structure", r.trials, seed, r.threads, |_, rng| {
        let mut coords: Vec<usize> = (1..=n).collect();
        coords.shuffle(rng);
        let mask = coords[..r.parity_k].iter().fold(0u32, |m, c| m | 1 << (c - 1));
        let run = BooleanFunction::parity(n, mask)
            .and_then(|g| LabeledDistribution::deterministic(u.clone(), g))
            .and_then(|mut src| refuter.refute_with(&mut src, rng));
        verdict_or_failed(run)
    });
    let structure = tally("refute-structure", seed, "structure", structure_labels);
    let mut noise = Vec::new();
    for &p in &r.noise_biases {
        let suite = format!("refute-noise-{p}");
        let labels = run_trials(&suite, r.trials, seed, r.threads, |_, rng| {
            let run = LabeledDistribution::bernoulli(u.clone(), p).and_then(|mut src| refuter.refute_with(&mut src, rng));
            verdict_or_failed(run)
        });
        noise.push((p, tally(&suite, seed, "noise", labels)));
    }
    Ok(RefuteResult {
        regime: r.clone(),
        m_prime: r.refutation.m_prime(),
        condition: r.refutation.regime(u.l2_norm_sq().sqrt()),
        structure,
        noise,
    })
}

trait RefuteWith {
    fn refute_with(&self, src: &mut dyn ExampleSource, rng: &mut StdRng) -> Result<tlq_core::reductions::RefutationVerdict>;
}

impl RefuteWith for LearnerRefuter {
    fn refute_with(&self, src: &mut dyn ExampleSource, rng: &mut StdRng) -> Result<tlq_core::reductions::RefutationVerdict> {
        Ok(self.run(src, rng)?.verdict)
    }
}

impl RefuteResult {
    pub fn rows(&self) -> Vec<Row> {
        let mut rows = vec![
            Row::new("m_prime", self.m_prime as f64),
            Row::new("eps_condition", self.condition.eps_condition as u8 as f64),
            Row::new("load_condition", self.condition.load_condition as u8 as f64),
        ];
        report_rows(&mut rows, "structure", &self.structure);
        for (p, rep) in &self.noise {
            report_rows(&mut rows, &format!("noise_p{p}"), rep);
        }
        rows
    }

    pub fn checks(&self) -> Vec<Check> {
        let mut checks = vec![Check::at_least("structure_wilson_lower", self.structure.lower, 0.66)];
        for (p, rep) in &self.noise {
            checks.push(Check::at_least(&format!("noise_p{p}_wilson_lower"), rep.lower, 0.66));
        }
        checks
    }
}

// ---------------------------------------------------------------- filtered distribution

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilterRegime {
    pub pair_n: usize,
    pub pairs: usize,
    pub z_n: usize,
    pub z_functions: usize,
}

impl Default for FilterRegime {
    fn default() -> Self {
        Self { pair_n: 8, pairs: 20, z_n: 12, z_functions: 10_000 }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct FilterResult {
    pub regime: FilterRegime,
    pub max_pmf_error: f64,
    pub z_target: f64,
    pub z_mean: f64,
    pub z_gap: f64,
}

pub fn run_filter(r: &FilterRegime, seed: u64) -> Result<FilterResult> {
    let errs = run_trials("filter-noise", r.pairs, seed, 1, |_, rng| -> Result<f64> {
        let n = r.pair_n;
        let w: Vec<f64> = (0..1usize << n).map(|_| rng.gen_range(0.01..1.0)).collect();
        let t: f64 = w.iter().sum();
        let dx = Distribution::explicit(n, w.into_iter().map(|v| v / t).collect())?;
        let p = rng.gen_range(0.05..0.95);
        let dref = LabeledDistribution::bernoulli(dx.clone(), p)?;
        let f = BooleanFunction::random_dense(n, p, rng)?;
        let (d, _) = filtered_distribution(&dref, &f)?;
        Ok(d.to_explicit().iter().zip(dx.to_explicit()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
    });
    let mut max_pmf_error = 0.0f64;
    for e in errs {
        max_pmf_error = max_pmf_error.max(e?);
    }
    // Labels from a fixed random function so Z is genuinely random in f.
    let mut rng = rng_from_seed(derive_seed(seed, "filter-z-labels", 0));
    let g = BooleanFunction::random_dense(r.z_n, 0.5, &mut rng)?;
    let dref = LabeledDistribution::new(Distribution::uniform(r.z_n)?, LabelRule::Deterministic(g))?;
    let rep = check_normalizer(&dref, r.z_functions, 1.0, seed)?;
    let p = rep.p;
    let z_mean = rep.parts[0].mean_value;
    Ok(FilterResult { regime: r.clone(), max_pmf_error, z_target: p * (1.0 - p), z_mean, z_gap: (z_mean - p * (1.0 - p)).abs() })
}

impl FilterResult {
    pub fn rows(&self) -> Vec<Row> {
        vec![
            Row::new("max_pmf_error", self.max_pmf_error),
            Row::new("z_target", self.z_target),
            Row::new("z_mean", self.z_mean),
            Row::new("z_gap", self.z_gap),
        ]
    }

    pub fn checks(&self) -> Vec<Check> {
        vec![Check::at_most("pmf_error", self.max_pmf_error, 1e-12), Check::at_most("z_gap", self.z_gap, 0.01)]
    }
}

// ---------------------------------------------------------------- concentration

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConcentrationRegime {
    pub n: usize,
    pub deviation: f64,
    pub trials: usize,
    /// Permutation `x ↦ x ⊕ shift`.
    pub shift: u32,
    /// Test function `(χ_S + 1)/2`.
    pub character: u32,
    pub max_violation_rate: f64,
}

impl Default for ConcentrationRegime {
    fn default() -> Self {
        Self { n: 14, deviation: 0.05, trials: 1000, shift: 0b1011, character: 0b110, max_violation_rate: 0.02 }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ConcentrationResult {
    pub regime: ConcentrationRegime,
    pub reports: Vec<ConcentrationReport>,
}

pub fn run_concentration(r: &ConcentrationRegime, seed: u64) -> Result<ConcentrationResult> {
    let n = r.n;
    let u = Distribution::uniform(n)?;
    // Labels χ_{1}: exact mean 1/2, so p = 1/2.
    let dref = LabeledDistribution::deterministic(u.clone(), BooleanFunction::parity(n, 1)?)?;
    let pi = Permutation::xor_shift(n, r.shift)?;
    let phi = TestFunction::ShiftedCharacter(r.character);
    let hypotheses = |i: usize| {
        let mut rng = rng_from_seed(derive_seed(seed, "blowup-hypothesis", i as u64));
        let bias = rng.gen_range(0.1..0.9);
        BooleanFunction::random_dense(n, bias, &mut rng)
    };
    let reports = vec![
        check_normalizer(&dref, r.trials, r.deviation, seed)?,
        check_error_blowup(&dref, hypotheses, r.trials, r.deviation, seed)?,
        check_type12(&u, 0.5, &pi, &phi, r.trials, r.deviation, seed)?,
        check_type345(&dref, &pi, &phi, r.trials, r.deviation, seed)?,
    ];
    Ok(ConcentrationResult { regime: r.clone(), reports })
}

impl ConcentrationResult {
    pub fn rows(&self) -> Vec<Row> {
        let mut rows = Vec::new();
        for rep in &self.reports {
            rows.push(Row::new(&format!("{}.violation_rate", rep.suite), rep.violation_rate));
            rows.push(Row::new(&format!("{}.exponent", rep.suite), rep.exponent));
            for part in &rep.parts {
                rows.push(Row::new(&format!("{}.{}.max_deviation", rep.suite, part.name), part.max_deviation));
            }
        }
        rows
    }

    pub fn checks(&self) -> Vec<Check> {
        self.reports
            .iter()
            .map(|rep| Check::at_most(&format!("{}_violation_rate", rep.suite), rep.violation_rate, self.regime.max_violation_rate))
            .collect()
    }
}

// ---------------------------------------------------------------- junta

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct JuntaRegime {
    pub n: usize,
    pub max_k: usize,
    pub refutation: RefutationParams,
    pub learner: ReferenceTlqParams,
    pub select_delta: f64,
    pub select_trials: usize,
    pub tree_eps: f64,
    pub tree_delta: f64,
    pub max_tries: usize,
    pub tree_trials: usize,
    pub mean_low: f64,
    pub mean_high: f64,
    pub threads: usize,
}

impl Default for JuntaRegime {
    fn default() -> Self {
        let mut refutation = RefutationParams::new(0.0, 0.05, 1.0, 48, 16);
        refutation.c1 = 1.5;
        refutation.c2 = 0.35;
        refutation.c3 = 0.02;
        refutation.oversample = 1.5;
        let mut learner = ReferenceTlqParams::new(0.05, 48, 16);
        learner.validation_margin = 0.25;
        Self {
            n: 10,
            max_k: 3,
            refutation,
            learner,
            select_delta: 0.05,
            select_trials: 100,
            tree_eps: 0.02,
            tree_delta: 0.1,
            max_tries: 10_000,
            tree_trials: 50,
            mean_low: 0.2,
            mean_high: 0.8,
            threads: 1,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct JuntaResult {
    pub regime: JuntaRegime,
    pub m_prime: usize,
    pub select: TrialReport,
    pub tree: TrialReport,
}

impl JuntaRegime {
    pub fn validate(&self) -> Result<()> {
        self.refutation.validate()?;
        self.learner.validate()
    }
}

pub fn run_junta(r: &JuntaRegime, seed: u64) -> Result<JuntaResult> {
    r.validate()?;
    let family = ReferenceJuntaRefuters { refutation: r.refutation.clone(), learner: r.learner.clone() };
    let n = r.n;
    let u = Distribution::uniform(n)?;
    let select_labels = run_trials("junta-select", r.select_trials, seed, r.threads, |i, rng| {
        let k = 1 + i as usize % r.max_k;
        let mut run = || -> Result<bool> {
            let (g, coords) = planted_junta(n, k, r.mean_low, r.mean_high, rng)?;
            let refuter = family.refuter(n, k)?;
            let mut src = LabeledDistribution::deterministic(u.clone(), g)?;
            let sel = feature_select(refuter.as_ref(), &mut src, k, r.select_delta, rng)?;
            Ok(coords.contains(&sel.coord))
        };
        match run() {
            Ok(ok) => bool_label(ok, "relevant", "irrelevant"),
            Err(_) => FAILED.into(),
        }
    });
    let tree_labels = run_trials("junta-tree", r.tree_trials, seed, r.threads, |i, rng| {
        let k = 1 + i as usize % r.max_k;
        let mut run = || -> Result<bool> {
            let (g, _) = planted_junta(n, k, r.mean_low, r.mean_high, rng)?;
            let mut src = LabeledDistribution::deterministic(u.clone(), g.clone())?;
            let params = JuntaLearnParams { k, eps: r.tree_eps, delta: r.tree_delta, max_tries: r.max_tries };
            let tree = learn_junta_via_refutation(&family, &mut src, &params, rng)?;
            Ok(tree.to_function(n)?.dist(&g, &u)? == 0.0)
        };
        match run() {
            Ok(ok) => bool_label(ok, "exact", "inexact"),
            Err(_) => FAILED.into(),
        }
    });
    Ok(JuntaResult {
        regime: r.clone(),
        m_prime: r.refutation.m_prime(),
        select: tally("junta-select", seed, "relevant", select_labels),
        tree: tally("junta-tree", seed, "exact", tree_labels),
    })
}

impl JuntaResult {
    pub fn rows(&self) -> Vec<Row> {
        let mut rows = vec![Row::new("m_prime", self.m_prime as f64)];
        report_rows(&mut rows, "select", &self.select);
        report_rows(&mut rows, "tree", &self.tree);
        rows
    }

    pub fn checks(&self) -> Vec<Check> {
        vec![
            Check::at_least("select_relevant_rate", self.select.estimate, 0.95),
            Check::at_least("tree_exact_rate", self.tree.estimate, 0.90),
        ]
    }
}

// ---------------------------------------------------------------- mqsq2sq

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Mqsq2sqRegime {
    pub n: usize,
    pub k: usize,
    pub tau: f64,
    pub c: f64,
    pub eta: f64,
    pub eps: f64,
    pub alpha: f64,
    pub oracle: ToleranceMode,
    pub trials: usize,
    pub threads: usize,
}

impl Default for Mqsq2sqRegime {
    fn default() -> Self {
        Self {
            n: 12,
            k: 2,
            tau: 0.04,
            c: 1.0,
            eta: 0.0,
            eps: 0.03,
            alpha: 0.3,
            oracle: ToleranceMode::sampling_for(0.01, 0.01),
            trials: 200,
            threads: 1,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Mqsq2sqResult {
    pub regime: Mqsq2sqRegime,
    pub conditions: tlq_core::reductions::ConditionReport,
    pub declared_q: u64,
    pub structure: TrialReport,
    pub noise: TrialReport,
    pub max_sq_queries: u64,
}

pub fn run_mqsq2sq(r: &Mqsq2sqRegime, seed: u64) -> Result<Mqsq2sqResult> {
    let n = r.n;
    let learner = JuntaTestableLearner { k: r.k, tau: r.tau };
    let declared_q = learner.declared_queries(n);
    let params = MqsqRefutationParams {
        c: r.c,
        eta: r.eta,
        eps: r.eps,
        alpha: r.alpha,
        marginal_l2_sq: (-(n as f64)).exp2(),
        b: None,
    };
    let refuter = mqsq_to_sq_refuter(Box::new(learner), n, params)?;
    let u = Distribution::uniform(n)?;
    let run_case = |suite: &str, structure: bool| {
        run_trials(suite, r.trials, seed, r.threads, |_, rng| -> (String, u64) {
            let dref = if structure {
                planted_junta(n, r.k, 0.0, 1.0, rng).and_then(|(g, _)| LabeledDistribution::deterministic(u.clone(), g))
            } else {
                LabeledDistribution::bernoulli(u.clone(), 0.5)
            };
            let run = dref
                .and_then(|d| LabeledSqOracle::new(d, r.oracle.clone(), split(rng)))
                .and_then(|mut o| refuter.run_detailed(&mut o, rng));
            match run {
                Ok(run) => (run.verdict.label().to_string(), run.sq_queries),
                Err(_) => (FAILED.to_string(), 0),
            }
        })
    };
    let s = run_case("mqsq2sq-structure", true);
    let z = run_case("mqsq2sq-noise", false);
    let max_sq_queries = s.iter().chain(&z).map(|(_, q)| *q).max().unwrap_or(0);
    Ok(Mqsq2sqResult {
        regime: r.clone(),
        conditions: refuter.conditions().clone(),
        declared_q,
        structure: tally("mqsq2sq-structure", seed, "structure", s.iter().map(|(l, _)| l)),
        noise: tally("mqsq2sq-noise", seed, "noise", z.iter().map(|(l, _)| l)),
        max_sq_queries,
    })
}

impl Mqsq2sqResult {
    pub fn rows(&self) -> Vec<Row> {
        let mut rows = vec![
            Row::new("declared_q", self.declared_q as f64),
            Row::new("max_sq_queries", self.max_sq_queries as f64),
            Row::new("tau_prime", self.conditions.tau_prime),
            Row::new("alpha_required", self.conditions.alpha_required),
            Row::new("b", self.conditions.b),
            Row::new("failure_exponent", self.conditions.failure_exponent),
        ];
        report_rows(&mut rows, "structure", &self.structure);
        report_rows(&mut rows, "noise", &self.noise);
        rows
    }

    pub fn checks(&self) -> Vec<Check> {
        vec![
            Check::at_least("structure_wilson_lower", self.structure.lower, 0.66),
            Check::at_least("noise_wilson_lower", self.noise.lower, 0.66),
            Check::at_most("max_sq_queries", self.max_sq_queries as f64, (self.declared_q + 4) as f64),
        ]
    }
}

// ---------------------------------------------------------------- weaklearn

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WeakRegime {
    pub n: usize,
    pub tau: f64,
    pub alpha: f64,
    /// Advantage `ε`; `τ/8` by default.
    pub eps: f64,
    pub oracle_failure: f64,
    pub trials: usize,
    pub threads: usize,
}

impl Default for WeakRegime {
    fn default() -> Self {
        Self { n: 8, tau: 0.1, alpha: 0.25, eps: 0.0125, oracle_failure: 0.01, trials: 100, threads: 1 }
    }
}

impl WeakRegime {
    pub fn params(&self) -> WeakLearnParams {
        let refuter = CoordinateRefuter { n: self.n, tau: self.tau, alpha: self.alpha };
        WeakLearnParams::for_refuter(&refuter.declared(), self.eps)
    }

    pub fn validate(&self) -> Result<()> {
        self.params().validate()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct WeakResult {
    pub regime: WeakRegime,
    pub params: WeakLearnParams,
    pub success: TrialReport,
    pub max_error: f64,
    pub replayed: usize,
    pub replay_violations: usize,
    pub max_replay_gap: f64,
}

pub fn run_weak(r: &WeakRegime, seed: u64) -> Result<WeakResult> {
    r.validate()?;
    let n = r.n;
    let params = r.params();
    let refuter = CoordinateRefuter { n, tau: r.tau, alpha: r.alpha };
    let mode = ToleranceMode::sampling_for(params.tau_prime, r.oracle_failure);
    let u = Distribution::uniform(n)?;
    type Trial = (String, f64, Vec<f64>);
    let trials = run_trials("weaklearn", r.trials, seed, r.threads, |_, rng| -> Trial {
        let mut run = || -> Result<(f64, Vec<f64>)> {
            let target = BooleanFunction::dictator(n, rng.gen_range(1..=n))?;
            let mut oracle = TargetSqOracle::new(target.clone(), u.clone(), mode.clone(), split(rng))?;
            let out = sq_refuter_to_weak_learner(&refuter, &mut oracle, &u, &params, rng)?;
            let dref = LabeledDistribution::deterministic(u.clone(), target.clone())?;
            let mut gaps = Vec::with_capacity(out.answered.len());
            for a in &out.answered {
                gaps.push((a.answer - exact_refutation_value(&dref, &a.test)?).abs());
            }
            Ok((out.hypothesis.dist(&target, &u)?, gaps))
        };
        match run() {
            Ok((err, gaps)) => (bool_label(err <= 0.5 - params.eps, "weak", "not_weak"), err, gaps),
            Err(_) => (FAILED.into(), 1.0, Vec::new()),
        }
    });
    let mut max_error = 0.0f64;
    let mut replayed = 0;
    let mut replay_violations = 0;
    let mut max_replay_gap = 0.0f64;
    for (_, err, gaps) in &trials {
        max_error = max_error.max(*err);
        for g in gaps {
            replayed += 1;
            replay_violations += (*g > r.tau) as usize;
            max_replay_gap = max_replay_gap.max(*g);
        }
    }
    Ok(WeakResult {
        regime: r.clone(),
        params,
        success: tally("weaklearn", seed, "weak", trials.iter().map(|(l, _, _)| l)),
        max_error,
        replayed,
        replay_violations,
        max_replay_gap,
    })
}

impl WeakResult {
    pub fn rows(&self) -> Vec<Row> {
        let mut rows = vec![
            Row::new("tau_prime", self.params.tau_prime),
            Row::new("max_error", self.max_error),
            Row::new("replayed", self.replayed as f64),
            Row::new("replay_violations", self.replay_violations as f64),
            Row::new("max_replay_gap", self.max_replay_gap),
        ];
        report_rows(&mut rows, "success", &self.success);
        rows
    }

    pub fn checks(&self) -> Vec<Check> {
        vec![
            Check::at_least("weak_rate", self.success.estimate, 2.0 / 3.0),
            Check::at_most("replay_violations", self.replay_violations as f64, 0.0),
        ]
    }
}

// ---------------------------------------------------------------- sqdim

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SqdimRegime {
    pub parity_dims: Vec<usize>,
    pub random_classes: usize,
    pub max_class: usize,
    pub random_n: usize,
    /// Parity class on which a KM declaration is checked against the lower bound.
    pub km_n: usize,
}

impl Default for SqdimRegime {
    fn default() -> Self {
        Self { parity_dims: vec![2, 3, 4], random_classes: 50, max_class: 12, random_n: 4, km_n: 8 }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SqdimResult {
    pub regime: SqdimRegime,
    pub parity: Vec<(usize, usize)>,
    pub random_classes: usize,
    pub agreements: usize,
    pub km_bound: LowerBoundReport,
}

pub fn run_sqdim(r: &SqdimRegime, seed: u64) -> Result<SqdimResult> {
    let mut parity = Vec::new();
    for &n in &r.parity_dims {
        let members = ConceptClass::Parities { n, k: n }.members()?;
        parity.push((n, sq_dimension_of(&members, &Distribution::uniform(n)?, SqDimMode::Exact)?.d));
    }
    let n = r.random_n;
    let u = Distribution::uniform(n)?;
    let agree = run_trials("sqdim-random", r.random_classes, seed, 1, |_, rng| -> Result<bool> {
        let size = rng.gen_range(1..=r.max_class);
        let fs = (0..size)
            .map(|_| {
                if rng.gen_bool(0.6) {
                    BooleanFunction::parity(n, rng.gen_range(0..1u32 << n))
                } else {
                    BooleanFunction::random_dense(n, 0.5, rng)
                }
            })
            .collect::<Result<Vec<_>>>()?;
        let exact = sq_dimension_of(&fs, &u, SqDimMode::Exact)?;
        Ok(exact.exact && exact.d == sq_dimension_by_enumeration(&fs, &u)?)
    });
    let mut agreements = 0;
    for a in agree {
        agreements += a? as usize;
    }
    let km_members = ConceptClass::Parities { n: r.km_n, k: r.km_n }.members()?;
    let uk = Distribution::uniform(r.km_n)?;
    let dim = sq_dimension_of(&km_members, &uk, SqDimMode::Greedy)?;
    let km = KmLearner { params: KmParams::new(1, 0.1) };
    let decl = LearnerDecl {
        q: km.declared_queries(r.km_n) as usize,
        tau: km.declared_tau(),
        max_query_l2_sq: km.declared_max_d_star_l2_sq(r.km_n),
    };
    let km_bound = lower_bound_from_dimension(&decl, dim.d, uk.l2_norm_sq());
    Ok(SqdimResult { regime: r.clone(), parity, random_classes: r.random_classes, agreements, km_bound })
}

impl SqdimResult {
    pub fn rows(&self) -> Vec<Row> {
        let mut rows: Vec<Row> = self.parity.iter().map(|(n, d)| Row::new(&format!("parity_n{n}.d"), *d as f64)).collect();
        rows.push(Row::new("random_classes", self.random_classes as f64));
        rows.push(Row::new("agreements", self.agreements as f64));
        let b = &self.km_bound;
        rows.push(Row::new("km_parities.d", b.d as f64));
        rows.push(Row::new("km_parities.q", b.q as f64));
        rows.push(Row::new("km_parities.q_limit", b.q_limit));
        rows.push(Row::new("km_parities.tau", b.tau));
        rows.push(Row::new("km_parities.tau_limit", b.tau_limit));
        rows.push(Row::new("km_parities.forbidden", b.forbidden as u8 as f64));
        rows
    }

    pub fn checks(&self) -> Vec<Check> {
        let mut checks: Vec<Check> =
            self.parity.iter().map(|(n, d)| Check::equal(&format!("parity_n{n}"), *d as f64, (1usize << n) as f64)).collect();
        checks.push(Check::equal("agreements", self.agreements as f64, self.random_classes as f64));
        checks
    }
}
