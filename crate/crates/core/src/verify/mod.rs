//! Verification harness: seeded Monte-Carlo verdict estimation with Wilson
//! intervals, empirical tails of the concentration statements behind the
//! filtering reductions, and brute-force SQ dimension.

mod concentration;
mod sqdim;
mod trials;

pub use concentration::{
    check_error_blowup, check_normalizer, check_type12, check_type345, three_color_edges, verify_coloring,
    ConcentrationReport, DeviationPart,
};
pub use sqdim::{
    in_band, lower_bound_check, lower_bound_from_dimension, sq_dimension, sq_dimension_by_enumeration, sq_dimension_of, LearnerDecl,
    LowerBoundReport, SqDimMode, SqDimension, EXACT_LIMIT,
};
pub use trials::{
    estimate_outcomes, estimate_verdict_prob, run_trials, tally, wilson_interval, TrialReport, FAILED, MIN_TRIALS, Z95,
};
