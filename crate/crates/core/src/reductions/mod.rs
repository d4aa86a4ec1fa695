//! Executable reductions: refutation from a testable learner, feature
//! selection and junta learning from a refuter, MQ-SQ learners to SQ
//! refuters, and SQ refuters to weak learners.

mod juntas;
mod refutation;
mod sq_refutation;
mod weak;

pub use juntas::{
    feature_select, feature_select_runs, learn_junta_via_refutation, FeatureSelection, JuntaLearnParams,
    JuntaRefuterFamily, JuntaTree, PrefixRandomized, ReferenceJuntaRefuters, RestrictedSource,
};
pub use refutation::{
    biased_refutation, filtered_distribution, tlq_to_agnostic_params, AgnosticReport, ErrorReason, ExampleRefuter,
    LearnerRefuter, RefutationParams, RefutationRun, RefutationVerdict, RegimeReport,
};
pub use sq_refutation::{
    mqsq_to_sq_refuter, AlwaysReject, ConditionReport, JuntaTestableLearner, MqsqRefutationParams, MqsqRefutationRun,
    MqsqRefuter, SqRefuter, SqRefuterDecl,
};
pub use weak::{
    round_classifier, sq_refuter_to_weak_learner, AnsweredQuery, ConstantRefuter, CoordinateRefuter, WeakLearnOutcome,
    WeakLearnParams,
};
