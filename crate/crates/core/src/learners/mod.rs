//! Learning algorithms: MQ-SQ learners for influences, juntas and sparse
//! Fourier spectra, an exhaustive agnostic ERM, and a reference testable
//! learner used to drive the refutation reduction.

mod concept;
mod erm;
mod mqsq_learners;
mod reference;

pub use concept::{subsets_of_size, subsets_up_to, ConceptClass, ConceptSpec, Hypothesis, JuntaBase};
pub use erm::{erm_agnostic, ErmFit};
pub use mqsq_learners::{
    influence_mqsq, junta_support, km_coeff_mqsq, km_learn, km_weight_mqsq, learn_junta_mqsq, JuntaMqsqLearner,
    KmLearner, KmOutcome, KmParams, MqsqLearner,
};
pub use reference::{uniformity_tester, ReferenceTlq, ReferenceTlqParams, TesterReport, TlqContract, TlqLearner};
