//! Oracle abstractions: labeled-example streams, membership queries, the
//! five-type MQ-SQ oracle, refutation SQs and correlation SQs. Every oracle
//! counts its calls against a [`QueryBudget`]; answers are shaped by a
//! [`ToleranceMode`] that makes the within-tolerance adversary explicit.

mod budget;
mod example;
mod labeled;
mod mqsq;
mod statistical;
mod tolerance;

pub use budget::{QueryBudget, QueryLog, LOG_CAP};
pub use example::{ExampleOracle, FunctionMembershipOracle, MembershipOracle};
pub use labeled::{ExampleSource, LabelRule, LabelSpec, LabeledDistribution};
pub use mqsq::{brute_force, expectation, DirectMqsqOracle, MqsqLogEntry, MqsqOracle, MqsqQuery, TestFunction};
pub use statistical::{
    exact_refutation_value, CorrelationSqOracle, LabeledSqOracle, LabeledTest, RefutationSqOracle, TargetSqOracle,
};
pub use tolerance::{hoeffding_radius, QueryKind, SignPolicy, ToleranceMode};
