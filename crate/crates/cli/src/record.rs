use serde::Serialize;

/// One emitted number: a named metric of a suite.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Row {
    pub metric: String,
    pub value: f64,
}

impl Row {
    pub fn new(metric: &str, value: f64) -> Self {
        Self { metric: metric.to_string(), value }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    AtMost,
    AtLeast,
    Equal,
}

/// A declared assertion on a measured value.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub measured: f64,
    pub relation: Relation,
    pub threshold: f64,
    pub passed: bool,
}

impl Check {
    pub fn at_most(name: &str, measured: f64, threshold: f64) -> Self {
        Self::new(name, measured, Relation::AtMost, threshold, measured <= threshold)
    }

    pub fn at_least(name: &str, measured: f64, threshold: f64) -> Self {
        Self::new(name, measured, Relation::AtLeast, threshold, measured >= threshold)
    }

    pub fn equal(name: &str, measured: f64, threshold: f64) -> Self {
        Self::new(name, measured, Relation::Equal, threshold, measured == threshold)
    }

    fn new(name: &str, measured: f64, relation: Relation, threshold: f64, passed: bool) -> Self {
        Self { name: name.to_string(), measured, relation, threshold, passed }
    }
}
