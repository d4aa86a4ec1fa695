use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Limits on membership queries, statistical queries and samples, with the
/// running counts. A `None` limit is unbounded.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QueryBudget {
    pub max_mq: Option<u64>,
    pub max_sq: Option<u64>,
    pub max_samples: Option<u64>,
    #[serde(default)]
    pub mq_used: u64,
    #[serde(default)]
    pub sq_used: u64,
    #[serde(default)]
    pub samples_used: u64,
}

impl QueryBudget {
    pub fn unlimited() -> Self {
        Self::default()
    }

    fn charge(used: &mut u64, limit: Option<u64>, k: u64, kind: &'static str) -> Result<()> {
        if let Some(l) = limit {
            if *used + k > l {
                return Err(Error::BudgetExhausted { kind, limit: l });
            }
        }
        *used += k;
        Ok(())
    }

    pub fn charge_mq(&mut self) -> Result<()> {
        Self::charge(&mut self.mq_used, self.max_mq, 1, "membership query")
    }

    pub fn charge_sq(&mut self) -> Result<()> {
        Self::charge(&mut self.sq_used, self.max_sq, 1, "statistical query")
    }

    pub fn charge_samples(&mut self, k: u64) -> Result<()> {
        Self::charge(&mut self.samples_used, self.max_samples, k, "sample")
    }
}

pub const LOG_CAP: usize = 1_000_000;

/// Ordered query record; keeps the first [`LOG_CAP`] entries, then only counts.
#[derive(Clone, Debug)]
pub struct QueryLog<T> {
    entries: Vec<T>,
    total: u64,
    cap: usize,
}

impl<T> Default for QueryLog<T> {
    fn default() -> Self {
        Self::with_cap(LOG_CAP)
    }
}

impl<T> QueryLog<T> {
    pub fn with_cap(cap: usize) -> Self {
        Self { entries: Vec::new(), total: 0, cap }
    }

    pub fn push(&mut self, entry: T) {
        self.total += 1;
        if self.entries.len() < self.cap {
            self.entries.push(entry);
        }
    }

    pub fn entries(&self) -> &[T] {
        &self.entries
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn is_truncated(&self) -> bool {
        self.total as usize > self.entries.len()
    }
}

impl<T: Serialize> QueryLog<T> {
    /// One JSON object per line.
    pub fn write_json_lines(&self, mut out: impl Write) -> std::io::Result<()> {
        for e in &self.entries {
            serde_json::to_writer(&mut out, e)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }
}
