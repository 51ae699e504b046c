use crate::error::{CascadeError, Result};
use crate::types::ScoredRecord;

/// Source of ground-truth labels. Every call is one (expensive) oracle invocation.
pub trait Oracle {
    fn label(&mut self, record: &ScoredRecord) -> Result<bool>;
}

impl<F> Oracle for F
where
    F: FnMut(&ScoredRecord) -> Result<bool>,
{
    fn label(&mut self, record: &ScoredRecord) -> Result<bool> {
        self(record)
    }
}

/// Reveals the hidden label stored on each record and counts invocations.
#[derive(Debug, Default, Clone)]
pub struct LabelLookup {
    calls: u64,
}

impl LabelLookup {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn calls(&self) -> u64 {
        self.calls
    }
}

impl Oracle for LabelLookup {
    fn label(&mut self, record: &ScoredRecord) -> Result<bool> {
        self.calls += 1;
        Ok(record.oracle_label)
    }
}

/// Oracle that fails for a given id; handy for exercising error propagation.
#[derive(Debug, Clone)]
pub struct FailingOracle {
    pub fail_on: u64,
}

impl Oracle for FailingOracle {
    fn label(&mut self, record: &ScoredRecord) -> Result<bool> {
        if record.id == self.fail_on {
            Err(CascadeError::OracleMissing(record.id))
        } else {
            Ok(record.oracle_label)
        }
    }
}
