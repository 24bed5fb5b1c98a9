use serde::{Deserialize, Serialize};

/// One row of a per-iteration time series.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub k: usize,
    pub success_probability: f64,
    /// Mid-cut entanglement entropy (pure runs) or operator entanglement
    /// (density-operator runs), in bits.
    pub entropy: f64,
    /// Raw trace deviation before renormalization (density-operator runs).
    pub trace_drift: f64,
    /// Cumulative discarded singular-value weight (tensor-network runs).
    pub discarded_weight: f64,
}

impl RunRecord {
    pub fn new(k: usize, success_probability: f64, entropy: f64) -> Self {
        RunRecord { k, success_probability, entropy, trace_drift: 0.0, discarded_weight: 0.0 }
    }
}

/// Per-iteration records for k = 0..=M.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RunTrace {
    pub records: Vec<RunRecord>,
}

impl RunTrace {
    pub fn with_capacity(n: usize) -> Self {
        RunTrace { records: Vec::with_capacity(n) }
    }

    pub fn push(&mut self, rec: RunRecord) {
        debug_assert!(self.records.last().is_none_or(|last| last.k < rec.k));
        self.records.push(rec);
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn last(&self) -> Option<&RunRecord> {
        self.records.last()
    }

    pub fn final_success(&self) -> f64 {
        self.records.last().map_or(f64::NAN, |r| r.success_probability)
    }

    pub fn success_series(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.success_probability).collect()
    }

    pub fn entropy_series(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.entropy).collect()
    }
}
