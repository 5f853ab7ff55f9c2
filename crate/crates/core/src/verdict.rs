use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

/// Outcome of a test together with the quantities that decided it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub accepted: bool,
    pub statistic: f64,
    pub threshold: f64,
    /// Named diagnostics such as the candidate mixture parameters and the
    /// number of samples used per phase.
    pub details: BTreeMap<String, f64>,
}

impl Verdict {
    /// Accepts iff `statistic ≤ threshold`.
    pub fn from_threshold(statistic: f64, threshold: f64) -> Self {
        Self {
            accepted: statistic <= threshold,
            statistic,
            threshold,
            details: BTreeMap::new(),
        }
    }

    pub fn with_detail(mut self, key: impl Into<String>, value: f64) -> Self {
        self.details.insert(key.into(), value);
        self
    }

    pub fn detail(&self, key: &str) -> Option<f64> {
        self.details.get(key).copied()
    }
}

/// Majority vote over an odd number of verdicts. The returned verdict carries
/// the number of accepting runs as its statistic and the majority line as its
/// threshold, so that `accepted ⇔ rejects ≤ repeats / 2`.
pub fn majority(verdicts: &[Verdict]) -> Verdict {
    let accepts = verdicts.iter().filter(|v| v.accepted).count();
    let rejects = verdicts.len() - accepts;
    let half = (verdicts.len() / 2) as f64;
    let mut out = Verdict::from_threshold(rejects as f64, half)
        .with_detail("accepting_runs", accepts as f64)
        .with_detail("runs", verdicts.len() as f64);
    if let [only] = verdicts {
        out = only.clone();
    }
    out
}
