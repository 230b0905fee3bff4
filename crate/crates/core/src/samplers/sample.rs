use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::frequency::Key;
use crate::func::FreqFn;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SampleScheme {
    Ppswor,
    Priority,
    WithReplacement,
    Advice,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub key: Key,
    pub frequency: f64,
    pub inclusion_probability: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleMeta {
    pub scheme: SampleScheme,
    pub k: usize,
    /// The weighting the sample was drawn by (`w^q` for bottom-k).
    pub weight: FreqFn,
    /// Bottom-k threshold `tau`; `None` when every key was retained or the
    /// scheme has no single threshold.
    pub threshold: Option<f64>,
}

/// A finalized sample: keys with exact frequencies and the inclusion
/// probability used for inverse-probability estimates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedSample {
    pub meta: SampleMeta,
    pub records: Vec<SampleRecord>,
}

impl WeightedSample {
    pub fn new(meta: SampleMeta, records: Vec<SampleRecord>) -> Result<Self> {
        for r in &records {
            let p = r.inclusion_probability;
            if !(p > 0.0 && p <= 1.0) {
                return Err(invalid(format!(
                    "inclusion probability {p} for key {} outside (0, 1]",
                    r.key
                )));
            }
        }
        Ok(WeightedSample { meta, records })
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn get(&self, key: &str) -> Option<&SampleRecord> {
        self.records.iter().find(|r| r.key.as_str() == key)
    }

    pub fn contains(&self, key: &str) -> bool {
        self.get(key).is_some()
    }
}
