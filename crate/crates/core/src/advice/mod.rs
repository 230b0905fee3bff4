//! Advice oracles and the sample-by-advice sketch.
//!
//! Advice is a per-key prediction `a_x` of the total frequency. The sketch
//! keeps the top keys by advice exactly, samples the rest by `f(a_x)` and
//! uniformly, and yields unbiased estimates whatever the advice quality.

mod sketch;

pub use sketch::{conditional_variance, AdviceEntry, AdviceParams, AdviceSketch, AdviceState};

use std::collections::HashMap;
use std::fmt;
use std::io::BufRead;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::frequency::{FrequencyVector, Key};
use crate::hash::{mix_seed, HashSource};
use crate::io::TsvRecords;

/// Predicted frequencies. Keys without a prediction have advice 0.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AdviceMap {
    predictions: HashMap<Key, f64>,
}

impl AdviceMap {
    pub fn new() -> Self {
        Self::default()
    }

    /// Perfect advice: `a_x = w_x`.
    pub fn from_frequencies(w: &FrequencyVector) -> Self {
        AdviceMap {
            predictions: w.iter().map(|(k, f)| (k.clone(), f)).collect(),
        }
    }

    pub fn from_pairs<K: Into<Key>>(pairs: impl IntoIterator<Item = (K, f64)>) -> Result<Self> {
        let mut map = AdviceMap::new();
        for (k, a) in pairs {
            map.insert(k.into(), a)?;
        }
        Ok(map)
    }

    pub fn insert(&mut self, key: Key, advice: f64) -> Result<()> {
        if !(advice.is_finite() && advice >= 0.0) {
            return Err(invalid(format!(
                "advice for key {key} must be finite and >= 0, got {advice}"
            )));
        }
        self.predictions.insert(key, advice);
        Ok(())
    }

    #[inline]
    pub fn get(&self, key: &str) -> f64 {
        self.predictions.get(key).copied().unwrap_or(0.0)
    }

    pub fn len(&self) -> usize {
        self.predictions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.predictions.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Key, f64)> + '_ {
        self.predictions.iter().map(|(k, a)| (k, *a))
    }

    /// Load `key<TAB>predicted_frequency` lines. A key listed twice is an error.
    pub fn read_tsv<R: BufRead>(reader: R) -> Result<Self> {
        let mut map = AdviceMap::new();
        let mut records = TsvRecords::new(reader);
        while let Some(record) = records.next() {
            let e = record?;
            if map.predictions.insert(e.key.clone(), e.value).is_some() {
                return Err(Error::Parse {
                    line: records.line(),
                    message: format!("duplicate prediction for key {}", e.key),
                });
            }
        }
        Ok(map)
    }

    /// Corrupt the advice with `model`. Each key's perturbation is a pure
    /// function of `(seed, key)`, so shards see consistent advice.
    pub fn with_noise(&self, model: NoiseModel, seed: u64) -> Result<Self> {
        model.validate()?;
        let predictions = self
            .predictions
            .iter()
            .map(|(k, &a)| (k.clone(), model.perturb(k, a, seed)))
            .collect();
        Ok(AdviceMap { predictions })
    }
}

const MULTIPLICATIVE_STREAM: u64 = 0x6d75_6c74;
const DROPOUT_STREAM: u64 = 0x6472_6f70;

/// Advice corruption model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum NoiseModel {
    None,
    /// Scale each prediction by a log-uniform factor in `[1/C, C]`.
    Multiplicative(f64),
    /// Set each prediction to 0 with the given probability.
    Dropout(f64),
}

impl NoiseModel {
    fn validate(&self) -> Result<()> {
        match *self {
            NoiseModel::None => Ok(()),
            NoiseModel::Multiplicative(c) if c.is_finite() && c >= 1.0 => Ok(()),
            NoiseModel::Multiplicative(c) => Err(invalid(format!("noise factor C must be >= 1, got {c}"))),
            NoiseModel::Dropout(r) if (0.0..=1.0).contains(&r) => Ok(()),
            NoiseModel::Dropout(r) => Err(invalid(format!("dropout rate must lie in [0, 1], got {r}"))),
        }
    }

    /// The noisy prediction for one key.
    pub fn perturb(&self, key: &Key, advice: f64, seed: u64) -> f64 {
        match *self {
            NoiseModel::None => advice,
            NoiseModel::Multiplicative(c) => {
                if c == 1.0 {
                    return advice;
                }
                let u = HashSource::uniform(mix_seed(seed, MULTIPLICATIVE_STREAM)).unit(key.as_bytes());
                advice * c.powf(2.0 * u - 1.0)
            }
            NoiseModel::Dropout(rate) => {
                let u = HashSource::uniform(mix_seed(seed, DROPOUT_STREAM)).unit(key.as_bytes());
                if u <= rate {
                    0.0
                } else {
                    advice
                }
            }
        }
    }
}

impl fmt::Display for NoiseModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NoiseModel::None => f.write_str("none"),
            NoiseModel::Multiplicative(c) => write!(f, "multiplicative:{c}"),
            NoiseModel::Dropout(r) => write!(f, "dropout:{r}"),
        }
    }
}

impl FromStr for NoiseModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, arg) = match s.split_once(':') {
            Some((n, a)) => (n.trim(), Some(a.trim())),
            None => (s.trim(), None),
        };
        let num = |what: &str| -> Result<f64> {
            let a = arg.ok_or_else(|| invalid(format!("noise model `{name}` needs a {what}, e.g. `{name}:2`")))?;
            a.parse()
                .map_err(|_| invalid(format!("bad {what} `{a}` in noise model")))
        };
        let model = match name {
            "none" => NoiseModel::None,
            "multiplicative" | "mult" => NoiseModel::Multiplicative(num("factor")?),
            "dropout" => NoiseModel::Dropout(num("rate")?),
            _ => return Err(invalid(format!("unknown noise model `{s}`"))),
        };
        model.validate()?;
        Ok(model)
    }
}

impl TryFrom<String> for NoiseModel {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<NoiseModel> for String {
    fn from(m: NoiseModel) -> String {
        m.to_string()
    }
}
