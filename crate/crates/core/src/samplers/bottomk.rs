use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashSet};

use serde::{Deserialize, Serialize};

use super::{conditional_inclusion, SampleMeta, SampleRecord, SampleScheme, SamplerConfig, WeightedSample};
use crate::error::{Error, Result};
use crate::frequency::{FrequencyVector, Key};
use crate::func::FreqFn;

#[derive(Debug, Clone)]
struct Entry {
    key: Key,
    frequency: f64,
    seed: f64,
}

impl PartialEq for Entry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Entry {}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Entry {
    // seed order, ties by key
    fn cmp(&self, other: &Self) -> Ordering {
        self.seed.total_cmp(&other.seed).then_with(|| self.key.cmp(&other.key))
    }
}

/// Bottom-k sample over aggregated frequencies: retains the `k` keys with the
/// smallest seeds `h(x) / w_x^q`, plus one shadow entry (the `(k+1)`-th
/// smallest) that supplies the inclusion threshold at finalization.
///
/// Batches must be key-disjoint: the seed of a key depends on its total
/// frequency, so a key split across batches would be sampled by a partial
/// weight. A repeated key is rejected when it is still retained; keys that
/// were already evicted cannot be recognized in `O(k)` space.
#[derive(Debug, Clone)]
pub struct BottomKSketch {
    config: SamplerConfig,
    // max-heap holding the k+1 smallest entries
    heap: BinaryHeap<Entry>,
    members: HashSet<Key>,
}

impl BottomKSketch {
    pub fn new(config: SamplerConfig) -> Result<Self> {
        config.validate()?;
        Ok(BottomKSketch {
            config,
            heap: BinaryHeap::with_capacity(config.k + 2),
            members: HashSet::new(),
        })
    }

    pub fn config(&self) -> &SamplerConfig {
        &self.config
    }

    /// Number of retained keys, excluding the shadow.
    pub fn len(&self) -> usize {
        self.heap.len().min(self.config.k)
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }

    fn seed_of(&self, key: &Key, frequency: f64) -> f64 {
        self.config.hash().draw(key.as_bytes()) / self.config.transformed(frequency)
    }

    /// Process an aggregated batch.
    pub fn process(&mut self, batch: &FrequencyVector) -> Result<()> {
        if let Some(k) = batch.keys().find(|k| self.members.contains(*k)) {
            return Err(Error::DuplicateKey(k.clone()));
        }
        for (key, w) in batch.iter() {
            self.insert(key.clone(), w);
        }
        Ok(())
    }

    /// Process a single key with its total frequency.
    pub fn process_key(&mut self, key: Key, frequency: f64) -> Result<()> {
        if self.members.contains(&key) {
            return Err(Error::DuplicateKey(key));
        }
        if !(frequency.is_finite() && frequency >= 0.0) {
            return Err(Error::NegativeValue { key, value: frequency });
        }
        if frequency > 0.0 {
            self.insert(key, frequency);
        }
        Ok(())
    }

    fn insert(&mut self, key: Key, frequency: f64) {
        let seed = self.seed_of(&key, frequency);
        self.offer(Entry { key, frequency, seed });
    }

    fn offer(&mut self, entry: Entry) {
        let cap = self.config.k + 1;
        if self.heap.len() < cap {
            self.members.insert(entry.key.clone());
            self.heap.push(entry);
        } else if entry < *self.heap.peek().expect("heap is full") {
            let evicted = self.heap.pop().expect("heap is full");
            self.members.remove(&evicted.key);
            self.members.insert(entry.key.clone());
            self.heap.push(entry);
        }
    }

    fn sorted(&self) -> Vec<Entry> {
        self.heap.clone().into_sorted_vec()
    }

    /// Retained `(key, frequency, seed)` in seed order, shadow excluded.
    pub fn entries(&self) -> Vec<(Key, f64, f64)> {
        let mut v = self.sorted();
        v.truncate(self.config.k);
        v.into_iter().map(|e| (e.key, e.frequency, e.seed)).collect()
    }

    /// The `(k+1)`-th smallest seed among all processed keys, if that many exist.
    pub fn threshold(&self) -> Option<f64> {
        (self.heap.len() > self.config.k).then(|| self.heap.peek().expect("nonempty").seed)
    }

    /// Union of two sketches of key-disjoint data. Equals the sketch of the
    /// union processed in one pass.
    pub fn merge(&self, other: &BottomKSketch) -> Result<BottomKSketch> {
        if self.config != other.config {
            return Err(Error::ConfigMismatch(format!(
                "cannot merge bottom-k sketches with configs {:?} and {:?}",
                self.config, other.config
            )));
        }
        let mut out = self.clone();
        for e in other.heap.iter() {
            if out.members.contains(&e.key) || self.members.contains(&e.key) {
                return Err(Error::DuplicateKey(e.key.clone()));
            }
            out.offer(e.clone());
        }
        Ok(out)
    }

    /// Turn the sketch into a sample with inclusion probabilities
    /// `Pr[seed_x <= tau]`, `tau` being the `(k+1)`-th smallest seed.
    pub fn finalize(&self) -> WeightedSample {
        let tau = self.threshold();
        let hash = self.config.hash();
        let records = self
            .entries()
            .into_iter()
            .map(|(key, frequency, _)| {
                let p = conditional_inclusion(&hash, self.config.transformed(frequency), tau.unwrap_or(f64::INFINITY));
                SampleRecord {
                    key,
                    frequency,
                    inclusion_probability: p,
                }
            })
            .collect();
        let scheme = match self.config.scheme {
            super::Scheme::Ppswor => SampleScheme::Ppswor,
            super::Scheme::Priority => SampleScheme::Priority,
        };
        let meta = SampleMeta {
            scheme,
            k: self.config.k,
            weight: FreqFn::power(self.config.q).unwrap_or(FreqFn::Identity),
            threshold: tau,
        };
        WeightedSample { meta, records }
    }

    pub fn to_state(&self) -> BottomKState {
        let mut sorted = self.sorted();
        let shadow = (sorted.len() > self.config.k).then(|| sorted.pop()).flatten();
        let stored = |e: Entry| StoredEntry {
            key: e.key,
            frequency: e.frequency,
        };
        BottomKState {
            config: self.config,
            entries: sorted.into_iter().map(stored).collect(),
            shadow: shadow.map(stored),
        }
    }

    pub fn from_state(state: BottomKState) -> Result<Self> {
        let mut sketch = BottomKSketch::new(state.config)?;
        if state.entries.len() > state.config.k || (state.shadow.is_some() && state.entries.len() != state.config.k) {
            return Err(Error::Format(
                "bottom-k state has an inconsistent number of entries".into(),
            ));
        }
        for e in state.entries.into_iter().chain(state.shadow) {
            if !(e.frequency.is_finite() && e.frequency > 0.0) {
                return Err(Error::Format(format!("bottom-k entry {} has invalid frequency", e.key)));
            }
            if sketch.members.contains(&e.key) {
                return Err(Error::Format(format!("bottom-k state repeats key {}", e.key)));
            }
            let seed = sketch.seed_of(&e.key, e.frequency);
            sketch.members.insert(e.key.clone());
            sketch.heap.push(Entry {
                key: e.key,
                frequency: e.frequency,
                seed,
            });
        }
        Ok(sketch)
    }
}

/// Conditional variance of the bottom-k estimate of `‖target(w)‖₁` for the
/// randomization fixed by `config.seed`: each key's inclusion probability is
/// taken given the seeds of all other keys, with threshold the `k`-th
/// smallest seed among them, and the terms `(1/p_x - 1) target(w_x)²` are
/// summed over all keys, sampled or not. Averaging over hash seeds estimates
/// the variance of the estimator.
pub fn conditional_variance(w: &FrequencyVector, config: &SamplerConfig, target: &FreqFn) -> Result<f64> {
    config.validate()?;
    let k = config.k;
    if w.len() <= k {
        return Ok(0.0);
    }
    let hash = config.hash();
    let mut seeds: Vec<(f64, &Key, f64)> = w
        .iter()
        .map(|(key, wx)| (hash.draw(key.as_bytes()) / config.transformed(wx), key, wx))
        .collect();
    // only the k+1 smallest matter for the thresholds
    seeds.select_nth_unstable_by(k, |a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(b.1)));
    seeds[..k].sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(b.1)));
    let (kth, next) = (seeds[k - 1].0, seeds[k].0);
    let mut terms = Vec::with_capacity(seeds.len());
    for (i, &(_, _, wx)) in seeds.iter().enumerate() {
        let t = target.eval(wx);
        if t == 0.0 {
            continue;
        }
        let tau = if i < k { next } else { kth };
        let p = conditional_inclusion(&hash, config.transformed(wx), tau);
        if p == 0.0 {
            return Ok(f64::INFINITY);
        }
        terms.push((1.0 / p - 1.0) * t * t);
    }
    Ok(crate::frequency::exact_sum(terms))
}

/// Serializable bottom-k state. Seeds are not stored: they are recomputed
/// from the config's hash and the stored frequencies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BottomKState {
    pub config: SamplerConfig,
    pub entries: Vec<StoredEntry>,
    pub shadow: Option<StoredEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoredEntry {
    pub key: Key,
    pub frequency: f64,
}
