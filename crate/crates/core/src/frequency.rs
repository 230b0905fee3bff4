//! Keys, data elements and aggregated frequency vectors.

use std::borrow::Borrow;
use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::func::FreqFn;

/// An opaque key. Numeric keys are canonicalized to their decimal text.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Key(String);

impl Key {
    pub fn new(s: impl Into<String>) -> Self {
        Key(s.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn as_bytes(&self) -> &[u8] {
        self.0.as_bytes()
    }
}

impl fmt::Display for Key {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl Borrow<str> for Key {
    fn borrow(&self) -> &str {
        &self.0
    }
}

impl From<&str> for Key {
    fn from(s: &str) -> Self {
        Key(s.to_owned())
    }
}

impl From<String> for Key {
    fn from(s: String) -> Self {
        Key(s)
    }
}

impl From<u64> for Key {
    fn from(v: u64) -> Self {
        Key(v.to_string())
    }
}

/// One data element `(key, value)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Element {
    pub key: Key,
    pub value: f64,
}

impl Element {
    pub fn new(key: impl Into<Key>, value: f64) -> Self {
        Element { key: key.into(), value }
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if self.value.is_finite() && self.value >= 0.0 {
            Ok(())
        } else {
            Err(Error::NegativeValue {
                key: self.key.clone(),
                value: self.value,
            })
        }
    }
}

/// Correctly rounded floating-point summation (Shewchuk partials, as in
/// Python's `math.fsum`). The result depends only on the multiset of addends,
/// which makes aggregation independent of element order.
#[derive(Debug, Clone, Default)]
pub(crate) struct ExactSum {
    partials: Vec<f64>,
}

impl ExactSum {
    pub(crate) fn add(&mut self, mut x: f64) {
        let mut i = 0;
        for j in 0..self.partials.len() {
            let mut y = self.partials[j];
            if x.abs() < y.abs() {
                std::mem::swap(&mut x, &mut y);
            }
            let hi = x + y;
            let lo = y - (hi - x);
            if lo != 0.0 {
                self.partials[i] = lo;
                i += 1;
            }
            x = hi;
        }
        self.partials.truncate(i);
        self.partials.push(x);
    }

    pub(crate) fn absorb(&mut self, other: &ExactSum) {
        for &p in &other.partials {
            self.add(p);
        }
    }

    pub(crate) fn value(&self) -> f64 {
        let p = &self.partials;
        let Some(mut n) = p.len().checked_sub(1) else {
            return 0.0;
        };
        let mut hi = p[n];
        let mut lo = 0.0;
        while n > 0 {
            let x = hi;
            n -= 1;
            let y = p[n];
            hi = x + y;
            lo = y - (hi - x);
            if lo != 0.0 {
                break;
            }
        }
        // half-way case: round-half-even correction using the next partial
        if n > 0 && ((lo < 0.0 && p[n - 1] < 0.0) || (lo > 0.0 && p[n - 1] > 0.0)) {
            let y = lo * 2.0;
            let x = hi + y;
            if y == x - hi {
                hi = x;
            }
        }
        hi
    }
}

pub(crate) fn exact_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut s = ExactSum::default();
    for v in values {
        s.add(v);
    }
    s.value()
}

/// Incremental aggregation of a stream into per-key totals.
///
/// Aggregators over disjoint parts of a stream can be combined with
/// [`Aggregator::merge`]; the result does not depend on how the stream was
/// split or ordered.
#[derive(Debug, Clone, Default)]
pub struct Aggregator {
    sums: HashMap<Key, ExactSum>,
}

impl Aggregator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, element: Element) -> Result<()> {
        element.validate()?;
        self.sums.entry(element.key).or_default().add(element.value);
        Ok(())
    }

    pub fn merge(&mut self, other: Aggregator) {
        for (k, s) in other.sums {
            self.sums.entry(k).or_default().absorb(&s);
        }
    }

    pub fn finish(self) -> FrequencyVector {
        FrequencyVector::from_totals(self.sums.into_iter().map(|(k, s)| (k, s.value())))
    }
}

/// `aggregate`: per-key sums of element values, zero totals dropped.
pub fn aggregate(stream: impl IntoIterator<Item = Element>) -> Result<FrequencyVector> {
    let mut agg = Aggregator::new();
    for e in stream {
        agg.push(e)?;
    }
    Ok(agg.finish())
}

/// Aggregated frequencies `w_x > 0`, materialized in rank order: descending
/// frequency, ties broken by ascending key.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FrequencyVector {
    ranked: Vec<(Key, f64)>,
    index: HashMap<Key, usize>,
}

impl FrequencyVector {
    /// Build from already-aggregated `(key, frequency)` pairs. Duplicate keys
    /// are summed; zero frequencies are dropped.
    pub fn from_pairs<K: Into<Key>>(pairs: impl IntoIterator<Item = (K, f64)>) -> Result<Self> {
        aggregate(pairs.into_iter().map(|(k, v)| Element::new(k, v)))
    }

    fn from_totals(totals: impl IntoIterator<Item = (Key, f64)>) -> Self {
        let mut ranked: Vec<(Key, f64)> = totals.into_iter().filter(|(_, w)| *w > 0.0).collect();
        ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        let index = ranked.iter().enumerate().map(|(i, (k, _))| (k.clone(), i)).collect();
        FrequencyVector { ranked, index }
    }

    /// Support size `n`.
    pub fn len(&self) -> usize {
        self.ranked.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ranked.is_empty()
    }

    pub fn get(&self, key: &str) -> Option<f64> {
        self.index.get(key).map(|&i| self.ranked[i].1)
    }

    /// 1-based rank of `key` in the descending order.
    pub fn rank_of(&self, key: &str) -> Option<usize> {
        self.index.get(key).map(|&i| i + 1)
    }

    /// `(key, frequency)` in rank order.
    pub fn iter(&self) -> impl ExactSizeIterator<Item = (&Key, f64)> + '_ {
        self.ranked.iter().map(|(k, w)| (k, *w))
    }

    pub fn keys(&self) -> impl ExactSizeIterator<Item = &Key> + '_ {
        self.ranked.iter().map(|(k, _)| k)
    }

    /// Frequencies in rank order (`w_1 >= w_2 >= ...`).
    pub fn weights(&self) -> Vec<f64> {
        self.ranked.iter().map(|(_, w)| *w).collect()
    }

    pub fn max(&self) -> Option<f64> {
        self.ranked.first().map(|(_, w)| *w)
    }

    pub fn min(&self) -> Option<f64> {
        self.ranked.last().map(|(_, w)| *w)
    }

    /// `‖f(w)‖₁`, correctly rounded.
    pub fn norm(&self, f: &FreqFn) -> f64 {
        exact_sum(self.ranked.iter().map(|(_, w)| f.eval(*w)))
    }

    /// `apply_fn`: pointwise `f(w)` in rank order together with `‖f(w)‖₁`.
    pub fn apply(&self, f: &FreqFn) -> FnValues {
        let values: Vec<(Key, f64)> = self.ranked.iter().map(|(k, w)| (k.clone(), f.eval(*w))).collect();
        let norm = exact_sum(values.iter().map(|(_, v)| *v));
        FnValues { values, norm }
    }

    /// Pointwise sum of two frequency vectors (aggregation of two shards).
    pub fn combine(&self, other: &FrequencyVector) -> FrequencyVector {
        let mut sums: HashMap<Key, ExactSum> = HashMap::with_capacity(self.len() + other.len());
        for (k, w) in self.iter().chain(other.iter()) {
            sums.entry(k.clone()).or_default().add(w);
        }
        FrequencyVector::from_totals(sums.into_iter().map(|(k, s)| (k, s.value())))
    }
}

/// Output of [`FrequencyVector::apply`].
#[derive(Debug, Clone, PartialEq)]
pub struct FnValues {
    pub values: Vec<(Key, f64)>,
    pub norm: f64,
}
