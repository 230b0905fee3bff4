use std::cmp::Reverse;
use std::collections::{BTreeSet, HashMap};

use ordered_float::OrderedFloat;
use serde::{Deserialize, Serialize};

use super::AdviceMap;
use crate::error::{invalid, Error, Result};
use crate::frequency::{exact_sum, Element, FrequencyVector, Key};
use crate::func::FreqFn;
use crate::hash::HashSource;
use crate::samplers::{SampleMeta, SampleRecord, SampleScheme, Scheme, WeightedSample};

type Of = OrderedFloat<f64>;

/// Rank of a key in the top-by-advice component: larger advice first, ties
/// broken toward the smaller key.
type HeavyRank = (Of, Reverse<Key>);

/// Sizes and randomization of a sample-by-advice sketch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdviceParams {
    /// Keys kept deterministically by largest advice.
    pub k_h: usize,
    /// Keys sampled by `f(a_x)` (bottom-k on `h(x) / f(a_x)`).
    pub k_p: usize,
    /// Keys sampled uniformly (bottom-k on `h(x)`).
    pub k_u: usize,
    /// The statistic the advice is turned into sampling weights by.
    pub f: FreqFn,
    pub scheme: Scheme,
    pub seed: u64,
}

impl AdviceParams {
    pub fn new(k_h: usize, k_p: usize, k_u: usize, f: FreqFn, scheme: Scheme, seed: u64) -> Result<Self> {
        let p = AdviceParams {
            k_h,
            k_p,
            k_u,
            f,
            scheme,
            seed,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.size() == 0 {
            return Err(invalid("k_h + k_p + k_u must be >= 1"));
        }
        Ok(())
    }

    /// Maximum number of stored keys.
    pub fn size(&self) -> usize {
        self.k_h + self.k_p + self.k_u
    }

    pub fn hash(&self) -> HashSource {
        self.scheme.hash(self.seed)
    }

    /// `(h(x), r_x)` with `r_x = h(x) / f(a_x)`, infinite when `f(a_x) = 0`.
    #[inline]
    fn seeds(&self, hash: &HashSource, key: &Key, advice: f64) -> (f64, f64) {
        let h = hash.draw(key.as_bytes());
        let fa = self.f.eval(advice);
        let r = if fa > 0.0 { h / fa } else { f64::INFINITY };
        (h, r)
    }
}

/// `Pr[h(x) < max(tau_u, f(a_x) tau_p)]`.
#[inline]
pub(crate) fn advice_inclusion(hash: &HashSource, fa: f64, tau_p: f64, tau_u: f64) -> f64 {
    // 0 * inf is a key without advice facing an unbounded by-advice threshold
    let by_advice = if fa > 0.0 && tau_p > 0.0 { fa * tau_p } else { 0.0 };
    let t = by_advice.max(tau_u);
    if t.is_infinite() {
        1.0
    } else {
        hash.cdf(t)
    }
}

/// The `(k-1)`-th smallest value among `sorted` with position `own` removed;
/// 0 when `k <= 1` and `+inf` when too few values remain.
#[inline]
fn threshold_excluding(sorted: &[f64], k: usize, own: Option<usize>) -> f64 {
    if k <= 1 {
        return 0.0;
    }
    let j = k - 2;
    let idx = match own {
        Some(i) if i <= j => j + 1,
        _ => j,
    };
    sorted.get(idx).copied().unwrap_or(f64::INFINITY)
}

#[derive(Debug, Clone)]
struct Record {
    frequency: f64,
    advice: f64,
    h: f64,
    r: f64,
}

/// Sample-by-advice sketch over a stream of `(key, delta)` updates.
///
/// Three components share one store: `S.h` keeps the `k_h` keys with the
/// largest advice, and `S.pu` keeps every other key that is among the `k_p`
/// smallest `r_x = h(x)/f(a_x)` or among the `k_u` smallest `h(x)`. A key
/// ejected from `S.h` moves to `S.pu` with its count so far. Retained keys
/// always carry exact frequencies, because a key that fails to qualify can
/// never qualify later.
#[derive(Debug, Clone)]
pub struct AdviceSketch {
    params: AdviceParams,
    hash: HashSource,
    heavy: BTreeSet<HeavyRank>,
    by_r: BTreeSet<(Of, Key)>,
    by_h: BTreeSet<(Of, Key)>,
    records: HashMap<Key, Record>,
}

impl AdviceSketch {
    pub fn new(params: AdviceParams) -> Result<Self> {
        params.validate()?;
        Ok(AdviceSketch {
            params,
            hash: params.hash(),
            heavy: BTreeSet::new(),
            by_r: BTreeSet::new(),
            by_h: BTreeSet::new(),
            records: HashMap::new(),
        })
    }

    pub fn params(&self) -> &AdviceParams {
        &self.params
    }

    /// Number of stored keys across all components.
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Stored count of `key`, if retained.
    pub fn frequency(&self, key: &str) -> Option<f64> {
        self.records.get(key).map(|r| r.frequency)
    }

    /// Keys held by the top-by-advice component, best first.
    pub fn heavy_keys(&self) -> impl Iterator<Item = &Key> + '_ {
        self.heavy.iter().rev().map(|(_, Reverse(k))| k)
    }

    pub fn process(&mut self, element: &Element, advice: &AdviceMap) -> Result<()> {
        self.update(&element.key, element.value, advice.get(element.key.as_str()))
    }

    pub fn process_all<'a>(
        &mut self,
        elements: impl IntoIterator<Item = &'a Element>,
        advice: &AdviceMap,
    ) -> Result<()> {
        for e in elements {
            self.process(e, advice)?;
        }
        Ok(())
    }

    /// Process the update `(key, delta)` whose key has prediction `advice`.
    /// Predictions must be the same for every update of a key.
    pub fn update(&mut self, key: &Key, delta: f64, advice: f64) -> Result<()> {
        if !(delta.is_finite() && delta >= 0.0) {
            return Err(Error::NegativeValue {
                key: key.clone(),
                value: delta,
            });
        }
        if let Some(rec) = self.records.get_mut(key) {
            rec.frequency += delta;
            return Ok(());
        }
        if delta == 0.0 {
            return Ok(());
        }
        if !(advice.is_finite() && advice >= 0.0) {
            return Err(invalid(format!(
                "advice for key {key} must be finite and >= 0, got {advice}"
            )));
        }
        let (h, r) = self.params.seeds(&self.hash, key, advice);
        let rec = Record {
            frequency: delta,
            advice,
            h,
            r,
        };
        let rank: HeavyRank = (OrderedFloat(advice), Reverse(key.clone()));
        let k_h = self.params.k_h;
        if k_h > 0 && (self.heavy.len() < k_h || rank > *self.heavy.first().expect("S.h is full")) {
            self.heavy.insert(rank);
            self.records.insert(key.clone(), rec);
            if self.heavy.len() > k_h {
                let (_, Reverse(y)) = self.heavy.pop_first().expect("S.h is over full");
                let ejected = self.records.remove(&y).expect("S.h key has a record");
                self.offer(y, ejected);
            }
        } else {
            self.offer(key.clone(), rec);
        }
        Ok(())
    }

    /// Offer a key to `S.pu`, evicting keys that no longer qualify.
    fn offer(&mut self, key: Key, rec: Record) {
        let mut keep = false;
        let mut evicted: Vec<Key> = Vec::new();
        if rec.r.is_finite() {
            if let Some(out) = offer_bounded(&mut self.by_r, (OrderedFloat(rec.r), key.clone()), self.params.k_p) {
                keep = true;
                evicted.extend(out);
            }
        }
        if let Some(out) = offer_bounded(&mut self.by_h, (OrderedFloat(rec.h), key.clone()), self.params.k_u) {
            keep = true;
            evicted.extend(out);
        }
        if keep {
            self.records.insert(key, rec);
        }
        for z in evicted {
            // a key displaced from both orders shows up twice
            let Some(r) = self.records.get(&z) else { continue };
            let in_p = self.by_r.contains(&(OrderedFloat(r.r), z.clone()));
            let in_u = self.by_h.contains(&(OrderedFloat(r.h), z.clone()));
            if !in_p && !in_u {
                self.records.remove(&z);
            }
        }
    }

    /// Union of two sketches with identical parameters. Equals the sketch of
    /// the concatenated streams, including when shards share keys.
    pub fn merge(&self, other: &AdviceSketch) -> Result<AdviceSketch> {
        if self.params != other.params {
            return Err(Error::ConfigMismatch(format!(
                "cannot merge advice sketches with parameters {:?} and {:?}",
                self.params, other.params
            )));
        }
        let mut pool: HashMap<Key, Record> = self.records.clone();
        for (k, rec) in &other.records {
            match pool.get_mut(k) {
                Some(mine) => {
                    if mine.advice != rec.advice {
                        return Err(invalid(format!(
                            "inconsistent advice for key {k} across merged sketches"
                        )));
                    }
                    mine.frequency += rec.frequency;
                }
                None => {
                    pool.insert(k.clone(), rec.clone());
                }
            }
        }
        let mut candidates: Vec<HeavyRank> = self.heavy.union(&other.heavy).cloned().collect();
        candidates.sort_unstable_by(|a, b| b.cmp(a));
        let mut out = AdviceSketch::new(self.params)?;
        for rank in candidates.into_iter().take(self.params.k_h) {
            let rec = pool.remove(&rank.1 .0).expect("heavy key is pooled");
            out.records.insert(rank.1 .0.clone(), rec);
            out.heavy.insert(rank);
        }
        for (k, rec) in pool {
            out.offer(k, rec);
        }
        Ok(out)
    }

    /// Finalized sample: `S.h` keys with probability 1 and the `S.pu` keys
    /// that pass the estimator's inclusion test, with their conditional
    /// inclusion probabilities.
    pub fn to_sample(&self) -> WeightedSample {
        let mut records: Vec<SampleRecord> = self
            .heavy
            .iter()
            .rev()
            .map(|(_, Reverse(k))| SampleRecord {
                key: k.clone(),
                frequency: self.records[k].frequency,
                inclusion_probability: 1.0,
            })
            .collect();
        let r_sorted: Vec<f64> = self.by_r.iter().map(|(r, _)| r.0).collect();
        let h_sorted: Vec<f64> = self.by_h.iter().map(|(h, _)| h.0).collect();
        let r_pos: HashMap<&Key, usize> = self.by_r.iter().enumerate().map(|(i, (_, k))| (k, i)).collect();
        let h_pos: HashMap<&Key, usize> = self.by_h.iter().enumerate().map(|(i, (_, k))| (k, i)).collect();
        let mut sampled: Vec<SampleRecord> = Vec::new();
        for (key, rec) in &self.records {
            if self.heavy.contains(&(OrderedFloat(rec.advice), Reverse(key.clone()))) {
                continue;
            }
            let tau_p = threshold_excluding(&r_sorted, self.params.k_p, r_pos.get(key).copied());
            let tau_u = threshold_excluding(&h_sorted, self.params.k_u, h_pos.get(key).copied());
            if rec.h < tau_u || rec.r < tau_p {
                let fa = self.params.f.eval(rec.advice);
                sampled.push(SampleRecord {
                    key: key.clone(),
                    frequency: rec.frequency,
                    inclusion_probability: advice_inclusion(&self.hash, fa, tau_p, tau_u),
                });
            }
        }
        sampled.sort_by(|a, b| a.key.cmp(&b.key));
        records.extend(sampled);
        let meta = SampleMeta {
            scheme: SampleScheme::Advice,
            k: self.params.size(),
            weight: self.params.f,
            threshold: None,
        };
        WeightedSample { meta, records }
    }

    /// Estimate of `‖f(w)‖₁` for the sketch's own `f`.
    pub fn estimate(&self) -> f64 {
        let f = self.params.f;
        exact_sum(
            self.to_sample()
                .records
                .iter()
                .map(|r| f.eval(r.frequency) / r.inclusion_probability),
        )
    }

    pub fn to_state(&self) -> AdviceState {
        let entry = |k: &Key| {
            let r = &self.records[k];
            AdviceEntry {
                key: k.clone(),
                frequency: r.frequency,
                advice: r.advice,
            }
        };
        let heavy: Vec<AdviceEntry> = self.heavy_keys().map(entry).collect();
        let mut sampled: Vec<AdviceEntry> = self
            .records
            .keys()
            .filter(|k| !heavy.iter().any(|e| &e.key == *k))
            .map(entry)
            .collect();
        sampled.sort_by(|a, b| a.key.cmp(&b.key));
        AdviceState {
            params: self.params,
            heavy,
            sampled,
        }
    }

    pub fn from_state(state: AdviceState) -> Result<Self> {
        let mut s = AdviceSketch::new(state.params)?;
        let bad = |msg: String| Error::Format(msg);
        if state.heavy.len() > state.params.k_h {
            return Err(bad("advice state holds more top-advice keys than k_h".into()));
        }
        if state.heavy.len() < state.params.k_h && !state.sampled.is_empty() {
            return Err(bad(
                "advice state samples keys while the top-advice component has room".into()
            ));
        }
        for e in state.heavy.iter().chain(&state.sampled) {
            if !(e.frequency.is_finite() && e.frequency > 0.0 && e.advice.is_finite() && e.advice >= 0.0) {
                return Err(bad(format!("advice state entry {} has invalid values", e.key)));
            }
            if s.records.contains_key(&e.key) {
                return Err(bad(format!("advice state repeats key {}", e.key)));
            }
            let (h, r) = s.params.seeds(&s.hash, &e.key, e.advice);
            s.records.insert(
                e.key.clone(),
                Record {
                    frequency: e.frequency,
                    advice: e.advice,
                    h,
                    r,
                },
            );
            if s.heavy.len() < state.heavy.len() {
                s.heavy.insert((OrderedFloat(e.advice), Reverse(e.key.clone())));
            }
        }
        let floor = s.heavy.first().cloned();
        for e in &state.sampled {
            let rec = s.records.remove(&e.key).expect("inserted above");
            if floor
                .as_ref()
                .is_some_and(|f| (OrderedFloat(e.advice), Reverse(e.key.clone())) > *f)
            {
                return Err(bad(format!("sampled key {} outranks the top-advice component", e.key)));
            }
            s.offer(e.key.clone(), rec);
        }
        if s.records.len() != state.heavy.len() + state.sampled.len() {
            return Err(bad("advice state holds keys that do not qualify for the sample".into()));
        }
        Ok(s)
    }
}

/// Insert `item` if it is among the `cap` smallest. Returns `None` when it
/// was rejected, otherwise the displaced key, if any.
fn offer_bounded(set: &mut BTreeSet<(Of, Key)>, item: (Of, Key), cap: usize) -> Option<Option<Key>> {
    if cap == 0 {
        return None;
    }
    if set.len() < cap {
        set.insert(item);
        return Some(None);
    }
    if item < *set.last().expect("set is full") {
        set.insert(item);
        let (_, out) = set.pop_last().expect("set is over full");
        return Some(Some(out));
    }
    None
}

/// Serializable advice sketch. `h` and `r` are recomputed on load.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdviceState {
    pub params: AdviceParams,
    /// Top-advice component, best first.
    pub heavy: Vec<AdviceEntry>,
    /// Sampled component, sorted by key.
    pub sampled: Vec<AdviceEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdviceEntry {
    pub key: Key,
    pub frequency: f64,
    pub advice: f64,
}

/// Conditional variance of the advice estimate of `‖target(w)‖₁` for one
/// randomization: for every key, its inclusion probability given the seeds of
/// all other keys, summed as `Σ (1/p_x - 1) target(w_x)²`. Averaging over
/// hash seeds estimates the estimator's variance. Infinite when a key with
/// positive target value has probability 0 of being sampled.
pub fn conditional_variance(
    w: &FrequencyVector,
    advice: &AdviceMap,
    params: &AdviceParams,
    target: &FreqFn,
) -> Result<f64> {
    params.validate()?;
    let hash = params.hash();
    let mut keys: Vec<(HeavyRank, f64)> = w
        .iter()
        .map(|(k, wx)| ((OrderedFloat(advice.get(k.as_str())), Reverse(k.clone())), wx))
        .collect();
    if keys.len() <= params.k_h {
        return Ok(0.0);
    }
    keys.select_nth_unstable_by(params.k_h, |a, b| b.0.cmp(&a.0));
    let rest = &keys[params.k_h..];
    // (h, r, f(a), w) for keys outside S.h
    let seeds: Vec<(f64, f64, f64, f64)> = rest
        .iter()
        .map(|((a, Reverse(k)), wx)| {
            let (h, r) = params.seeds(&hash, k, a.0);
            (h, r, params.f.eval(a.0), *wx)
        })
        .collect();
    let (r_sorted, r_pos) = ranks(seeds.iter().map(|s| s.1), rest);
    let (h_sorted, h_pos) = ranks(seeds.iter().map(|s| s.0), rest);
    let mut terms = Vec::with_capacity(seeds.len());
    for (i, &(_, _, fa, wx)) in seeds.iter().enumerate() {
        let t = target.eval(wx);
        if t == 0.0 {
            continue;
        }
        let tau_p = threshold_excluding(&r_sorted, params.k_p, r_pos[i]);
        let tau_u = threshold_excluding(&h_sorted, params.k_u, h_pos[i]);
        let p = advice_inclusion(&hash, fa, tau_p, tau_u);
        if p == 0.0 {
            return Ok(f64::INFINITY);
        }
        terms.push((1.0 / p - 1.0) * t * t);
    }
    Ok(exact_sum(terms))
}

/// Sorted finite values and each item's position among them (ties by key).
fn ranks(values: impl Iterator<Item = f64>, keys: &[(HeavyRank, f64)]) -> (Vec<f64>, Vec<Option<usize>>) {
    let vals: Vec<f64> = values.collect();
    let mut order: Vec<usize> = (0..vals.len()).filter(|&i| vals[i].is_finite()).collect();
    order.sort_unstable_by(|&a, &b| {
        vals[a]
            .total_cmp(&vals[b])
            .then_with(|| keys[a].0 .1 .0.cmp(&keys[b].0 .1 .0))
    });
    let mut pos = vec![None; vals.len()];
    for (p, &i) in order.iter().enumerate() {
        pos[i] = Some(p);
    }
    (order.iter().map(|&i| vals[i]).collect(), pos)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::advice::NoiseModel;
    use crate::samplers::{BottomKSketch, SamplerConfig};
    use rand::seq::SliceRandom;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::collections::BTreeMap;

    fn m(p: f64) -> FreqFn {
        FreqFn::moment(p).unwrap()
    }

    fn params(k_h: usize, k_p: usize, k_u: usize, seed: u64) -> AdviceParams {
        AdviceParams::new(k_h, k_p, k_u, FreqFn::Identity, Scheme::Ppswor, seed).unwrap()
    }

    /// Random stream over `n` keys with integer values, each key 1..=4 times.
    fn stream(n: u64, rng_seed: u64) -> Vec<Element> {
        let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
        let mut out = Vec::new();
        for i in 0..n {
            for _ in 0..rng.random_range(1..=4) {
                out.push(Element::new(i, rng.random_range(1..=50) as f64));
            }
        }
        out.shuffle(&mut rng);
        out
    }

    fn noisy_advice(els: &[Element], seed: u64) -> AdviceMap {
        let w = crate::frequency::aggregate(els.iter().cloned()).unwrap();
        let clean = AdviceMap::from_frequencies(&w);
        clean
            .with_noise(NoiseModel::Multiplicative(3.0), seed)
            .unwrap()
            .with_noise(NoiseModel::Dropout(0.2), seed)
            .unwrap()
    }

    fn run(p: AdviceParams, els: &[Element], advice: &AdviceMap) -> AdviceSketch {
        let mut s = AdviceSketch::new(p).unwrap();
        s.process_all(els, advice).unwrap();
        s
    }

    #[test]
    fn everything_fits_in_top_component() {
        let w = FrequencyVector::from_pairs([("a", 5.0), ("b", 3.0), ("c", 1.0)]).unwrap();
        let els: Vec<Element> = w.iter().map(|(k, f)| Element::new(k.clone(), f)).collect();
        let s = run(params(3, 2, 2, 1), &els, &AdviceMap::from_pairs([("a", 1.0)]).unwrap());
        assert_eq!(s.heavy_keys().count(), 3);
        assert_eq!(s.estimate(), 9.0);
        for r in s.to_sample().records {
            assert_eq!(r.inclusion_probability, 1.0);
            assert_eq!(Some(r.frequency), w.get(r.key.as_str()));
        }
    }

    #[test]
    fn zero_advice_gives_uniform_bottom_k() {
        let els = stream(80, 3);
        let s = run(params(0, 5, 7, 21), &els, &AdviceMap::new());
        let hash = s.params().hash();
        let mut hs: Vec<(f64, Key)> = (0..80u64)
            .map(|i| (hash.draw(Key::from(i).as_bytes()), Key::from(i)))
            .collect();
        hs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut want: Vec<Key> = hs.into_iter().take(7).map(|(_, k)| k).collect();
        want.sort();
        let mut got: Vec<Key> = s.records.keys().cloned().collect();
        got.sort();
        assert_eq!(got, want);
    }

    /// Independent replay: final retained set and counts from aggregated totals.
    fn oracle(p: &AdviceParams, els: &[Element], advice: &AdviceMap) -> BTreeMap<Key, f64> {
        let mut totals: BTreeMap<Key, f64> = BTreeMap::new();
        for e in els {
            *totals.entry(e.key.clone()).or_default() += e.value;
        }
        let hash = p.hash();
        let mut by_advice: Vec<&Key> = totals.keys().collect();
        by_advice.sort_by(|a, b| {
            advice
                .get(b.as_str())
                .total_cmp(&advice.get(a.as_str()))
                .then_with(|| a.cmp(b))
        });
        let heavy: Vec<&Key> = by_advice.iter().take(p.k_h).copied().collect();
        let rest: Vec<&Key> = by_advice.iter().skip(p.k_h).copied().collect();
        let h = |k: &Key| hash.draw(k.as_bytes());
        let r = |k: &Key| {
            let fa = p.f.eval(advice.get(k.as_str()));
            if fa > 0.0 {
                h(k) / fa
            } else {
                f64::INFINITY
            }
        };
        let mut by_r: Vec<&Key> = rest.iter().copied().filter(|k| r(k).is_finite()).collect();
        by_r.sort_by(|a, b| r(a).total_cmp(&r(b)).then_with(|| a.cmp(b)));
        let mut by_h: Vec<&Key> = rest.clone();
        by_h.sort_by(|a, b| h(a).total_cmp(&h(b)).then_with(|| a.cmp(b)));
        heavy
            .into_iter()
            .chain(by_r.into_iter().take(p.k_p))
            .chain(by_h.into_iter().take(p.k_u))
            .map(|k| (k.clone(), totals[k]))
            .collect()
    }

    fn contents(s: &AdviceSketch) -> BTreeMap<Key, f64> {
        s.records.iter().map(|(k, r)| (k.clone(), r.frequency)).collect()
    }

    #[test]
    fn replay_matches_oracle() {
        for trial in 0..60u64 {
            let els = stream(50, trial);
            let advice = noisy_advice(&els, trial);
            let sizes = [(0, 6, 4), (3, 5, 5), (5, 0, 6), (4, 7, 0), (2, 1, 1), (60, 3, 3)];
            for &(kh, kp, ku) in &sizes {
                let p = AdviceParams::new(kh, kp, ku, m(2.0), Scheme::Ppswor, trial * 7 + 1).unwrap();
                let s = run(p, &els, &advice);
                assert_eq!(
                    contents(&s),
                    oracle(&p, &els, &advice),
                    "trial {trial}, sizes {kh},{kp},{ku}"
                );
            }
        }
    }

    #[test]
    fn storage_never_exceeds_budget() {
        let els = stream(300, 5);
        let advice = noisy_advice(&els, 5);
        let p = params(4, 6, 5, 2);
        let mut s = AdviceSketch::new(p).unwrap();
        for e in &els {
            s.process(e, &advice).unwrap();
            assert!(s.len() <= p.size());
        }
    }

    #[test]
    fn rejects_negative_updates() {
        let mut s = AdviceSketch::new(params(1, 1, 1, 0)).unwrap();
        assert!(matches!(
            s.update(&Key::from("a"), -1.0, 1.0),
            Err(Error::NegativeValue { .. })
        ));
    }

    #[test]
    fn merge_equals_single_pass() {
        let els = stream(100, 42);
        let advice = noisy_advice(&els, 42);
        let p = AdviceParams::new(3, 6, 5, m(3.0), Scheme::Priority, 9).unwrap();
        let whole = run(p, &els, &advice).to_state();
        for split in (2..100u64).step_by(3) {
            // key-disjoint three-way split
            let part = |lo: u64, hi: u64| -> Vec<Element> {
                els.iter()
                    .filter(|e| (lo..hi).contains(&e.key.as_str().parse::<u64>().unwrap()))
                    .cloned()
                    .collect()
            };
            let a = run(p, &part(0, split / 2), &advice);
            let b = run(p, &part(split / 2, split), &advice);
            let c = run(p, &part(split, 100), &advice);
            assert_eq!(a.merge(&b).unwrap().merge(&c).unwrap().to_state(), whole);
            assert_eq!(c.merge(&a.merge(&b).unwrap()).unwrap().to_state(), whole);
            assert_eq!(b.merge(&c).unwrap().merge(&a).unwrap().to_state(), whole);
            // two-way
            let ab = run(p, &part(0, split), &advice);
            assert_eq!(ab.merge(&c).unwrap().to_state(), whole);
        }
    }

    #[test]
    fn merge_with_shared_keys() {
        let els = stream(100, 8);
        let advice = noisy_advice(&els, 8);
        let p = params(4, 6, 6, 13);
        let whole = run(p, &els, &advice).to_state();
        for cut in [1, els.len() / 3, els.len() / 2, els.len() - 1] {
            let a = run(p, &els[..cut], &advice);
            let b = run(p, &els[cut..], &advice);
            assert_eq!(a.merge(&b).unwrap().to_state(), whole);
        }
    }

    #[test]
    fn merge_identity_and_mismatch() {
        let els = stream(40, 1);
        let advice = noisy_advice(&els, 1);
        let s = run(params(2, 3, 3, 4), &els, &advice);
        let empty = AdviceSketch::new(params(2, 3, 3, 4)).unwrap();
        assert_eq!(s.merge(&empty).unwrap().to_state(), s.to_state());
        assert_eq!(empty.merge(&s).unwrap().to_state(), s.to_state());
        let other = AdviceSketch::new(params(2, 3, 3, 5)).unwrap();
        assert!(matches!(s.merge(&other), Err(Error::ConfigMismatch(_))));
    }

    #[test]
    fn state_round_trip() {
        let els = stream(120, 6);
        let advice = noisy_advice(&els, 6);
        let s = run(params(3, 5, 4, 3), &els, &advice);
        let json = serde_json::to_string(&s.to_state()).unwrap();
        let back = AdviceSketch::from_state(serde_json::from_str(&json).unwrap()).unwrap();
        assert_eq!(back.to_state(), s.to_state());
        assert_eq!(back.to_sample(), s.to_sample());
        // a key that cannot qualify is rejected
        let mut forged = s.to_state();
        forged.sampled.push(AdviceEntry {
            key: Key::from("intruder"),
            frequency: 1.0,
            advice: 0.0,
        });
        let result = AdviceSketch::from_state(forged);
        assert!(result.is_err());
    }

    #[test]
    fn inclusion_formula() {
        let hash = HashSource::exp1(0);
        let ln2 = std::f64::consts::LN_2;
        assert!((advice_inclusion(&hash, 1.0, ln2, 0.0) - 0.5).abs() < 1e-15);
        assert!((advice_inclusion(&hash, 0.0, f64::INFINITY, ln2) - 0.5).abs() < 1e-15);
        assert_eq!(advice_inclusion(&hash, 2.0, f64::INFINITY, 0.1), 1.0);
        assert_eq!(advice_inclusion(&hash, 0.0, f64::INFINITY, 0.0), 0.0);
        let pri = HashSource::uniform(0);
        assert_eq!(advice_inclusion(&pri, 4.0, 0.5, 0.1), 1.0);
        assert!((advice_inclusion(&pri, 0.5, 0.5, 0.1) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn perfect_advice_couples_with_ppswor() {
        // (0, k+1, 0) by-advice with a = w is bottom-k on w^q with the same hash
        let w = crate::zipf::gen_zipf(&crate::zipf::ZipfModel::exact(1.1, 300, 1000.0), 0).unwrap();
        let els: Vec<Element> = w.iter().map(|(k, f)| Element::new(k.clone(), f)).collect();
        let advice = AdviceMap::from_frequencies(&w);
        for q in [1.0, 2.0] {
            for seed in 0..50u64 {
                let k = 10;
                let p = AdviceParams::new(0, k + 1, 0, FreqFn::power(q).unwrap(), Scheme::Ppswor, seed).unwrap();
                let mut adv = run(p, &els, &advice).to_sample().records;
                let mut bk = BottomKSketch::new(SamplerConfig::ppswor(k, q, seed).unwrap()).unwrap();
                bk.process(&w).unwrap();
                let mut base = bk.finalize().records;
                adv.sort_by(|a, b| a.key.cmp(&b.key));
                base.sort_by(|a, b| a.key.cmp(&b.key));
                assert_eq!(adv, base, "q={q} seed={seed}");
            }
        }
    }

    fn small_instance() -> (Vec<Element>, AdviceMap) {
        let w: Vec<(String, f64)> = (1..=20).map(|i| (format!("x{i}"), (40.0 / i as f64).ceil())).collect();
        let els: Vec<Element> = w.iter().map(|(k, f)| Element::new(k.as_str(), *f)).collect();
        // adversarial advice: light keys predicted heavy, several heavy keys unpredicted
        let advice = AdviceMap::from_pairs(w.iter().enumerate().map(|(i, (k, _))| {
            let a = if i % 3 == 0 { 0.0 } else { (i + 1) as f64 };
            (k.as_str(), a)
        }))
        .unwrap();
        (els, advice)
    }

    #[test]
    fn unbiased_under_adversarial_advice() {
        let (els, advice) = small_instance();
        let target = m(2.0);
        let truth: f64 = els.iter().map(|e| target.eval(e.value)).sum();
        let trials = 10_000u64;
        let (mut s1, mut s2) = (0.0, 0.0);
        for seed in 0..trials {
            let p = AdviceParams::new(2, 4, 3, target, Scheme::Ppswor, seed).unwrap();
            let est = run(p, &els, &advice).estimate();
            s1 += est;
            s2 += est * est;
        }
        let mean = s1 / trials as f64;
        let se = ((s2 / trials as f64 - mean * mean) / trials as f64).sqrt();
        assert!((mean - truth).abs() <= 4.0 * se, "{mean} vs {truth} (se {se})");
    }

    #[test]
    fn inverse_probability_indicator_has_unit_mean() {
        let (els, advice) = small_instance();
        let trials = 10_000u64;
        let keys: Vec<Key> = els.iter().map(|e| e.key.clone()).collect();
        let mut sums = vec![(0.0f64, 0.0f64); keys.len()];
        for seed in 0..trials {
            let p = AdviceParams::new(1, 3, 3, m(1.0), Scheme::Priority, seed).unwrap();
            let sample = run(p, &els, &advice).to_sample();
            for (i, k) in keys.iter().enumerate() {
                if let Some(r) = sample.get(k.as_str()) {
                    let v = 1.0 / r.inclusion_probability;
                    sums[i].0 += v;
                    sums[i].1 += v * v;
                }
            }
        }
        for (i, (s1, s2)) in sums.into_iter().enumerate() {
            let mean = s1 / trials as f64;
            let se = ((s2 / trials as f64 - mean * mean) / trials as f64).sqrt();
            assert!((mean - 1.0).abs() <= 3.0 * se + 1e-12, "key {i}: {mean} ± {se}");
        }
    }

    #[test]
    fn conditional_variance_matches_sketch_probabilities() {
        // for sampled keys the evaluator uses the same thresholds as the estimator
        let els = stream(60, 12);
        let w = crate::frequency::aggregate(els.iter().cloned()).unwrap();
        let advice = noisy_advice(&els, 12);
        let p = AdviceParams::new(2, 5, 4, m(2.0), Scheme::Ppswor, 77).unwrap();
        let sample = run(p, &els, &advice).to_sample();
        let sampled_part: f64 = sample
            .records
            .iter()
            .map(|r| (1.0 / r.inclusion_probability - 1.0) * m(2.0).eval(r.frequency).powi(2))
            .sum();
        let total = conditional_variance(&w, &advice, &p, &m(2.0)).unwrap();
        assert!(total >= sampled_part * (1.0 - 1e-12));
        let everything = AdviceParams::new(60, 1, 1, m(2.0), Scheme::Ppswor, 77).unwrap();
        assert_eq!(conditional_variance(&w, &advice, &everything, &m(2.0)).unwrap(), 0.0);
    }
}
