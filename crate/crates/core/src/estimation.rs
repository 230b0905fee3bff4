//! Inverse-probability estimators and error evaluation.

use std::collections::{HashMap, HashSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::advice::{self, AdviceMap, AdviceParams, AdviceSketch};
use crate::error::{invalid, Error, Result};
use crate::frequency::{exact_sum, Element, FrequencyVector, Key};
use crate::func::FreqFn;
use crate::hash::mix_seed;
use crate::samplers::{
    self, exact_wr_variance, sample_with_replacement, BottomKSketch, SamplerConfig, Scheme, WeightedSample,
};

/// Number of runs averaged by default when evaluating without-replacement samplers.
pub const DEFAULT_TRIALS: usize = 50;

/// Key selection of a domain query.
#[derive(Debug, Clone, Default, PartialEq)]
pub enum Domain {
    #[default]
    All,
    Keys(HashSet<Key>),
}

impl Domain {
    pub fn keys<K: Into<Key>>(keys: impl IntoIterator<Item = K>) -> Self {
        Domain::Keys(keys.into_iter().map(Into::into).collect())
    }

    #[inline]
    pub fn contains(&self, key: &str) -> bool {
        match self {
            Domain::All => true,
            Domain::Keys(set) => set.contains(key),
        }
    }
}

/// `Σ_{x in H} L_x f(w_x)`. Keys without a coefficient have `L_x = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainQuery {
    pub f: FreqFn,
    pub domain: Domain,
    pub coefficients: HashMap<Key, f64>,
}

impl DomainQuery {
    /// The full statistic `‖f(w)‖₁`.
    pub fn total(f: FreqFn) -> Self {
        DomainQuery {
            f,
            domain: Domain::All,
            coefficients: HashMap::new(),
        }
    }

    pub fn over(f: FreqFn, domain: Domain) -> Self {
        DomainQuery {
            f,
            domain,
            coefficients: HashMap::new(),
        }
    }

    pub fn with_coefficients(mut self, coefficients: HashMap<Key, f64>) -> Self {
        self.coefficients = coefficients;
        self
    }

    #[inline]
    fn coefficient(&self, key: &str) -> f64 {
        self.coefficients.get(key).copied().unwrap_or(1.0)
    }

    /// The exact value of the query on `w`.
    pub fn exact(&self, w: &FrequencyVector) -> f64 {
        exact_sum(
            w.iter()
                .filter(|(k, _)| self.domain.contains(k.as_str()))
                .map(|(k, wx)| self.coefficient(k.as_str()) * self.f.eval(wx)),
        )
    }
}

/// Unbiased estimate `Σ_{x in S ∩ H} L_x f(w_x) / p'_x`.
pub fn estimate_query(sample: &WeightedSample, query: &DomainQuery) -> Result<f64> {
    let mut terms = Vec::with_capacity(sample.len());
    for r in &sample.records {
        if !(r.inclusion_probability > 0.0) {
            return Err(Error::ZeroProbability(r.key.clone()));
        }
        if query.domain.contains(r.key.as_str()) {
            terms.push(query.coefficient(r.key.as_str()) * query.f.eval(r.frequency) / r.inclusion_probability);
        }
    }
    Ok(exact_sum(terms))
}

/// Estimate of `‖f(w)‖₁` from a sample.
pub fn estimate_total(sample: &WeightedSample, f: &FreqFn) -> Result<f64> {
    estimate_query(sample, &DomainQuery::total(*f))
}

/// A sampled key with its estimated rank.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankPoint {
    pub key: Key,
    pub frequency: f64,
    pub rank: f64,
}

/// For every sampled key, the estimate of the number of keys with frequency
/// at least its own: `Σ_{y in S} I[w_y >= w_x] / p'_y`. Sorted by frequency,
/// descending.
pub fn estimate_rank_distribution(sample: &WeightedSample) -> Result<Vec<RankPoint>> {
    let mut recs: Vec<(f64, &Key, f64)> = Vec::with_capacity(sample.len());
    for r in &sample.records {
        if !(r.inclusion_probability > 0.0) {
            return Err(Error::ZeroProbability(r.key.clone()));
        }
        recs.push((r.frequency, &r.key, 1.0 / r.inclusion_probability));
    }
    recs.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| a.1.cmp(b.1)));
    let mut out = Vec::with_capacity(recs.len());
    let mut i = 0;
    let mut prefix: Vec<f64> = Vec::with_capacity(recs.len());
    while i < recs.len() {
        // all keys tied at this frequency count toward each other
        let mut j = i;
        while j < recs.len() && recs[j].0 == recs[i].0 {
            prefix.push(recs[j].2);
            j += 1;
        }
        let rank = exact_sum(prefix.iter().copied());
        for &(f, k, _) in &recs[i..j] {
            out.push(RankPoint {
                key: k.clone(),
                frequency: f,
                rank,
            });
        }
        i = j;
    }
    Ok(out)
}

/// Estimate of the number of keys with frequency at least `frequency`:
/// `Σ_{y in S} I[w_y >= frequency] / p'_y`, the rank-threshold statistic.
/// Unbiased for every threshold, whether or not a key of that frequency was
/// sampled.
pub fn estimate_rank(sample: &WeightedSample, frequency: f64) -> Result<f64> {
    estimate_query(sample, &DomainQuery::total(FreqFn::RankThreshold(frequency)))
}

/// Variance bound for inverse-probability estimates from a pps sample of size
/// `k` by `f`: `(Σ_{x in H} f(w_x)) ‖f(w)‖₁ / k`. A single-key domain gives
/// the per-key bound and [`Domain::All`] the bound `‖f(w)‖₁² / k`.
pub fn benchmark_bound(w: &FrequencyVector, f: &FreqFn, k: usize, domain: &Domain) -> Result<f64> {
    if k == 0 {
        return Err(invalid("sample size k must be >= 1"));
    }
    let norm = w.norm(f);
    let part = match domain {
        Domain::All => norm,
        Domain::Keys(_) => exact_sum(
            w.iter()
                .filter(|(x, _)| domain.contains(x.as_str()))
                .map(|(_, wx)| f.eval(wx)),
        ),
    };
    Ok(part * norm / k as f64)
}

/// NRMSE of the full-statistic benchmark bound: `1/√k`.
pub fn benchmark_nrmse(k: usize) -> f64 {
    1.0 / (k as f64).sqrt()
}

/// A sampler to evaluate. Hash and RNG seeds are supplied per run.
#[derive(Debug, Clone, Copy)]
pub enum SamplerSpec<'a> {
    /// Bottom-k (ppswor or priority) on `w^q`.
    BottomK { scheme: Scheme, q: f64, k: usize },
    /// `k` independent draws by `weight`.
    WithReplacement { weight: FreqFn, k: usize },
    /// Sample by advice.
    Advice {
        k_h: usize,
        k_p: usize,
        k_u: usize,
        f: FreqFn,
        scheme: Scheme,
        advice: &'a AdviceMap,
    },
}

impl SamplerSpec<'_> {
    /// Stored sample size.
    pub fn size(&self) -> usize {
        match *self {
            SamplerSpec::BottomK { k, .. } | SamplerSpec::WithReplacement { k, .. } => k,
            SamplerSpec::Advice { k_h, k_p, k_u, .. } => k_h + k_p + k_u,
        }
    }

    /// Draw one sample of `w` with randomization `seed`.
    pub fn sample(&self, w: &FrequencyVector, seed: u64) -> Result<WeightedSample> {
        match *self {
            SamplerSpec::BottomK { scheme, q, k } => {
                let mut s = BottomKSketch::new(SamplerConfig::new(k, q, scheme, seed)?)?;
                s.process(w)?;
                Ok(s.finalize())
            }
            SamplerSpec::WithReplacement { weight, k } => sample_with_replacement(w, &weight, k, seed),
            SamplerSpec::Advice {
                k_h,
                k_p,
                k_u,
                f,
                scheme,
                advice,
            } => {
                let mut s = AdviceSketch::new(AdviceParams::new(k_h, k_p, k_u, f, scheme, seed)?)?;
                for (key, wx) in w.iter() {
                    s.process(
                        &Element {
                            key: key.clone(),
                            value: wx,
                        },
                        advice,
                    )?;
                }
                Ok(s.to_sample())
            }
        }
    }
}

/// Accuracy of a sampler's estimate of `‖f(w)‖₁`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    /// Mean of the per-run estimates; absent when the variance is analytic.
    #[serde(default, with = "crate::float_serde::option")]
    pub estimate_mean: Option<f64>,
    pub exact: f64,
    #[serde(with = "crate::float_serde")]
    pub variance: f64,
    /// `√variance / exact`.
    #[serde(with = "crate::float_serde")]
    pub nrmse: f64,
    /// Runs averaged; 0 when the variance is analytic.
    pub trials: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub per_trial: Vec<f64>,
}

/// NRMSE of the sampler's estimate of `‖f(w)‖₁`.
///
/// With-replacement samplers use the analytic per-key variance. Bottom-k and
/// advice samplers average, over `trials` runs with hash seeds derived from
/// `seed`, the conditional variance given the other keys' seeds. Runs are
/// evaluated in parallel and reduced in run order, so the report depends only
/// on the arguments.
pub fn evaluate_nrmse(
    w: &FrequencyVector,
    f: &FreqFn,
    spec: &SamplerSpec<'_>,
    trials: usize,
    seed: u64,
) -> Result<ErrorReport> {
    let exact = w.norm(f);
    if !(exact > 0.0) {
        return Err(Error::ZeroNorm);
    }
    if let SamplerSpec::WithReplacement { weight, k } = *spec {
        let variance = exact_wr_variance(w, f, &weight, k)?;
        return Ok(ErrorReport {
            estimate_mean: None,
            exact,
            variance,
            nrmse: variance.sqrt() / exact,
            trials: 0,
            per_trial: Vec::new(),
        });
    }
    if trials == 0 {
        return Err(invalid("trial count must be >= 1"));
    }
    let runs: Vec<(f64, f64)> = (0..trials as u64)
        .into_par_iter()
        .map(|run| {
            let run_seed = mix_seed(seed, run);
            let var = run_variance(w, f, spec, run_seed)?;
            let est = estimate_total(&spec.sample(w, run_seed)?, f)?;
            Ok((var, est))
        })
        .collect::<Result<_>>()?;
    let variance = exact_sum(runs.iter().map(|r| r.0)) / trials as f64;
    let per_trial: Vec<f64> = runs.iter().map(|r| r.1).collect();
    Ok(ErrorReport {
        estimate_mean: Some(exact_sum(per_trial.iter().copied()) / trials as f64),
        exact,
        variance,
        nrmse: variance.sqrt() / exact,
        trials,
        per_trial,
    })
}

fn run_variance(w: &FrequencyVector, f: &FreqFn, spec: &SamplerSpec<'_>, seed: u64) -> Result<f64> {
    match *spec {
        SamplerSpec::BottomK { scheme, q, k } => {
            samplers::conditional_variance(w, &SamplerConfig::new(k, q, scheme, seed)?, f)
        }
        SamplerSpec::Advice {
            k_h,
            k_p,
            k_u,
            f: af,
            scheme,
            advice,
        } => advice::conditional_variance(w, advice, &AdviceParams::new(k_h, k_p, k_u, af, scheme, seed)?, f),
        SamplerSpec::WithReplacement { weight, k } => exact_wr_variance(w, f, &weight, k),
    }
}
