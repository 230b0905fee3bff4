use std::collections::BTreeMap;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{SampleMeta, SampleRecord, SampleScheme, WeightedSample};
use crate::error::{invalid, Error, Result};
use crate::frequency::{exact_sum, FrequencyVector};
use crate::func::FreqFn;

/// `1 - (1 - p)^k`: probability that `k` independent draws hit a key of
/// per-draw probability `p` at least once.
pub fn wr_inclusion_probability(p: f64, k: usize) -> f64 {
    if p >= 1.0 {
        return 1.0;
    }
    if p <= 0.0 {
        return 0.0;
    }
    -(k as f64 * (-p).ln_1p()).exp_m1()
}

/// `k` independent draws with probabilities `f(w_x) / ‖f(w)‖₁`. The sample
/// holds each distinct drawn key once, with its with-replacement inclusion
/// probability.
pub fn sample_with_replacement(w: &FrequencyVector, f: &FreqFn, k: usize, rng_seed: u64) -> Result<WeightedSample> {
    if k == 0 {
        return Err(invalid("sample size k must be >= 1"));
    }
    let values = w.apply(f);
    if !(values.norm > 0.0) {
        return Err(Error::ZeroNorm);
    }
    let dist = WeightedIndex::new(values.values.iter().map(|(_, v)| *v)).map_err(|_| Error::ZeroNorm)?;
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut drawn = BTreeMap::new();
    for _ in 0..k {
        drawn.entry(dist.sample(&mut rng)).or_insert(());
    }
    let records = drawn
        .into_keys()
        .map(|i| {
            let (key, v) = &values.values[i];
            SampleRecord {
                key: key.clone(),
                frequency: w.get(key.as_str()).expect("key from w"),
                inclusion_probability: wr_inclusion_probability(v / values.norm, k),
            }
        })
        .collect();
    let meta = SampleMeta {
        scheme: SampleScheme::WithReplacement,
        k,
        weight: *f,
        threshold: None,
    };
    Ok(WeightedSample { meta, records })
}

/// Sum of the per-key variances of the inverse-probability estimates of
/// `‖target(w)‖₁` from a with-replacement sample of size `k` drawn by
/// `weight`: `Σ (1/p'_x - 1) target(w_x)²`. Infinite when some key with
/// positive target value can never be drawn.
///
/// Inclusions of distinct keys are negatively correlated under
/// with-replacement draws, so this overstates the variance of the sum when a
/// few keys carry most of the draw probability. It is accurate when all
/// per-draw probabilities are small. [`wr_variance_with_covariance`] gives the
/// variance of the sum including the cross terms.
pub fn exact_wr_variance(w: &FrequencyVector, target: &FreqFn, weight: &FreqFn, k: usize) -> Result<f64> {
    if k == 0 {
        return Err(invalid("sample size k must be >= 1"));
    }
    let norm = w.norm(weight);
    if !(norm > 0.0) {
        return Err(Error::ZeroNorm);
    }
    let mut terms = Vec::with_capacity(w.len());
    for (_, wx) in w.iter() {
        let t = target.eval(wx);
        if t == 0.0 {
            continue;
        }
        let p = wr_inclusion_probability(weight.eval(wx) / norm, k);
        if p == 0.0 {
            return Ok(f64::INFINITY);
        }
        terms.push((1.0 / p - 1.0) * t * t);
    }
    Ok(exact_sum(terms))
}

/// Variance of the with-replacement estimate of `‖target(w)‖₁`, including the
/// covariance between keys:
/// `Σ_x Σ_y f_x f_y (Pr[x, y both sampled] / (p'_x p'_y) - 1)`.
/// Quadratic in the support size.
pub fn wr_variance_with_covariance(w: &FrequencyVector, target: &FreqFn, weight: &FreqFn, k: usize) -> Result<f64> {
    if k == 0 {
        return Err(invalid("sample size k must be >= 1"));
    }
    let norm = w.norm(weight);
    if !(norm > 0.0) {
        return Err(Error::ZeroNorm);
    }
    // (target value, per-draw probability, inclusion probability)
    let mut keys = Vec::with_capacity(w.len());
    for (_, wx) in w.iter() {
        let t = target.eval(wx);
        if t == 0.0 {
            continue;
        }
        let p = weight.eval(wx) / norm;
        let incl = wr_inclusion_probability(p, k);
        if incl == 0.0 {
            return Ok(f64::INFINITY);
        }
        keys.push((t, p, incl));
    }
    let mut terms = Vec::with_capacity(keys.len() * keys.len());
    for (i, &(tx, px, ix)) in keys.iter().enumerate() {
        terms.push((1.0 / ix - 1.0) * tx * tx);
        for &(ty, py, iy) in &keys[i + 1..] {
            // Pr[both] = p'_x + p'_y - Pr[either]
            let both = ix + iy - wr_inclusion_probability(px + py, k);
            terms.push(2.0 * tx * ty * (both / (ix * iy) - 1.0));
        }
    }
    Ok(exact_sum(terms).max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fv(pairs: &[(&str, f64)]) -> FrequencyVector {
        FrequencyVector::from_pairs(pairs.iter().map(|(k, w)| (*k, *w))).unwrap()
    }

    #[test]
    fn inclusion_examples() {
        assert_eq!(wr_inclusion_probability(0.5, 1), 0.5);
        assert!((wr_inclusion_probability(0.75, 2) - 0.9375).abs() < 1e-15);
        assert_eq!(wr_inclusion_probability(0.01, 10_000), 1.0);
        assert_eq!(wr_inclusion_probability(1.0, 3), 1.0);
    }

    #[test]
    fn sample_probabilities() {
        let s = sample_with_replacement(&fv(&[("a", 3.0), ("b", 1.0)]), &FreqFn::Identity, 2, 5).unwrap();
        for r in &s.records {
            let want = if r.key.as_str() == "a" {
                0.9375
            } else {
                1.0 - 0.75f64.powi(2)
            };
            assert!((r.inclusion_probability - want).abs() < 1e-12);
        }
        let s = sample_with_replacement(&fv(&[("a", 1.0), ("b", 1.0)]), &FreqFn::Identity, 1, 5).unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s.records[0].inclusion_probability, 0.5);
    }

    #[test]
    fn zero_norm_is_an_error() {
        let w = fv(&[("a", 1.0)]);
        assert!(matches!(
            sample_with_replacement(&w, &FreqFn::Threshold(5.0), 3, 0),
            Err(Error::ZeroNorm)
        ));
        assert!(matches!(
            sample_with_replacement(&FrequencyVector::default(), &FreqFn::Identity, 3, 0),
            Err(Error::ZeroNorm)
        ));
    }

    #[test]
    fn variance_examples() {
        let w = fv(&[("a", 1.0), ("b", 1.0)]);
        let m2 = FreqFn::moment(2.0).unwrap();
        assert_eq!(exact_wr_variance(&w, &m2, &FreqFn::Identity, 1).unwrap(), 2.0);
        assert!(exact_wr_variance(&w, &m2, &FreqFn::Identity, 100_000).unwrap() < 1e-300);
        assert_eq!(
            exact_wr_variance(&fv(&[("a", 7.0)]), &m2, &FreqFn::Identity, 1).unwrap(),
            0.0
        );
        // a key that the weighting never draws
        let w = fv(&[("a", 5.0), ("b", 1.0)]);
        assert_eq!(
            exact_wr_variance(&w, &FreqFn::Identity, &FreqFn::Threshold(2.0), 4).unwrap(),
            f64::INFINITY
        );
    }

    fn empirical_variance(w: &FrequencyVector, target: &FreqFn, weight: &FreqFn, k: usize, trials: u64) -> f64 {
        let truth = w.norm(target);
        let mut acc = 0.0;
        for seed in 0..trials {
            let s = sample_with_replacement(w, weight, k, seed).unwrap();
            let est: f64 = s
                .records
                .iter()
                .map(|r| target.eval(r.frequency) / r.inclusion_probability)
                .sum();
            acc += (est - truth).powi(2);
        }
        acc / trials as f64
    }

    #[test]
    fn covariance_variance_matches_simulation() {
        let w = fv(&[("a", 10.0), ("b", 6.0), ("c", 3.0), ("d", 2.0), ("e", 1.0)]);
        let target = FreqFn::moment(2.0).unwrap();
        for k in [1, 3, 8] {
            let exact = wr_variance_with_covariance(&w, &target, &FreqFn::Identity, k).unwrap();
            let empirical = empirical_variance(&w, &target, &FreqFn::Identity, k, 100_000);
            assert!((empirical / exact - 1.0).abs() < 0.05, "k={k}: {empirical} vs {exact}");
            // the per-key sum ignores the negative cross terms
            assert!(exact_wr_variance(&w, &target, &FreqFn::Identity, k).unwrap() >= exact);
        }
    }

    #[test]
    fn two_unit_keys_single_draw() {
        // the estimate is 2 on every draw
        let w = fv(&[("a", 1.0), ("b", 1.0)]);
        let m2 = FreqFn::moment(2.0).unwrap();
        assert!(
            wr_variance_with_covariance(&w, &m2, &FreqFn::Identity, 1)
                .unwrap()
                .abs()
                < 1e-12
        );
    }
}
