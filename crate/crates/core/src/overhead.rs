//! Overheads of emulating one weighted sample by another, heavy-hitter and
//! Zipf bounds, universal samples, and the combined report.
//!
//! All vectors are aligned to the rank order of a [`FrequencyVector`]
//! (descending frequency, ties by key), so rank-indexed formulas are well
//! defined under ties.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::frequency::{exact_sum, FrequencyVector, Key};
use crate::func::FreqFn;
use crate::samplers::WeightedSample;
use crate::zipf::{harmonic, subzipf_slack, zeta, zipf_fit};

/// Sampling probabilities over the active keys, in rank order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbVector(Vec<f64>);

impl ProbVector {
    /// Entries must be finite, nonnegative and sum to 1 within 1e-9.
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if let Some(bad) = probs.iter().find(|p| !(p.is_finite() && **p >= 0.0)) {
            return Err(invalid(format!("probability {bad} is not finite and nonnegative")));
        }
        let total = exact_sum(probs.iter().copied());
        if (total - 1.0).abs() > 1e-9 {
            return Err(invalid(format!("probabilities sum to {total}, not 1")));
        }
        Ok(ProbVector(probs))
    }

    /// Normalize nonnegative weights.
    pub fn from_weights(weights: &[f64]) -> Result<Self> {
        if weights.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(invalid("weights must be finite and nonnegative"));
        }
        let norm = exact_sum(weights.iter().copied());
        if !(norm > 0.0) {
            return Err(Error::ZeroNorm);
        }
        Ok(ProbVector(weights.iter().map(|v| v / norm).collect()))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// `p_x = f(w_x) / ‖f(w)‖₁` in rank order.
pub fn pps_probs(f: &FreqFn, w: &FrequencyVector) -> Result<ProbVector> {
    let values: Vec<f64> = w.iter().map(|(_, wx)| f.eval(wx)).collect();
    ProbVector::from_weights(&values)
}

fn aligned(p: &ProbVector, q: &ProbVector) -> Result<()> {
    if p.len() != q.len() {
        return Err(invalid(format!(
            "probability vectors have lengths {} and {}",
            p.len(),
            q.len()
        )));
    }
    Ok(())
}

/// `h(p, q) = max_x p_x / q_x`: the factor by which a sample by `q` must be
/// larger to emulate a sample by `p`. `+inf` when some `q_x = 0 < p_x`.
pub fn max_overhead(p: &ProbVector, q: &ProbVector) -> Result<f64> {
    aligned(p, q)?;
    let mut h: f64 = 0.0;
    for (&px, &qx) in p.0.iter().zip(&q.0) {
        if px > 0.0 {
            if qx == 0.0 {
                return Ok(f64::INFINITY);
            }
            h = h.max(px / qx);
        }
    }
    Ok(h)
}

/// `E_{x~p}[p_x / q_x] = Σ p_x² / q_x`.
pub fn expected_overhead(p: &ProbVector, q: &ProbVector) -> Result<f64> {
    aligned(p, q)?;
    let mut terms = Vec::with_capacity(p.len());
    for (&px, &qx) in p.0.iter().zip(&q.0) {
        if px > 0.0 {
            if qx == 0.0 {
                return Ok(f64::INFINITY);
            }
            terms.push(px * px / qx);
        }
    }
    Ok(exact_sum(terms))
}

/// `‖w/w₁‖_p^p`, with `p = +inf` counting the keys tied with the maximum.
pub fn normalized_moment(w: &FrequencyVector, p: f64) -> f64 {
    let Some(w1) = w.max() else { return 0.0 };
    exact_sum(w.iter().map(|(_, wx)| (wx / w1).powf(p)))
}

/// Overhead of emulating `l_p` sampling (weights `w^p`) with `l_q`
/// sampling: `‖w/w₁‖_q^q / ‖w/w₁‖_p^p`, which equals
/// `max_overhead(pps(w^p), pps(w^q))`. `p` may be `+inf`.
pub fn lq_lp_overhead(w: &FrequencyVector, p: f64, q: f64) -> Result<f64> {
    if !(q > 0.0 && q.is_finite()) {
        return Err(invalid(format!("sampling exponent q must be > 0, got {q}")));
    }
    if !(p >= q) {
        return Err(invalid(format!("emulating l_{p} by l_{q} sampling needs p >= q")));
    }
    if w.is_empty() {
        return Err(Error::ZeroNorm);
    }
    Ok(normalized_moment(w, q) / normalized_moment(w, p))
}

/// Share `φ = w₁^q / ‖w‖_q^q` of the top key. Every key is a φ-heavy hitter
/// at this share or below; `1/φ` bounds the overhead of emulating every
/// `l_p`, `p >= q`, with `l_q` sampling.
pub fn heavy_hitter_phi(w: &FrequencyVector, q: f64) -> Result<f64> {
    if !(q > 0.0 && q.is_finite()) {
        return Err(invalid(format!("q must be > 0, got {q}")));
    }
    if w.is_empty() {
        return Err(Error::ZeroNorm);
    }
    Ok(1.0 / normalized_moment(w, q))
}

/// Post-hoc certificate that an `l_q` sample of size `k` emulates `l_p`
/// samples (`p > q`) of size `k r`, with `r` the largest sampled share.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub key: Key,
    pub r: f64,
    pub equivalent_size: f64,
}

/// `norm` is `‖w‖_q^q` for the weighting the sample was drawn by.
pub fn certify_emulation(sample: &WeightedSample, norm: f64, k: usize) -> Result<Certificate> {
    if !(norm > 0.0) {
        return Err(Error::ZeroNorm);
    }
    let weight = sample.meta.weight;
    let best = sample
        .records
        .iter()
        .map(|r| (weight.eval(r.frequency) / norm, &r.key))
        .max_by(|a, b| a.0.total_cmp(&b.0).then_with(|| b.1.cmp(a.1)))
        .ok_or_else(|| invalid("cannot certify an empty sample"))?;
    Ok(Certificate {
        key: best.1.clone(),
        r: best.0,
        equivalent_size: k as f64 * best.0,
    })
}

/// Bounds on `‖w/w₁‖_q^q` for `subZipf[alpha, c, n]` frequencies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubZipfBound {
    pub q: f64,
    /// `c^q H_{n, q alpha}`.
    pub harmonic: f64,
    /// `c^q min(1 + ln n, ζ(q alpha))` when `q alpha > 1`; `c^q (1 + ln n)`
    /// when `q alpha = 1`.
    #[serde(
        default,
        with = "crate::float_serde::option",
        skip_serializing_if = "Option::is_none"
    )]
    pub closed_form: Option<f64>,
}

pub fn subzipf_bound(alpha: f64, c: f64, n: usize, q: f64) -> Result<SubZipfBound> {
    if !(alpha > 0.0 && alpha.is_finite()) || !(c >= 1.0 && c.is_finite()) || !(q > 0.0 && q.is_finite()) || n == 0 {
        return Err(invalid("sub-Zipf bound needs alpha > 0, c >= 1, q > 0 and n >= 1"));
    }
    let beta = q * alpha;
    let cq = c.powf(q);
    let log_bound = 1.0 + (n as f64).ln();
    let closed_form = if beta > 1.0 {
        Some(cq * log_bound.min(zeta(beta)))
    } else if beta == 1.0 {
        Some(cq * log_bound)
    } else {
        None
    };
    Ok(SubZipfBound {
        q,
        harmonic: cq * harmonic(n, beta),
        closed_form,
    })
}

/// `max_i 1/(i q_i)`: overhead of `q` as a sample for every monotone
/// function of frequency at once. At least `H_n`, with equality for
/// `q_i = 1/(i H_n)`.
pub fn universal_emulation_overhead(q: &ProbVector) -> f64 {
    let mut h: f64 = 0.0;
    for (i, &qi) in q.0.iter().enumerate() {
        if qi == 0.0 {
            return f64::INFINITY;
        }
        h = h.max(1.0 / ((i + 1) as f64 * qi));
    }
    h
}

/// `max_i (1/i²) Σ_{j<=i} 1/q_j`: overhead for estimating every monotone
/// f-statistic (the worst case being the rank-threshold functions).
pub fn universal_estimation_overhead(q: &ProbVector) -> f64 {
    let mut h: f64 = 0.0;
    let mut prefix = 0.0;
    for (i, &qi) in q.0.iter().enumerate() {
        if qi == 0.0 {
            return f64::INFINITY;
        }
        prefix += 1.0 / qi;
        let i = (i + 1) as f64;
        h = h.max(prefix / (i * i));
    }
    h
}

/// Base probabilities `q'_i = w_i / (i w_i + Σ_{j>i} w_j)` of the
/// concave-sublinear multi-objective sample, normalized, and the emulation
/// factor `‖q'‖₁`.
pub fn concave_sublinear_probs(w: &FrequencyVector) -> Result<(ProbVector, f64)> {
    if w.is_empty() {
        return Err(Error::ZeroNorm);
    }
    let ws = w.weights();
    let tails = suffix_sums(&ws);
    let qp: Vec<f64> = ws
        .iter()
        .enumerate()
        .map(|(i, &wi)| wi / ((i + 1) as f64 * wi + tails[i + 1]))
        .collect();
    let factor = exact_sum(qp.iter().copied());
    Ok((ProbVector(qp.iter().map(|v| v / factor).collect()), factor))
}

/// `tails[i] = Σ_{j>=i} w_j` (0-based), computed exactly; `tails[n] = 0`.
fn suffix_sums(ws: &[f64]) -> Vec<f64> {
    let mut tails = vec![0.0; ws.len() + 1];
    let mut acc = crate::frequency::ExactSum::default();
    for i in (0..ws.len()).rev() {
        acc.add(ws[i]);
        tails[i] = acc.value();
    }
    tails
}

/// `c = min_{i<n} i w_i / Σ_{j>i} w_j` and the universal overhead factor
/// `(1 + 1/c) H_n` of the concave-sublinear sample. For `n < 2`, `c = +inf`.
pub fn concave_universal_condition(w: &FrequencyVector) -> Result<(f64, f64)> {
    let n = w.len();
    if n == 0 {
        return Err(Error::ZeroNorm);
    }
    let hn = harmonic(n, 1.0);
    let ws = w.weights();
    let tails = suffix_sums(&ws);
    let c = (0..n - 1)
        .map(|i| (i + 1) as f64 * ws[i] / tails[i + 1])
        .fold(f64::INFINITY, f64::min);
    Ok((c, (1.0 + 1.0 / c) * hn))
}

/// `n^{1-2/p}`: overhead of `l_2` sampling for `l_p`, `p >= 2`, on any
/// support of size `n`.
pub fn worst_case_bound(n: usize, p: f64) -> Result<f64> {
    if !(p >= 2.0) {
        return Err(invalid(format!("worst-case bound needs p >= 2, got {p}")));
    }
    Ok((n as f64).powf(1.0 - 2.0 / p))
}

/// `(w₁/w_n)^p`: overhead of `l_1` or `l_0` sampling for `l_p` on
/// near-uniform frequencies.
pub fn near_uniform_bound(w: &FrequencyVector, p: f64) -> Result<f64> {
    match (w.max(), w.min()) {
        (Some(hi), Some(lo)) => Ok((hi / lo).powf(p)),
        _ => Err(Error::ZeroNorm),
    }
}

/// Base sampling schemes compared in an [`OverheadReport`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BaseScheme {
    L1,
    L2,
    ConcaveSublinear,
}

impl BaseScheme {
    pub const ALL: [BaseScheme; 3] = [BaseScheme::L1, BaseScheme::L2, BaseScheme::ConcaveSublinear];

    pub fn probs(self, w: &FrequencyVector) -> Result<ProbVector> {
        match self {
            BaseScheme::L1 => pps_probs(&FreqFn::Identity, w),
            BaseScheme::L2 => pps_probs(&FreqFn::Moment(2.0), w),
            BaseScheme::ConcaveSublinear => Ok(concave_sublinear_probs(w)?.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetOverhead {
    /// Target moment `p` (sampling by `w^p`).
    pub p: f64,
    #[serde(with = "crate::float_serde")]
    pub max_overhead: f64,
    #[serde(with = "crate::float_serde")]
    pub expected_overhead: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemeReport {
    pub scheme: BaseScheme,
    pub targets: Vec<TargetOverhead>,
    #[serde(with = "crate::float_serde")]
    pub universal_emulation: f64,
    #[serde(with = "crate::float_serde")]
    pub universal_estimation: f64,
    /// `‖q'‖₁` for the concave-sublinear scheme.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub emulation_factor: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeavyHitter {
    pub q: f64,
    pub phi: f64,
    /// `1/φ`.
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerBound {
    pub p: f64,
    #[serde(with = "crate::float_serde")]
    pub bound: f64,
}

/// Sub-Zipf bounds with the fitted exponent and the smallest slack `c`
/// making the data `subZipf[alpha, c, n]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZipfBounds {
    pub alpha: f64,
    pub c: f64,
    pub bounds: Vec<SubZipfBound>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverheadReport {
    pub n: usize,
    pub harmonic_n: f64,
    pub schemes: Vec<SchemeReport>,
    pub heavy_hitters: Vec<HeavyHitter>,
    /// `n^{1-2/p}` for targets `p >= 2`, bounding the `l_2` overheads.
    pub worst_case: Vec<PowerBound>,
    /// `(w₁/w_n)^p`, bounding the `l_1` overheads.
    pub near_uniform: Vec<PowerBound>,
    /// Absent for fewer than two keys.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zipf: Option<ZipfBounds>,
}

/// Overheads of the `l_1`, `l_2` and concave-sublinear samples for the
/// target moments `targets` on `w`, with every applicable bound.
pub fn overhead_report(w: &FrequencyVector, targets: &[f64], schemes: &[BaseScheme]) -> Result<OverheadReport> {
    if w.is_empty() {
        return Err(Error::ZeroNorm);
    }
    if let Some(p) = targets.iter().find(|p| !(p.is_finite() && **p > 0.0)) {
        return Err(invalid(format!("target moments must be > 0, got {p}")));
    }
    let n = w.len();
    let target_probs: Vec<ProbVector> = targets
        .iter()
        .map(|&p| pps_probs(&FreqFn::Moment(p), w))
        .collect::<Result<_>>()?;
    let mut scheme_reports = Vec::with_capacity(schemes.len());
    for &scheme in schemes {
        let (q, emulation_factor) = match scheme {
            BaseScheme::ConcaveSublinear => {
                let (q, f) = concave_sublinear_probs(w)?;
                (q, Some(f))
            }
            _ => (scheme.probs(w)?, None),
        };
        let targets = targets
            .iter()
            .zip(&target_probs)
            .map(|(&p, pp)| {
                Ok(TargetOverhead {
                    p,
                    max_overhead: max_overhead(pp, &q)?,
                    expected_overhead: expected_overhead(pp, &q)?,
                })
            })
            .collect::<Result<_>>()?;
        scheme_reports.push(SchemeReport {
            scheme,
            targets,
            universal_emulation: universal_emulation_overhead(&q),
            universal_estimation: universal_estimation_overhead(&q),
            emulation_factor,
        });
    }
    let heavy_hitters = [1.0, 2.0]
        .into_iter()
        .map(|q| {
            let phi = heavy_hitter_phi(w, q)?;
            Ok(HeavyHitter {
                q,
                phi,
                bound: 1.0 / phi,
            })
        })
        .collect::<Result<_>>()?;
    let worst_case = targets
        .iter()
        .filter(|&&p| p >= 2.0)
        .map(|&p| {
            Ok(PowerBound {
                p,
                bound: worst_case_bound(n, p)?,
            })
        })
        .collect::<Result<_>>()?;
    let near_uniform = targets
        .iter()
        .map(|&p| {
            Ok(PowerBound {
                p,
                bound: near_uniform_bound(w, p)?,
            })
        })
        .collect::<Result<_>>()?;
    let zipf = match zipf_fit(w) {
        Ok(alpha) if alpha > 0.0 => {
            let c = subzipf_slack(w, alpha);
            let bounds = [1.0, 2.0]
                .into_iter()
                .map(|q| subzipf_bound(alpha, c, n, q))
                .collect::<Result<_>>()?;
            Some(ZipfBounds { alpha, c, bounds })
        }
        _ => None,
    };
    Ok(OverheadReport {
        n,
        harmonic_n: harmonic(n, 1.0),
        schemes: scheme_reports,
        heavy_hitters,
        worst_case,
        near_uniform,
        zipf,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::samplers::{SampleMeta, SampleRecord, SampleScheme};
    use crate::zipf::{gen_zipf, ZipfModel};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn fv(ws: &[f64]) -> FrequencyVector {
        FrequencyVector::from_pairs(ws.iter().enumerate().map(|(i, &w)| (i as u64, w))).unwrap()
    }

    fn m(p: f64) -> FreqFn {
        FreqFn::moment(p).unwrap()
    }

    fn pv(ps: &[f64]) -> ProbVector {
        ProbVector::new(ps.to_vec()).unwrap()
    }

    #[test]
    fn pps_examples() {
        let w = fv(&[4.0, 2.0, 1.0]);
        let p = pps_probs(&m(2.0), &w).unwrap();
        assert_eq!(p.as_slice(), &[16.0 / 21.0, 4.0 / 21.0, 1.0 / 21.0]);
        let u = pps_probs(&m(5.0), &fv(&[3.0; 4])).unwrap();
        assert_eq!(u.as_slice(), &[0.25; 4]);
        let t = pps_probs(&FreqFn::Threshold(3.0), &w).unwrap();
        assert_eq!(t.as_slice(), &[1.0, 0.0, 0.0]);
        assert!(matches!(pps_probs(&FreqFn::Threshold(9.0), &w), Err(Error::ZeroNorm)));
        assert!(ProbVector::new(vec![0.5, 0.4]).is_err());
    }

    #[test]
    fn max_and_expected_examples() {
        let w = fv(&[4.0, 2.0, 1.0]);
        let p = pps_probs(&m(3.0), &w).unwrap();
        let q = pps_probs(&m(2.0), &w).unwrap();
        assert_eq!(max_overhead(&p, &p).unwrap(), 1.0);
        assert_relative_eq!(max_overhead(&p, &q).unwrap(), 1344.0 / 1168.0, max_relative = 1e-15);
        assert_relative_eq!(max_overhead(&p, &q).unwrap(), 1.15068, max_relative = 1e-5);
        assert_relative_eq!(expected_overhead(&p, &p).unwrap(), 1.0, max_relative = 1e-15);
        let e = 86016.0 / 85264.0 + 1344.0 / 21316.0 + 21.0 / 5329.0;
        assert_relative_eq!(expected_overhead(&p, &q).unwrap(), e, max_relative = 1e-14);
        assert_relative_eq!(e, 1.0758, max_relative = 1e-4);
        let zero = pv(&[1.0, 0.0]);
        assert_eq!(max_overhead(&pv(&[0.5, 0.5]), &zero).unwrap(), f64::INFINITY);
        assert_eq!(expected_overhead(&pv(&[0.5, 0.5]), &zero).unwrap(), f64::INFINITY);
    }

    #[test]
    fn lq_lp_examples() {
        assert_eq!(lq_lp_overhead(&fv(&[5.0; 7]), 3.0, 1.0).unwrap(), 1.0);
        let w = fv(&[4.0, 2.0, 1.0]);
        assert_relative_eq!(
            lq_lp_overhead(&w, 3.0, 2.0).unwrap(),
            1.3125 / 1.140625,
            max_relative = 1e-15
        );
        let z = gen_zipf(&ZipfModel::exact(1.0, 100, 1.0), 0).unwrap();
        assert_relative_eq!(
            lq_lp_overhead(&z, f64::INFINITY, 2.0).unwrap(),
            1.634983900184892,
            max_relative = 1e-13
        );
        assert!(lq_lp_overhead(&w, 1.0, 2.0).is_err());
    }

    #[test]
    fn heavy_hitter_examples() {
        let w = fv(&[8.0, 1.0, 1.0]);
        assert_eq!(heavy_hitter_phi(&w, 1.0).unwrap(), 0.8);
        assert_relative_eq!(heavy_hitter_phi(&w, 2.0).unwrap(), 64.0 / 66.0, max_relative = 1e-15);
        assert_eq!(heavy_hitter_phi(&fv(&[2.0; 5]), 1.5).unwrap(), 0.2);
    }

    #[test]
    fn certificate_examples() {
        let sample = |recs: &[(u64, f64)]| WeightedSample {
            meta: SampleMeta {
                scheme: SampleScheme::Ppswor,
                k: 10,
                weight: FreqFn::Identity,
                threshold: None,
            },
            records: recs
                .iter()
                .map(|&(k, f)| SampleRecord {
                    key: k.into(),
                    frequency: f,
                    inclusion_probability: 0.5,
                })
                .collect(),
        };
        let c = certify_emulation(&sample(&[(1, 1.0), (0, 8.0)]), 10.0, 10).unwrap();
        assert_eq!((c.key.as_str(), c.equivalent_size), ("0", 8.0));
        let u = certify_emulation(&sample(&[(3, 1.0), (4, 1.0)]), 20.0, 10).unwrap();
        assert_eq!(u.equivalent_size, 0.5);
        assert!(certify_emulation(&sample(&[]), 20.0, 10).is_err());
    }

    #[test]
    fn subzipf_examples() {
        let b = subzipf_bound(1.0, 1.0, 3, 1.0).unwrap();
        assert_relative_eq!(b.harmonic, 11.0 / 6.0, max_relative = 1e-15);
        assert!(b.harmonic <= b.closed_form.unwrap());
        for n in [10, 1000, 100_000] {
            let b = subzipf_bound(1.0, 1.0, n, 1.0).unwrap();
            assert!(b.harmonic <= 1.0 + (n as f64).ln());
        }
        let b = subzipf_bound(1.0, 1.0, 10_000_000, 2.0).unwrap();
        assert_relative_eq!(
            b.closed_form.unwrap(),
            std::f64::consts::PI.powi(2) / 6.0,
            max_relative = 1e-12
        );
        assert!(b.harmonic <= 1.65);
        let b = subzipf_bound(2.0, 1.5, 50, 2.0).unwrap();
        assert!(b.closed_form.unwrap() <= 1.65 * 1.5f64.powi(2));
        assert_eq!(subzipf_bound(0.4, 1.0, 50, 1.0).unwrap().closed_form, None);
    }

    #[test]
    fn universal_examples() {
        for n in [1usize, 2, 3, 10, 1000] {
            let hn = harmonic(n, 1.0);
            let q = pv(&(1..=n).map(|i| 1.0 / (i as f64 * hn)).collect::<Vec<_>>());
            assert_relative_eq!(universal_emulation_overhead(&q), hn, max_relative = 1e-12);
            let u = pv(&vec![1.0 / n as f64; n]);
            assert_relative_eq!(universal_emulation_overhead(&u), n as f64, max_relative = 1e-12);
            assert_relative_eq!(universal_estimation_overhead(&u), n as f64, max_relative = 1e-12);
        }
        let l1 = pps_probs(&FreqFn::Identity, &fv(&[2.0, 1.0, 1.0])).unwrap();
        assert_eq!(universal_emulation_overhead(&l1), 2.0);
        assert_eq!(universal_estimation_overhead(&pv(&[1.0])), 1.0);
        assert_relative_eq!(
            universal_estimation_overhead(&pv(&[2.0 / 3.0, 1.0 / 3.0])),
            1.5,
            max_relative = 1e-15
        );
    }

    #[test]
    fn concave_examples() {
        let (q, factor) = concave_sublinear_probs(&fv(&[4.0, 2.0, 1.0])).unwrap();
        let qp = [4.0 / 7.0, 2.0 / 5.0, 1.0 / 3.0];
        let total: f64 = qp.iter().sum();
        assert_relative_eq!(factor, total, max_relative = 1e-15);
        assert_relative_eq!(factor, 1.30476, max_relative = 1e-5);
        for (a, b) in q.as_slice().iter().zip(qp) {
            assert_relative_eq!(*a, b / total, max_relative = 1e-15);
        }
        let (q, factor) = concave_sublinear_probs(&fv(&[7.0])).unwrap();
        assert_eq!((q.as_slice(), factor), (&[1.0][..], 1.0));
        let (q, factor) = concave_sublinear_probs(&fv(&[2.0; 8])).unwrap();
        assert_relative_eq!(factor, 1.0, max_relative = 1e-15);
        assert!(q.as_slice().iter().all(|&x| (x - 0.125).abs() < 1e-15));
    }

    #[test]
    fn concave_condition_examples() {
        let (c, factor) = concave_universal_condition(&fv(&[4.0, 2.0, 1.0])).unwrap();
        assert_relative_eq!(c, 4.0 / 3.0, max_relative = 1e-15);
        assert_relative_eq!(factor, 1.75 * 11.0 / 6.0, max_relative = 1e-15);
        let geo: Vec<f64> = (1..=40).map(|i| 2f64.powi(-i)).collect();
        let (c, _) = concave_universal_condition(&fv(&geo)).unwrap();
        assert_relative_eq!(c, 1.0, max_relative = 1e-9);
        let (c, _) = concave_universal_condition(&fv(&[1.0; 10])).unwrap();
        assert_relative_eq!(c, 1.0 / 9.0, max_relative = 1e-15);
        let (c, factor) = concave_universal_condition(&fv(&[3.0])).unwrap();
        assert_eq!((c, factor), (f64::INFINITY, 1.0));
    }

    #[test]
    fn power_bound_examples() {
        assert_eq!(worst_case_bound(12345, 2.0).unwrap(), 1.0);
        assert_relative_eq!(worst_case_bound(1_000_000, 3.0).unwrap(), 100.0, max_relative = 1e-12);
        assert_eq!(near_uniform_bound(&fv(&[3.0; 4]), 5.0).unwrap(), 1.0);
        assert_eq!(near_uniform_bound(&fv(&[2.0, 1.5, 1.0]), 3.0).unwrap(), 8.0);
    }

    #[test]
    fn report_examples() {
        let u = fv(&[2.0; 6]);
        let r = overhead_report(&u, &[3.0, 10.0], &BaseScheme::ALL).unwrap();
        for s in &r.schemes {
            assert!(s.targets.iter().all(|t| (t.max_overhead - 1.0).abs() < 1e-12));
            assert_relative_eq!(s.universal_emulation, 6.0, max_relative = 1e-12);
        }
        let z = gen_zipf(&ZipfModel::exact(1.0, 10_000, 1e6), 0).unwrap();
        let r = overhead_report(&z, &[3.0], &[BaseScheme::L2]).unwrap();
        let h = r.schemes[0].targets[0].max_overhead;
        assert!(h <= zeta(2.0) && h > 1.0, "{h}");
        let zb = r.zipf.as_ref().unwrap();
        assert_relative_eq!(zb.alpha, 1.0, max_relative = 1e-9);
        assert!(h <= zb.bounds[1].harmonic * (1.0 + 1e-12));
        let json = serde_json::to_string(&r).unwrap();
        assert_eq!(serde_json::from_str::<OverheadReport>(&json).unwrap(), r);
    }

    #[test]
    fn report_bounds_dominate() {
        for seed in 0..20 {
            let w = gen_zipf(&ZipfModel::sub_zipf(0.6 + 0.1 * seed as f64, 2.0, 500, 1e3), seed).unwrap();
            let r = overhead_report(&w, &[2.0, 3.0, 10.0], &BaseScheme::ALL).unwrap();
            let by = |s: BaseScheme| r.schemes.iter().find(|x| x.scheme == s).unwrap();
            for (i, t) in by(BaseScheme::L1).targets.iter().enumerate() {
                assert!(t.expected_overhead <= t.max_overhead * (1.0 + 1e-12));
                assert!(t.max_overhead <= r.heavy_hitters[0].bound * (1.0 + 1e-12));
                assert!(t.max_overhead <= r.near_uniform[i].bound * (1.0 + 1e-12));
                assert!(t.max_overhead <= r.zipf.as_ref().unwrap().bounds[0].harmonic * (1.0 + 1e-12));
            }
            for (i, t) in by(BaseScheme::L2).targets.iter().enumerate() {
                assert!(t.max_overhead <= r.heavy_hitters[1].bound * (1.0 + 1e-12));
                assert!(t.max_overhead <= r.worst_case[i].bound * (1.0 + 1e-12));
                assert!(t.max_overhead <= r.zipf.as_ref().unwrap().bounds[1].harmonic * (1.0 + 1e-12));
            }
            let c = by(BaseScheme::ConcaveSublinear);
            assert!(c.universal_emulation >= r.harmonic_n * (1.0 - 1e-12));
        }
    }

    fn weights() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(1e-3f64..1e3, 1..100)
    }

    proptest! {
        #[test]
        fn closed_form_matches_brute_force(ws in weights(), pq in prop::sample::select(vec![(3.0, 2.0), (10.0, 2.0), (3.0, 1.0), (10.0, 1.0), (2.5, 0.5)])) {
            let w = fv(&ws);
            let (p, q) = pq;
            let brute = max_overhead(&pps_probs(&m(p), &w).unwrap(), &pps_probs(&m(q), &w).unwrap()).unwrap();
            let closed = lq_lp_overhead(&w, p, q).unwrap();
            prop_assert!((brute - closed).abs() <= 1e-12 * closed, "{brute} vs {closed}");
        }

        #[test]
        fn normalized_moment_is_nonincreasing(ws in weights(), p in 0.1f64..8.0, dp in 0.0f64..4.0) {
            let w = fv(&ws);
            let a = normalized_moment(&w, p);
            let b = normalized_moment(&w, p + dp);
            prop_assert!(b <= a * (1.0 + 1e-12));
            prop_assert!(b >= 1.0);
        }

        #[test]
        fn heavy_hitters_transfer_upward(ws in weights(), q in 0.5f64..3.0, dp in 0.0f64..5.0) {
            let w = fv(&ws);
            prop_assert!(heavy_hitter_phi(&w, q + dp).unwrap() >= heavy_hitter_phi(&w, q).unwrap() * (1.0 - 1e-12));
        }

        #[test]
        fn universal_at_least_harmonic(raw in prop::collection::vec(1e-3f64..1.0, 1..200)) {
            let q = ProbVector::from_weights(&raw).unwrap();
            let hn = harmonic(raw.len(), 1.0);
            prop_assert!(universal_emulation_overhead(&q) >= hn * (1.0 - 1e-12));
        }

        #[test]
        fn closure_under_nonnegative_combinations(
            ws in weights(),
            parts in prop::collection::vec((0.0f64..5.0, 0.2f64..6.0), 1..4),
            q in prop::sample::select(vec![1.0, 2.0]),
        ) {
            let w = fv(&ws);
            let base = pps_probs(&m(q), &w).unwrap();
            let combo: Vec<f64> = w.iter().map(|(_, x)| parts.iter().map(|&(a, p)| a * x.powf(p)).sum()).collect();
            prop_assume!(combo.iter().any(|&v| v > 0.0));
            let h = max_overhead(&ProbVector::from_weights(&combo).unwrap(), &base).unwrap();
            let worst = parts
                .iter()
                .filter(|(a, _)| *a > 0.0)
                .map(|&(_, p)| max_overhead(&pps_probs(&m(p), &w).unwrap(), &base).unwrap())
                .fold(0.0, f64::max);
            prop_assert!(h <= worst * (1.0 + 1e-12));
        }

        #[test]
        fn worst_case_and_near_uniform_dominate(ws in weights(), p in 2.0f64..12.0) {
            let w = fv(&ws);
            prop_assert!(lq_lp_overhead(&w, p, 2.0).unwrap() <= worst_case_bound(w.len(), p).unwrap() * (1.0 + 1e-12));
            prop_assert!(lq_lp_overhead(&w, p, 1.0).unwrap() <= near_uniform_bound(&w, p).unwrap() * (1.0 + 1e-12));
        }

        #[test]
        fn subzipf_bound_dominates(alpha in 0.5f64..2.0, c in 1.0f64..4.0, n in 1usize..2000, seed in any::<u64>()) {
            let w = gen_zipf(&ZipfModel::sub_zipf(alpha, c, n, 100.0), seed).unwrap();
            for q in [1.0, 2.0] {
                let measured = normalized_moment(&w, q);
                let b = subzipf_bound(alpha, c, n, q).unwrap();
                prop_assert!(measured <= b.harmonic * (1.0 + 1e-9));
            }
        }
    }
}
