//! Zipf and sub-Zipf frequency models, the best-fit exponent, and the
//! generalized harmonic / zeta sums used by the overhead bounds.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::frequency::{FrequencyVector, Key};

/// Frequencies `w_i = w1 * i^-alpha` (exact when `c == 1`), or a sub-Zipf
/// perturbation satisfying `w_i / w_1 <= c * i^-alpha` for every rank `i`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZipfModel {
    pub alpha: f64,
    pub c: f64,
    pub n: usize,
    pub w1: f64,
}

impl ZipfModel {
    pub fn exact(alpha: f64, n: usize, w1: f64) -> Self {
        ZipfModel { alpha, c: 1.0, n, w1 }
    }

    pub fn sub_zipf(alpha: f64, c: f64, n: usize, w1: f64) -> Self {
        ZipfModel { alpha, c, n, w1 }
    }

    fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(invalid("Zipf support size n must be >= 1"));
        }
        if !(self.alpha.is_finite() && self.alpha > 0.0) {
            return Err(invalid(format!("Zipf alpha must be > 0, got {}", self.alpha)));
        }
        if !(self.c.is_finite() && self.c >= 1.0) {
            return Err(invalid(format!("sub-Zipf slack c must be >= 1, got {}", self.c)));
        }
        if !(self.w1.is_finite() && self.w1 > 0.0) {
            return Err(invalid(format!("Zipf scale w1 must be > 0, got {}", self.w1)));
        }
        Ok(())
    }
}

/// Key name used for the rank-`i` key of a generated instance.
pub fn zipf_key(i: usize) -> Key {
    Key::new(format!("k{i}"))
}

/// `gen_zipf`. Key `k{i}` gets `w1 * i^-alpha`; for `c > 1` each frequency is
/// additionally scaled by an independent factor uniform in `[1/c, 1]`.
///
/// Scaling down pointwise keeps every order statistic below the exact curve
/// while the maximum stays at least `w1 / c`, so the result is
/// `subZipf[alpha, c, n]` in its own rank order.
pub fn gen_zipf(model: &ZipfModel, rng_seed: u64) -> Result<FrequencyVector> {
    model.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let pairs = (1..=model.n).map(|i| {
        let mut w = model.w1 * (i as f64).powf(-model.alpha);
        if model.c > 1.0 {
            w *= rng.random_range(1.0 / model.c..=1.0);
        }
        (zipf_key(i), w)
    });
    FrequencyVector::from_pairs(pairs)
}

/// Smallest `c` with `w_i / w_1 <= c * i^-alpha` for all ranks.
pub fn subzipf_slack(w: &FrequencyVector, alpha: f64) -> f64 {
    let Some(w1) = w.max() else { return 1.0 };
    w.iter()
        .enumerate()
        .map(|(i, (_, wi))| (wi / w1) * ((i + 1) as f64).powf(alpha))
        .fold(1.0, f64::max)
}

/// Whether `w` is `subZipf[alpha, c, n]`, up to a relative rounding slack of 1e-12.
pub fn is_subzipf(w: &FrequencyVector, alpha: f64, c: f64) -> bool {
    let Some(w1) = w.max() else { return true };
    w.iter().enumerate().all(|(i, (_, wi))| {
        let bound = c * ((i + 1) as f64).powf(-alpha);
        wi / w1 <= bound * (1.0 + 1e-12)
    })
}

/// `zipf_fit`: magnitude of the least-squares slope of `ln w_i` against
/// `ln i`, over all ranks.
pub fn zipf_fit(w: &FrequencyVector) -> Result<f64> {
    let n = w.len();
    if n < 2 {
        return Err(invalid("Zipf fit needs at least two keys"));
    }
    let xs: Vec<f64> = (1..=n).map(|i| (i as f64).ln()).collect();
    let ys: Vec<f64> = w.iter().map(|(_, wi)| wi.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n as f64;
    let my = ys.iter().sum::<f64>() / n as f64;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (x, y) in xs.iter().zip(&ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
    }
    Ok(-(sxy / sxx))
}

/// Generalized harmonic number `H_{n,beta} = sum_{i=1..n} i^-beta`.
pub fn harmonic(n: usize, beta: f64) -> f64 {
    // smallest terms first
    (1..=n).rev().map(|i| (i as f64).powf(-beta)).sum()
}

const ZETA_HEAD: usize = 10_000;

/// Riemann zeta for `beta > 1`; `+inf` for `beta <= 1`.
///
/// Exact head sum up to 10^4 plus an Euler-Maclaurin tail with three
/// Bernoulli corrections. The truncation error is below 1e-20 for every
/// `beta > 1`, far inside the 1e-9 needed by the bounds that use it.
pub fn zeta(beta: f64) -> f64 {
    if !(beta > 1.0) {
        return f64::INFINITY;
    }
    let n = ZETA_HEAD as f64;
    let head = harmonic(ZETA_HEAD - 1, beta);
    let b = beta;
    let tail = n.powf(1.0 - b) / (b - 1.0) + 0.5 * n.powf(-b) + b * n.powf(-b - 1.0) / 12.0
        - b * (b + 1.0) * (b + 2.0) * n.powf(-b - 3.0) / 720.0
        + b * (b + 1.0) * (b + 2.0) * (b + 3.0) * (b + 4.0) * n.powf(-b - 5.0) / 30_240.0;
    head + tail
}
