//! Weighted samplers: composable bottom-k sketches over `w^q` and the exact
//! with-replacement reference sampler.

mod bottomk;
mod replacement;
mod sample;

pub use bottomk::{conditional_variance, BottomKSketch, BottomKState, StoredEntry};
pub use replacement::{
    exact_wr_variance, sample_with_replacement, wr_inclusion_probability, wr_variance_with_covariance,
};
pub use sample::{SampleMeta, SampleRecord, SampleScheme, WeightedSample};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::hash::{HashFamily, HashSource};

/// Bottom-k seed distribution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    /// Exponential seeds; probability proportional to size without replacement.
    Ppswor,
    /// Uniform seeds.
    Priority,
}

impl Scheme {
    pub fn family(self) -> HashFamily {
        match self {
            Scheme::Ppswor => HashFamily::Exp1,
            Scheme::Priority => HashFamily::Uniform01,
        }
    }

    pub fn hash(self, seed: u64) -> HashSource {
        HashSource::new(seed, self.family())
    }
}

impl std::str::FromStr for Scheme {
    type Err = crate::Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ppswor" => Ok(Scheme::Ppswor),
            "priority" => Ok(Scheme::Priority),
            _ => Err(invalid(format!("unknown scheme `{s}` (expected ppswor or priority)"))),
        }
    }
}

/// Parameters of a bottom-k sketch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub k: usize,
    /// Weight exponent: keys are sampled by `w^q` (`q = 1` is l1, `q = 2` is l2).
    pub q: f64,
    pub scheme: Scheme,
    /// Hash seed; the hash family follows from `scheme`.
    pub seed: u64,
}

impl SamplerConfig {
    pub fn new(k: usize, q: f64, scheme: Scheme, seed: u64) -> Result<Self> {
        let c = SamplerConfig { k, q, scheme, seed };
        c.validate()?;
        Ok(c)
    }

    pub fn ppswor(k: usize, q: f64, seed: u64) -> Result<Self> {
        Self::new(k, q, Scheme::Ppswor, seed)
    }

    pub fn priority(k: usize, q: f64, seed: u64) -> Result<Self> {
        Self::new(k, q, Scheme::Priority, seed)
    }

    pub fn hash(&self) -> HashSource {
        self.scheme.hash(self.seed)
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(invalid("sample size k must be >= 1"));
        }
        if !(self.q.is_finite() && self.q >= 0.0) {
            return Err(invalid(format!("weight exponent q must be >= 0, got {}", self.q)));
        }
        Ok(())
    }

    /// `w^q`, with `w^0 = 1` for active keys.
    #[inline]
    pub fn transformed(&self, w: f64) -> f64 {
        if self.q == 1.0 {
            w
        } else {
            w.powf(self.q)
        }
    }
}

/// `Pr[seed <= tau]` for a key with transformed weight `wq`, under `hash`'s
/// family. `tau = +inf` means the key is always included.
#[inline]
pub(crate) fn conditional_inclusion(hash: &HashSource, wq: f64, tau: f64) -> f64 {
    if tau.is_infinite() {
        1.0
    } else {
        hash.cdf(wq * tau)
    }
}
