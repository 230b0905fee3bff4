//! Keyed hashing of keys into random draws.
//!
//! Every draw is a pure function of `(seed, key bytes)`, so the same key gets the
//! same randomization in every shard and every process. This is what makes
//! bottom-k and advice sketches mergeable.

use serde::{Deserialize, Serialize};
use xxhash_rust::xxh3::xxh3_64_with_seed;

/// Distribution of the per-key draw.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HashFamily {
    /// Exp(1), used by ppswor.
    Exp1,
    /// U(0, 1], used by priority sampling.
    Uniform01,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HashSource {
    pub seed: u64,
    pub family: HashFamily,
}

const TWO_POW_53: f64 = 9_007_199_254_740_992.0;

impl HashSource {
    pub fn new(seed: u64, family: HashFamily) -> Self {
        HashSource { seed, family }
    }

    pub fn exp1(seed: u64) -> Self {
        Self::new(seed, HashFamily::Exp1)
    }

    pub fn uniform(seed: u64) -> Self {
        Self::new(seed, HashFamily::Uniform01)
    }

    #[inline]
    pub fn bits(&self, key: &[u8]) -> u64 {
        xxh3_64_with_seed(key, self.seed)
    }

    /// Uniform draw in (0, 1]: the top 53 hash bits mapped to `(bits + 1) / 2^53`.
    #[inline]
    pub fn unit(&self, key: &[u8]) -> f64 {
        bits_to_unit(self.bits(key))
    }

    /// The draw from this source's family.
    #[inline]
    pub fn draw(&self, key: &[u8]) -> f64 {
        let u = self.unit(key);
        match self.family {
            HashFamily::Exp1 => -u.ln(),
            HashFamily::Uniform01 => u,
        }
    }

    /// `Pr[draw <= t]` under this source's family.
    #[inline]
    pub fn cdf(&self, t: f64) -> f64 {
        if t.is_nan() || t <= 0.0 {
            return 0.0;
        }
        match self.family {
            HashFamily::Exp1 => -(-t).exp_m1(),
            HashFamily::Uniform01 => t.min(1.0),
        }
    }
}

#[inline]
pub(crate) fn bits_to_unit(bits: u64) -> f64 {
    ((bits >> 11) + 1) as f64 / TWO_POW_53
}

/// SplitMix64 finalizer; used to derive independent per-run seeds from one base seed.
pub fn mix_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
