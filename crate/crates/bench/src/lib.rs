//! Shared workloads for the criterion benches.

use freqsketch::advice::{AdviceMap, NoiseModel};
use freqsketch::{gen_zipf, FrequencyVector, ZipfModel};

/// Zipf[alpha] frequencies over `n` keys, fixed seed.
pub fn zipf(alpha: f64, n: usize) -> FrequencyVector {
    gen_zipf(&ZipfModel::sub_zipf(alpha, 2.0, n, 1e6), 17).expect("valid model")
}

/// Exact frequencies perturbed by a factor in `[1/4, 4]`.
pub fn noisy_advice(w: &FrequencyVector) -> AdviceMap {
    AdviceMap::from_frequencies(w)
        .with_noise(NoiseModel::Multiplicative(4.0), 3)
        .expect("valid noise")
}
