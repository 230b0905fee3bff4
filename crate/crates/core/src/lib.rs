//! Weighted sampling sketches for frequency statistics.
//!
//! Bottom-k samplers (ppswor and priority, by `w^q`), exact with-replacement
//! reference sampling, the sample-by-advice sketch, inverse-probability
//! estimation, and emulation-overhead analysis between sampling schemes.

// `!(x > 0.0)` deliberately rejects NaN along with nonpositive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod advice;
pub mod codec;
pub mod error;
pub mod estimation;
pub(crate) mod float_serde;
pub mod frequency;
pub mod func;
pub mod hash;
pub mod io;
pub mod overhead;
pub mod samplers;
pub mod zipf;

pub use advice::{AdviceMap, AdviceParams, AdviceSketch, NoiseModel};
pub use codec::Blob;
pub use error::{Error, Result};
pub use estimation::{estimate_query, evaluate_nrmse, Domain, DomainQuery, ErrorReport, SamplerSpec};
pub use frequency::{aggregate, Element, FrequencyVector, Key};
pub use func::FreqFn;
pub use overhead::{overhead_report, OverheadReport, ProbVector};
pub use samplers::{BottomKSketch, SamplerConfig, Scheme, WeightedSample};
pub use zipf::{gen_zipf, ZipfModel};
