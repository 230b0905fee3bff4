//! Versioned JSON encoding of sketches and samples.
//!
//! A blob is one JSON object:
//!
//! ```text
//! {"format": "freqsketch", "version": 1, "kind": "bottom-k", "state": {...}}
//! ```
//!
//! `kind` is `bottom-k` (state: [`BottomKState`]), `advice`
//! (state: [`AdviceState`]) or `sample` (state: [`WeightedSample`]).
//! Bottom-k entries are listed in seed order, advice entries in component
//! order, so equal sketches encode to equal bytes. Seeds are not stored;
//! they are recomputed from the config on load.

use serde::{Deserialize, Serialize};

use crate::advice::{AdviceSketch, AdviceState};
use crate::error::{Error, Result};
use crate::samplers::{BottomKSketch, BottomKState, WeightedSample};

pub const FORMAT: &str = "freqsketch";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "state", rename_all = "kebab-case")]
pub enum Blob {
    BottomK(BottomKState),
    Advice(AdviceState),
    Sample(WeightedSample),
}

#[derive(Serialize, Deserialize)]
struct Envelope {
    format: String,
    version: u32,
    #[serde(flatten)]
    blob: Blob,
}

impl Blob {
    pub fn kind(&self) -> &'static str {
        match self {
            Blob::BottomK(_) => "bottom-k",
            Blob::Advice(_) => "advice",
            Blob::Sample(_) => "sample",
        }
    }

    /// Pretty-printed JSON with a trailing newline.
    pub fn encode(&self) -> String {
        let env = EnvelopeRef {
            format: FORMAT,
            version: VERSION,
            blob: self,
        };
        let mut s = serde_json::to_string_pretty(&env).expect("blob types serialize infallibly");
        s.push('\n');
        s
    }

    pub fn decode(text: &str) -> Result<Blob> {
        let head: serde_json::Value = serde_json::from_str(text)?;
        match head.get("format").and_then(|v| v.as_str()) {
            Some(FORMAT) => {}
            other => return Err(Error::Format(format!("not a {FORMAT} blob (format {other:?})"))),
        }
        match head.get("version").and_then(|v| v.as_u64()) {
            Some(v) if v == u64::from(VERSION) => {}
            other => {
                return Err(Error::Format(format!(
                    "unsupported blob version {other:?}, expected {VERSION}"
                )))
            }
        }
        let env: Envelope = serde_json::from_value(head).map_err(|e| Error::Format(e.to_string()))?;
        Ok(env.blob)
    }

    pub fn into_bottom_k(self) -> Result<BottomKSketch> {
        match self {
            Blob::BottomK(state) => BottomKSketch::from_state(state),
            other => Err(Error::Format(format!(
                "expected a bottom-k blob, found {}",
                other.kind()
            ))),
        }
    }

    pub fn into_advice(self) -> Result<AdviceSketch> {
        match self {
            Blob::Advice(state) => AdviceSketch::from_state(state),
            other => Err(Error::Format(format!(
                "expected an advice blob, found {}",
                other.kind()
            ))),
        }
    }

    pub fn into_sample(self) -> Result<WeightedSample> {
        match self {
            Blob::Sample(s) => WeightedSample::new(s.meta, s.records),
            other => Err(Error::Format(format!("expected a sample blob, found {}", other.kind()))),
        }
    }
}

#[derive(Serialize)]
struct EnvelopeRef<'a> {
    format: &'a str,
    version: u32,
    #[serde(flatten)]
    blob: &'a Blob,
}

impl From<&BottomKSketch> for Blob {
    fn from(s: &BottomKSketch) -> Self {
        Blob::BottomK(s.to_state())
    }
}

impl From<&AdviceSketch> for Blob {
    fn from(s: &AdviceSketch) -> Self {
        Blob::Advice(s.to_state())
    }
}

impl From<WeightedSample> for Blob {
    fn from(s: WeightedSample) -> Self {
        Blob::Sample(s)
    }
}
