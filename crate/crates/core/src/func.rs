//! Functions of frequency.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error};

/// A function `f` applied pointwise to key frequencies.
///
/// Every kind maps `0` to `0`, so keys that never occur contribute nothing.
/// The textual form (`moment:3`, `threshold:10`, `cap:5`, ...) is what the CLI
/// and the sketch blobs use.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum FreqFn {
    /// `w^p`, `p > 0`.
    Moment(f64),
    /// `I[w > T]`.
    Threshold(f64),
    /// `I[w >= T]`.
    RankThreshold(f64),
    /// `w * I[w > T]`.
    ThresholdWeight(f64),
    /// `min(w, T)`.
    Cap(f64),
    /// `I[w > 0]`.
    Distinct,
    /// `w`.
    Identity,
}

impl FreqFn {
    pub fn moment(p: f64) -> Result<Self, Error> {
        if !(p.is_finite() && p > 0.0) {
            return Err(invalid(format!("moment exponent must be > 0, got {p}")));
        }
        Ok(FreqFn::Moment(p))
    }

    /// The `l_q` sampling weight: `w^q`, or the distinct indicator for `q = 0`.
    pub fn power(q: f64) -> Result<Self, Error> {
        if q == 0.0 {
            Ok(FreqFn::Distinct)
        } else if q == 1.0 {
            Ok(FreqFn::Identity)
        } else {
            Self::moment(q)
        }
    }

    #[inline]
    pub fn eval(&self, w: f64) -> f64 {
        if !(w > 0.0) {
            return 0.0;
        }
        match *self {
            FreqFn::Moment(p) => w.powf(p),
            FreqFn::Threshold(t) => indicator(w > t),
            FreqFn::RankThreshold(t) => indicator(w >= t),
            FreqFn::ThresholdWeight(t) => {
                if w > t {
                    w
                } else {
                    0.0
                }
            }
            FreqFn::Cap(t) => w.min(t.max(0.0)),
            FreqFn::Distinct => 1.0,
            FreqFn::Identity => w,
        }
    }

    /// Whether `f` is nondecreasing in `w`. All kinds here are; the method
    /// exists so callers relying on monotonicity can say so.
    pub fn is_monotone(&self) -> bool {
        true
    }
}

#[inline]
fn indicator(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

impl fmt::Display for FreqFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FreqFn::Moment(p) => write!(f, "moment:{p}"),
            FreqFn::Threshold(t) => write!(f, "threshold:{t}"),
            FreqFn::RankThreshold(t) => write!(f, "rank-threshold:{t}"),
            FreqFn::ThresholdWeight(t) => write!(f, "threshold-weight:{t}"),
            FreqFn::Cap(t) => write!(f, "cap:{t}"),
            FreqFn::Distinct => f.write_str("distinct"),
            FreqFn::Identity => f.write_str("identity"),
        }
    }
}

impl FromStr for FreqFn {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let (name, arg) = match s.split_once(':') {
            Some((n, a)) => (n.trim(), Some(a.trim())),
            None => (s, None),
        };
        let param = || -> Result<f64, Error> {
            let a = arg.ok_or_else(|| invalid(format!("function `{name}` needs a parameter")))?;
            let v: f64 = a
                .parse()
                .map_err(|_| invalid(format!("bad parameter `{a}` for `{name}`")))?;
            if !v.is_finite() {
                return Err(invalid(format!("parameter for `{name}` must be finite")));
            }
            Ok(v)
        };
        match name {
            "moment" | "pow" => FreqFn::moment(param()?),
            "threshold" => Ok(FreqFn::Threshold(param()?)),
            "rank-threshold" => Ok(FreqFn::RankThreshold(param()?)),
            "threshold-weight" => Ok(FreqFn::ThresholdWeight(param()?)),
            "cap" => Ok(FreqFn::Cap(param()?)),
            "distinct" => Ok(FreqFn::Distinct),
            "identity" => Ok(FreqFn::Identity),
            _ => Err(invalid(format!("unknown frequency function `{s}`"))),
        }
    }
}

impl TryFrom<String> for FreqFn {
    type Error = Error;
    fn try_from(s: String) -> Result<Self, Error> {
        s.parse()
    }
}

impl From<FreqFn> for String {
    fn from(f: FreqFn) -> String {
        f.to_string()
    }
}
