//! Sampler names accepted on the command line.
//!
//! Presets: `ppswor`, `priority`, `ppswor-l2`, `priority-l2`, `wr-l1`,
//! `wr-l2`, `advice-equal`, `advice-ku32`. Generic forms: `ppswor:Q`,
//! `priority:Q`, `wr:Q` (sampling by `w^Q`) and `advice:H:P:U` (fixed
//! component sizes, ignoring `k`).

use std::fmt;
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use freqsketch::advice::AdviceMap;
use freqsketch::{FreqFn, SamplerSpec, Scheme};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SamplerName {
    BottomK {
        scheme: Scheme,
        q: f64,
    },
    WithReplacement {
        q: f64,
    },
    /// `k_p = ceil(k/2)`, `k_u = floor(k/2)`.
    AdviceEqual,
    /// `k_u = min(32, floor(k/2))`, the rest by advice.
    AdviceKu32,
    AdviceFixed {
        k_h: usize,
        k_p: usize,
        k_u: usize,
    },
}

/// Resolved advice component sizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AdviceSizes {
    pub k_h: usize,
    pub k_p: usize,
    pub k_u: usize,
}

impl SamplerName {
    pub fn is_advice(&self) -> bool {
        matches!(
            self,
            SamplerName::AdviceEqual | SamplerName::AdviceKu32 | SamplerName::AdviceFixed { .. }
        )
    }

    pub fn advice_sizes(&self, k: usize) -> Option<AdviceSizes> {
        match *self {
            SamplerName::AdviceEqual => Some(AdviceSizes {
                k_h: 0,
                k_p: k.div_ceil(2),
                k_u: k / 2,
            }),
            SamplerName::AdviceKu32 => {
                let k_u = (k / 2).min(32);
                Some(AdviceSizes {
                    k_h: 0,
                    k_p: k - k_u,
                    k_u,
                })
            }
            SamplerName::AdviceFixed { k_h, k_p, k_u } => Some(AdviceSizes { k_h, k_p, k_u }),
            _ => None,
        }
    }

    /// The evaluation spec for size `k`. Advice samplers estimate `f` and
    /// need the advice map.
    pub fn spec<'a>(&self, k: usize, f: FreqFn, advice: Option<&'a AdviceMap>) -> Result<SamplerSpec<'a>> {
        Ok(match *self {
            SamplerName::BottomK { scheme, q } => SamplerSpec::BottomK { scheme, q, k },
            SamplerName::WithReplacement { q } => SamplerSpec::WithReplacement {
                weight: FreqFn::power(q)?,
                k,
            },
            _ => {
                let AdviceSizes { k_h, k_p, k_u } = self.advice_sizes(k).expect("advice sampler");
                let advice = advice.context("advice samplers need advice")?;
                SamplerSpec::Advice {
                    k_h,
                    k_p,
                    k_u,
                    f,
                    scheme: Scheme::Ppswor,
                    advice,
                }
            }
        })
    }
}

impl FromStr for SamplerName {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        let bottom = |scheme, q| SamplerName::BottomK { scheme, q };
        Ok(match s.trim() {
            "ppswor" => bottom(Scheme::Ppswor, 1.0),
            "priority" => bottom(Scheme::Priority, 1.0),
            "ppswor-l2" => bottom(Scheme::Ppswor, 2.0),
            "priority-l2" => bottom(Scheme::Priority, 2.0),
            "wr-l1" => SamplerName::WithReplacement { q: 1.0 },
            "wr-l2" => SamplerName::WithReplacement { q: 2.0 },
            "advice-equal" => SamplerName::AdviceEqual,
            "advice-ku32" => SamplerName::AdviceKu32,
            other => {
                let Some((head, rest)) = other.split_once(':') else {
                    bail!("unknown sampler `{other}`");
                };
                match head {
                    "ppswor" => bottom(Scheme::Ppswor, exponent(rest)?),
                    "priority" => bottom(Scheme::Priority, exponent(rest)?),
                    "wr" => SamplerName::WithReplacement { q: exponent(rest)? },
                    "advice" => {
                        let sizes: Vec<usize> = rest
                            .split(':')
                            .map(|v| v.trim().parse::<usize>())
                            .collect::<Result<_, _>>()
                            .with_context(|| format!("bad advice sizes `{rest}`, expected H:P:U"))?;
                        let [k_h, k_p, k_u] = sizes[..] else {
                            bail!("advice sampler needs three sizes H:P:U, got `{rest}`");
                        };
                        SamplerName::AdviceFixed { k_h, k_p, k_u }
                    }
                    _ => bail!("unknown sampler `{other}`"),
                }
            }
        })
    }
}

fn exponent(s: &str) -> Result<f64> {
    let q: f64 = s
        .trim()
        .parse()
        .with_context(|| format!("bad sampling exponent `{s}`"))?;
    if !(q.is_finite() && q >= 0.0) {
        bail!("sampling exponent must be finite and >= 0, got {q}");
    }
    Ok(q)
}

impl fmt::Display for SamplerName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let scheme = |s: &Scheme| match s {
            Scheme::Ppswor => "ppswor",
            Scheme::Priority => "priority",
        };
        match self {
            SamplerName::BottomK { scheme: s, q } if *q == 1.0 => f.write_str(scheme(s)),
            SamplerName::BottomK { scheme: s, q } if *q == 2.0 => write!(f, "{}-l2", scheme(s)),
            SamplerName::BottomK { scheme: s, q } => write!(f, "{}:{q}", scheme(s)),
            SamplerName::WithReplacement { q } if *q == 1.0 || *q == 2.0 => write!(f, "wr-l{q}"),
            SamplerName::WithReplacement { q } => write!(f, "wr:{q}"),
            SamplerName::AdviceEqual => f.write_str("advice-equal"),
            SamplerName::AdviceKu32 => f.write_str("advice-ku32"),
            SamplerName::AdviceFixed { k_h, k_p, k_u } => write!(f, "advice:{k_h}:{k_p}:{k_u}"),
        }
    }
}
