//! Declarative run configuration.
//!
//! Every field is optional; command-line flags take precedence over the
//! file, and built-in defaults apply last.
//!
//! ```toml
//! seed = 7
//! sampler = "ppswor-l2"          # sketch
//! samplers = ["ppswor", "advice-equal"]   # evaluate
//! k = 64
//! k-grid = [16, 64, 256]
//! f = "moment:3"
//! trials = 50
//! advice = "predictions.tsv"
//! noise = "dropout:0.9"
//! targets = [3, 10]
//!
//! [zipf]
//! alpha = 1.2
//! n = 10000
//! w1 = 1e6
//! c = 1.0
//! ```

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Deserialize;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct Config {
    pub seed: Option<u64>,
    pub sampler: Option<String>,
    pub samplers: Option<Vec<String>>,
    pub k: Option<usize>,
    pub k_grid: Option<Vec<usize>>,
    pub f: Option<String>,
    pub trials: Option<usize>,
    pub advice: Option<PathBuf>,
    pub noise: Option<String>,
    pub targets: Option<Vec<f64>>,
    #[serde(default)]
    pub zipf: ZipfConfig,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ZipfConfig {
    pub alpha: Option<f64>,
    pub n: Option<usize>,
    pub w1: Option<f64>,
    pub c: Option<f64>,
}

impl Config {
    /// Relative paths inside the file resolve against its directory.
    pub fn load(path: &Path) -> Result<Config> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let mut cfg: Config = toml::from_str(&text).map_err(ConfigError)?;
        if let (Some(advice), Some(dir)) = (cfg.advice.as_mut(), path.parent()) {
            if advice.is_relative() {
                *advice = dir.join(&*advice);
            }
        }
        Ok(cfg)
    }
}

/// A malformed config file.
#[derive(Debug)]
pub struct ConfigError(pub toml::de::Error);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "invalid config: {}", self.0.message())
    }
}

impl std::error::Error for ConfigError {}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_documented_schema() {
        let cfg: Config = toml::from_str(
            r#"
            seed = 7
            samplers = ["ppswor", "advice-equal"]
            k-grid = [16, 64]
            f = "moment:3"
            noise = "dropout:0.9"
            [zipf]
            alpha = 1.2
            n = 100
            "#,
        )
        .unwrap();
        assert_eq!(cfg.seed, Some(7));
        assert_eq!(cfg.k_grid, Some(vec![16, 64]));
        assert_eq!(cfg.zipf.n, Some(100));
        assert!(toml::from_str::<Config>("sed = 1").is_err());
    }
}
