//! Run configuration: a flat JSON file overridden by command-line flags.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use lpevo::verify::Harness;

/// Default output directory when neither `--out` nor the environment sets one.
pub const DEFAULT_OUT_DIR: &str = "lpevo-out";

/// Environment variable holding the default output directory.
pub const OUT_DIR_ENV: &str = "LPEVO_OUT_DIR";

/// Everything that determines a run.
///
/// The file format is a single flat JSON object. Besides the named keys below,
/// every other key must be numeric and is passed through as an estimate or
/// symbol parameter (`gamma1`, `q`, `psi2_kappa`, ...).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub box_l: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub refine: Option<bool>,
    /// Not echoed into reports, so runs written to different places compare equal.
    #[serde(default, skip_serializing)]
    pub out_dir: Option<PathBuf>,
    /// Estimate ids run by `suite` when no selection is given on the command line.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub suite: Option<Vec<String>>,
    /// Built-in symbol for `kernel`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub symbol: Option<String>,
    /// Built-in symbols for `gfun`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub psi1: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub psi2: Option<String>,
    #[serde(flatten)]
    pub params: BTreeMap<String, f64>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        serde_json::from_str(&text).map_err(|e| format!("invalid config {}: {e}", path.display()))
    }

    /// `other` wins wherever it sets a value.
    pub fn overridden_by(mut self, other: RunConfig) -> Self {
        macro_rules! take {
            ($($f:ident),*) => { $( if other.$f.is_some() { self.$f = other.$f; } )* };
        }
        take!(seed, grid_n, box_l, samples, refine, out_dir, suite, symbol, psi1, psi2);
        self.params.extend(other.params);
        self
    }

    pub fn harness(&self) -> Harness {
        Harness {
            seed: self.seed.unwrap_or(0),
            grid_n: self.grid_n,
            box_l: self.box_l,
            samples: self.samples,
            refine: self.refine.unwrap_or(true),
        }
    }

    pub fn param(&self, key: &str, default: f64) -> f64 {
        self.params.get(key).copied().unwrap_or(default)
    }

    /// Parameters with `prefix` stripped, e.g. `psi1_gamma` -> `gamma`.
    pub fn prefixed(&self, prefix: &str) -> BTreeMap<String, f64> {
        self.params
            .iter()
            .filter_map(|(k, v)| k.strip_prefix(prefix).map(|s| (s.to_string(), *v)))
            .collect()
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out_dir.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR))
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("config serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file() {
        let file: RunConfig = serde_json::from_str(r#"{"seed": 3, "grid_n": 64, "gamma1": 0.5, "q": 3}"#).unwrap();
        let flags = RunConfig {
            seed: Some(9),
            params: [("q".to_string(), 2.0)].into_iter().collect(),
            ..RunConfig::default()
        };
        let c = file.overridden_by(flags);
        assert_eq!(c.seed, Some(9));
        assert_eq!(c.grid_n, Some(64));
        assert_eq!(c.param("q", 0.0), 2.0);
        assert_eq!(c.param("gamma1", 0.0), 0.5);
    }

    #[test]
    fn non_numeric_extra_key_is_rejected() {
        assert!(serde_json::from_str::<RunConfig>(r#"{"gamma1": "one"}"#).is_err());
    }

    #[test]
    fn round_trips() {
        let c: RunConfig = serde_json::from_str(r#"{"seed": 1, "symbol": "power", "gamma": 1.5}"#).unwrap();
        let back: RunConfig = serde_json::from_value(c.to_json()).unwrap();
        assert_eq!(back, c);
    }
}
