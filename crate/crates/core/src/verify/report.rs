//! Structured verification reports: JSON (schema-versioned) and CSV tables.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Deserializer, Serialize};

use crate::error::{Error, Result};
use crate::util::linear_fit;

// JSON has no NaN or infinity; serde_json writes them as null.
fn nullable<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
}

fn nullable_pairs<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<(String, f64)>, D::Error> {
    let v = Vec::<(String, Option<f64>)>::deserialize(d)?;
    Ok(v.into_iter().map(|(k, x)| (k, x.unwrap_or(f64::NAN))).collect())
}

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
}

/// One test input's two sides.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    /// Sub-experiment label (exponent, resolution, ...).
    pub group: String,
    pub index: u64,
    #[serde(deserialize_with = "nullable")]
    pub lhs: f64,
    #[serde(deserialize_with = "nullable")]
    pub rhs: f64,
    #[serde(deserialize_with = "nullable")]
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub count: usize,
    pub max: f64,
    pub min: f64,
    pub median: f64,
    pub q90: f64,
    pub q99: f64,
}

impl Summary {
    pub fn of(values: &[f64]) -> Self {
        let mut v: Vec<f64> = values.iter().copied().filter(|x| x.is_finite()).collect();
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let q = |p: f64| -> f64 {
            if v.is_empty() {
                return 0.0;
            }
            let idx = ((v.len() - 1) as f64 * p).round() as usize;
            v[idx]
        };
        Self {
            count: v.len(),
            max: v.last().copied().unwrap_or(0.0),
            min: v.first().copied().unwrap_or(0.0),
            median: q(0.5),
            q90: q(0.9),
            q99: q(0.99),
        }
    }
}

/// A straight-line fit `y ≈ intercept + slope x` with its data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitRecord {
    pub name: String,
    pub x_label: String,
    pub y_label: String,
    pub slope: f64,
    pub intercept: f64,
    /// 95% normal-approximation interval for the slope.
    pub slope_ci: [f64; 2],
    pub expected_slope: Option<f64>,
    pub data: Vec<[f64; 2]>,
}

impl FitRecord {
    pub fn fit(name: &str, x_label: &str, y_label: &str, data: Vec<[f64; 2]>, expected: Option<f64>) -> Self {
        let x: Vec<f64> = data.iter().map(|p| p[0]).collect();
        let y: Vec<f64> = data.iter().map(|p| p[1]).collect();
        let (slope, intercept, se) = linear_fit(&x, &y);
        Self {
            name: name.to_string(),
            x_label: x_label.to_string(),
            y_label: y_label.to_string(),
            slope,
            intercept,
            slope_ci: [slope - 1.96 * se, slope + 1.96 * se],
            expected_slope: expected,
            data,
        }
    }
}

/// Empirical statistic at two resolutions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityRecord {
    pub name: String,
    #[serde(deserialize_with = "nullable")]
    pub coarse: f64,
    #[serde(deserialize_with = "nullable")]
    pub fine: f64,
    /// `|fine - coarse| / |coarse|`.
    #[serde(deserialize_with = "nullable")]
    pub delta: f64,
}

impl StabilityRecord {
    pub fn new(name: &str, coarse: f64, fine: f64) -> Self {
        let delta = if coarse == 0.0 && fine == 0.0 {
            0.0
        } else {
            (fine - coarse).abs() / coarse.abs().max(f64::MIN_POSITIVE)
        };
        Self {
            name: name.to_string(),
            coarse,
            fine,
            delta,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparison {
    LessThan,
    LessEqual,
    GreaterThan,
    GreaterEqual,
    Within,
}

/// A declared threshold and whether it was met.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    #[serde(deserialize_with = "nullable")]
    pub value: f64,
    pub comparison: Comparison,
    #[serde(deserialize_with = "nullable")]
    pub threshold: f64,
    /// Upper end for `Within`.
    pub upper: Option<f64>,
    pub passed: bool,
}

impl Check {
    pub fn new(name: &str, value: f64, comparison: Comparison, threshold: f64) -> Self {
        let passed = value.is_finite()
            && match comparison {
                Comparison::LessThan => value < threshold,
                Comparison::LessEqual => value <= threshold,
                Comparison::GreaterThan => value > threshold,
                Comparison::GreaterEqual => value >= threshold,
                Comparison::Within => false,
            };
        Self {
            name: name.to_string(),
            value,
            comparison,
            threshold,
            upper: None,
            passed,
        }
    }

    pub fn within(name: &str, value: f64, lo: f64, hi: f64) -> Self {
        Self {
            name: name.to_string(),
            value,
            comparison: Comparison::Within,
            threshold: lo,
            upper: Some(hi),
            passed: value.is_finite() && value >= lo && value <= hi,
        }
    }

    pub fn flag(name: &str, ok: bool) -> Self {
        Self {
            name: name.to_string(),
            value: if ok { 1.0 } else { 0.0 },
            comparison: Comparison::GreaterEqual,
            threshold: 1.0,
            upper: None,
            passed: ok,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub schema_version: u32,
    pub estimate: String,
    /// Everything needed to regenerate the numbers.
    pub config: serde_json::Value,
    pub samples: Vec<SampleRecord>,
    pub summary: Summary,
    pub fits: Vec<FitRecord>,
    pub stability: Vec<StabilityRecord>,
    pub checks: Vec<Check>,
    /// Named scalars that are reported but not thresholded.
    #[serde(deserialize_with = "nullable_pairs")]
    pub values: Vec<(String, f64)>,
    pub notes: Vec<String>,
    pub verdict: Verdict,
}

impl VerificationReport {
    pub fn new(estimate: &str, config: serde_json::Value) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            estimate: estimate.to_string(),
            config,
            samples: Vec::new(),
            summary: Summary::of(&[]),
            fits: Vec::new(),
            stability: Vec::new(),
            checks: Vec::new(),
            values: Vec::new(),
            notes: Vec::new(),
            verdict: Verdict::Pass,
        }
    }

    pub fn set_samples(&mut self, samples: Vec<SampleRecord>) {
        let ratios: Vec<f64> = samples.iter().map(|s| s.ratio).collect();
        self.summary = Summary::of(&ratios);
        self.samples = samples;
    }

    pub fn check(&mut self, c: Check) {
        self.checks.push(c);
    }

    /// Adds a stability record and the `< tol` check on its delta.
    pub fn stability_check(&mut self, rec: StabilityRecord, tol: f64) {
        self.checks.push(Check::new(&format!("{} drift", rec.name), rec.delta, Comparison::LessThan, tol));
        self.stability.push(rec);
    }

    pub fn value(&mut self, name: &str, v: f64) {
        self.values.push((name.to_string(), v));
    }

    pub fn note(&mut self, s: impl Into<String>) {
        self.notes.push(s.into());
    }

    /// Sets the verdict from the checks.
    pub fn finish(mut self) -> Self {
        self.verdict = if self.checks.iter().all(|c| c.passed) {
            Verdict::Pass
        } else {
            Verdict::Fail
        };
        self
    }

    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }

    pub fn value_of(&self, name: &str) -> Option<f64> {
        self.values.iter().find(|(n, _)| n == name).map(|v| v.1)
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Format(e.to_string()))
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Format(e.to_string()))
    }

    /// `group,index,lhs,rhs,ratio`.
    pub fn write_samples_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "group,index,lhs,rhs,ratio")?;
        for s in &self.samples {
            writeln!(w, "{},{},{:.17e},{:.17e},{:.17e}", s.group, s.index, s.lhs, s.rhs, s.ratio)?;
        }
        Ok(())
    }

    /// Writes `<stem>.json`, `<stem>_samples.csv` and for every fit
    /// `<stem>_<fit>_data.csv` (`x,y`) and `<stem>_<fit>_fit.csv` (`x,y_fit`).
    pub fn emit(&self, dir: &Path, stem: &str) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let mut out = Vec::new();
        let json = dir.join(format!("{stem}.json"));
        std::fs::write(&json, self.to_json()? + "\n")?;
        out.push(json);
        let samples = dir.join(format!("{stem}_samples.csv"));
        self.write_samples_csv(std::fs::File::create(&samples)?)?;
        out.push(samples);
        for fit in &self.fits {
            let slug: String = fit
                .name
                .chars()
                .map(|c| if c.is_ascii_alphanumeric() { c } else { '_' })
                .collect();
            let data = dir.join(format!("{stem}_{slug}_data.csv"));
            let mut w = std::fs::File::create(&data)?;
            writeln!(w, "x,y")?;
            for p in &fit.data {
                writeln!(w, "{:.17e},{:.17e}", p[0], p[1])?;
            }
            out.push(data);
            let fitted = dir.join(format!("{stem}_{slug}_fit.csv"));
            let mut w = std::fs::File::create(&fitted)?;
            writeln!(w, "x,y_fit")?;
            for p in &fit.data {
                writeln!(w, "{:.17e},{:.17e}", p[0], fit.intercept + fit.slope * p[0])?;
            }
            out.push(fitted);
        }
        Ok(out)
    }
}
