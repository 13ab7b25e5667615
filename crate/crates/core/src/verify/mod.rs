//! Verification harness: random test fields, both sides of
//! each estimate, decay fits, refinement stability and structured reports.

mod corollaries;
mod decay;
mod estimates;
mod probability;
pub mod report;
pub mod sampler;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::symbols::SymbolSpec;

pub use corollaries::{verify_corollaries, CorollaryParams};
pub use decay::{verify_kernel_decay, DecayParams};
pub use estimates::{
    verify_fefferman_stein, verify_hardy_littlewood, verify_lp_main, verify_plancherel_identity,
    verify_sharp_vs_maximal, FeffermanSteinParams, HardyLittlewoodParams, LpMainParams, PlancherelParams,
    SharpMaximalParams,
};
pub use probability::{verify_embedding, verify_khintchine, EmbeddingParams, KhintchineParams};
pub use report::{Check, Comparison, FitRecord, SampleRecord, StabilityRecord, Summary, Verdict, VerificationReport};
pub use sampler::{FieldSampler, TimeWindow};

/// Run-wide knobs shared by every estimate; `None` selects the estimate's default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Harness {
    pub seed: u64,
    pub grid_n: Option<usize>,
    pub box_l: Option<f64>,
    pub samples: Option<usize>,
    /// Repeat at doubled resolution and sample count and check the drift.
    pub refine: bool,
}

impl Default for Harness {
    fn default() -> Self {
        Self {
            seed: 0,
            grid_n: None,
            box_l: None,
            samples: None,
            refine: true,
        }
    }
}

impl Harness {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            seed,
            ..Self::default()
        }
    }

    pub(crate) fn n(&self, default: usize) -> usize {
        self.grid_n.unwrap_or(default)
    }

    pub(crate) fn l(&self, default: f64) -> f64 {
        self.box_l.unwrap_or(default)
    }

    pub(crate) fn samples(&self, default: usize) -> usize {
        self.samples.unwrap_or(default)
    }
}

/// Relative drift tolerated between the coarse and refined empirical maxima.
pub const DRIFT_TOLERANCE: f64 = 0.10;

/// Numeric estimate parameters keyed by name (as given on the command line).
pub type Params = BTreeMap<String, f64>;

pub(crate) fn param(params: &Params, key: &str, default: f64) -> f64 {
    params.get(key).copied().unwrap_or(default)
}

pub(crate) fn symbol_json(s: &SymbolSpec) -> serde_json::Value {
    serde_json::json!({
        "symbol": s.describe(),
        "kappa": s.kappa,
        "mu": s.mu,
        "gamma": s.gamma,
        "n_derivs": s.n_derivs,
        "class": format!("{:?}", s.class),
    })
}

/// Identifiers accepted by [`run_estimate`].
pub const ESTIMATE_IDS: [&str; 9] = [
    "plancherel",
    "lp-main",
    "sharp-maximal",
    "fefferman-stein",
    "kernel-decay",
    "hardy-littlewood",
    "corollaries",
    "khintchine",
    "embedding",
];

/// Dispatch an estimate by id.
///
/// | id | parameters (defaults) |
/// |----|------------------------|
/// | `plancherel` | `gamma1` (1), `gamma2` (2), `kappa2` (1), `modes` (20) |
/// | `lp-main` | `gamma1` (1), `gamma2` (2), `kappa1` (1), `kappa2` (1), `q` (2), `p` (all of q, q+1, 2q), `outer` (0), `l` (0), `k_amp` (0.5 when outer) |
/// | `sharp-maximal` | `gamma1` (1), `gamma2` (2), `q` (2), `outer` (0), `points` (500) |
/// | `fefferman-stein` | `p` (all of 1.5, 2, 4), `gamma` (2) |
/// | `kernel-decay` | `gamma1` (1), `gamma2` (1) |
/// | `hardy-littlewood` | `r` (all of 1.5, 2, 4) |
/// | `corollaries` | `gamma` (2), `p` (2), `q` (2) |
/// | `khintchine` | `p` (4), `n_vars` (24) |
/// | `embedding` | `p` (both 2, 4), `alpha` (both 0, 1), `m` (both 1, 3) |
pub fn run_estimate(id: &str, params: &Params, harness: &Harness) -> Result<VerificationReport> {
    let list = |key: &str, all: &[f64]| -> Vec<f64> {
        match params.get(key) {
            Some(v) => vec![*v],
            None => all.to_vec(),
        }
    };
    match id {
        "plancherel" => verify_plancherel_identity(
            &PlancherelParams {
                gamma1: param(params, "gamma1", 1.0),
                gamma2: param(params, "gamma2", 2.0),
                kappa2: param(params, "kappa2", 1.0),
                modes: param(params, "modes", 20.0) as usize,
            },
            harness,
        ),
        "lp-main" => {
            let q = param(params, "q", 2.0);
            let outer = param(params, "outer", 0.0) != 0.0;
            let lp = LpMainParams::power(
                param(params, "gamma1", 1.0),
                param(params, "gamma2", 2.0),
                param(params, "kappa1", 1.0),
                param(params, "kappa2", 1.0),
                if outer { param(params, "k_amp", 0.5) } else { param(params, "k_amp", 0.0) },
                q,
                list("p", &[q, q + 1.0, 2.0 * q]),
                outer,
                param(params, "l", 0.0),
            )?;
            verify_lp_main(&lp, harness)
        }
        "sharp-maximal" => {
            let outer = param(params, "outer", 0.0) != 0.0;
            let sp = SharpMaximalParams::power(
                param(params, "gamma1", 1.0),
                param(params, "gamma2", 2.0),
                param(params, "q", 2.0),
                outer,
                param(params, "points", 500.0) as usize,
            )?;
            verify_sharp_vs_maximal(&sp, harness)
        }
        "fefferman-stein" => verify_fefferman_stein(
            &FeffermanSteinParams {
                ps: list("p", &[1.5, 2.0, 4.0]),
                gamma: param(params, "gamma", 2.0),
            },
            harness,
        ),
        "kernel-decay" => verify_kernel_decay(
            &DecayParams {
                gamma1: param(params, "gamma1", 1.0),
                gamma2: param(params, "gamma2", 1.0),
            },
            harness,
        ),
        "hardy-littlewood" => verify_hardy_littlewood(
            &HardyLittlewoodParams {
                rs: list("r", &[1.5, 2.0, 4.0]),
            },
            harness,
        ),
        "corollaries" => verify_corollaries(
            &CorollaryParams {
                gamma: param(params, "gamma", 2.0),
                p: param(params, "p", 2.0),
                q: param(params, "q", 2.0),
            },
            harness,
        ),
        "khintchine" => verify_khintchine(
            &KhintchineParams {
                p: param(params, "p", 4.0),
                n_vars: param(params, "n_vars", 24.0) as usize,
            },
            harness,
        ),
        "embedding" => verify_embedding(
            &EmbeddingParams {
                ps: list("p", &[2.0, 4.0]),
                alphas: list("alpha", &[0.0, 1.0]),
                ms: list("m", &[1.0, 3.0]).into_iter().map(|v| v as usize).collect(),
            },
            harness,
        ),
        other => Err(Error::InvalidParameter(format!(
            "unknown estimate '{other}' (expected one of {})",
            ESTIMATE_IDS.join(", ")
        ))),
    }
}
