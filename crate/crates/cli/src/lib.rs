//! Command-line front end for `lpevo`: kernel dumps, g-functions, norms and
//! the verification suite.
//!
//! Exit codes: 0 when every verdict passes, 1 when any verdict fails, 2 on a
//! usage or configuration error.

pub mod config;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::builder::PossibleValuesParser;
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use lpevo::evolution::evolution_kernel;
use lpevo::grid::spatial_lebesgue_norm;
use lpevo::lp_decomp::{besov_norm, sobolev_norm, DyadicPartition};
use lpevo::square_function::{g_function, g_lp_norm, GOptions, LMode};
use lpevo::symbols::builtin_symbol;
use lpevo::verify::{run_estimate, FieldSampler, VerificationReport, ESTIMATE_IDS};
use lpevo::{SpaceTimeField, SpectralGrid};

pub use config::{RunConfig, DEFAULT_OUT_DIR, OUT_DIR_ENV};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Parser)]
#[command(name = "lpevo", version, about = "Kernels, square functions and numerical verification of their estimates")]
struct Cli {
    /// Flat JSON run configuration; command-line flags override it.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, env = OUT_DIR_ENV, value_name = "DIR")]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Dump the evolution kernel p(t, s, x) of a built-in symbol as CSV.
    Kernel {
        /// Built-in symbol: power, power_osc, unstable, oscillating.
        #[arg(long)]
        symbol: Option<String>,
        #[command(flatten)]
        knobs: Knobs,
    },
    /// Compute the g-function of a random field on a space-time grid.
    Gfun {
        #[arg(long)]
        psi1: Option<String>,
        #[arg(long)]
        psi2: Option<String>,
        #[command(flatten)]
        knobs: Knobs,
    },
    /// Lebesgue, Besov and Bessel-potential norms of a random field.
    Norms {
        #[command(flatten)]
        knobs: Knobs,
    },
    /// Run one estimate and write its report.
    Verify {
        #[arg(value_parser = PossibleValuesParser::new(ESTIMATE_IDS))]
        id: String,
        #[command(flatten)]
        knobs: Knobs,
    },
    /// Run a set of estimates.
    Suite {
        /// Every estimate.
        #[arg(long)]
        all: bool,
        /// Comma-separated estimate ids.
        #[arg(long, value_delimiter = ',', value_parser = PossibleValuesParser::new(ESTIMATE_IDS))]
        only: Vec<String>,
        #[command(flatten)]
        knobs: Knobs,
    },
}

#[derive(Debug, Args)]
struct Knobs {
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    grid_n: Option<usize>,
    #[arg(long)]
    box_l: Option<f64>,
    #[arg(long)]
    samples: Option<usize>,
    /// Skip the doubled-resolution stability rerun.
    #[arg(long)]
    no_refine: bool,
    /// Any numeric parameter, e.g. `--param psi2_kappa=0.5`.
    #[arg(long = "param", value_name = "KEY=VALUE", value_parser = parse_pair)]
    params: Vec<(String, f64)>,
    #[command(flatten)]
    named: NamedParams,
}

#[derive(Debug, Args)]
struct NamedParams {
    #[arg(long)]
    gamma1: Option<f64>,
    #[arg(long)]
    gamma2: Option<f64>,
    #[arg(long)]
    kappa1: Option<f64>,
    #[arg(long)]
    kappa2: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    kappa: Option<f64>,
    #[arg(long)]
    k_amp: Option<f64>,
    #[arg(long)]
    q: Option<f64>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    r: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    m: Option<f64>,
    /// Fixed operator time l of the g-function.
    #[arg(long)]
    l: Option<f64>,
    /// Use l = t instead of a fixed l (1 or 0).
    #[arg(long)]
    outer: Option<f64>,
    #[arg(long)]
    modes: Option<f64>,
    #[arg(long)]
    points: Option<f64>,
    #[arg(long)]
    n_vars: Option<f64>,
    /// Kernel start time.
    #[arg(long)]
    s: Option<f64>,
    /// Kernel end time.
    #[arg(long)]
    t: Option<f64>,
    #[arg(long)]
    nt: Option<f64>,
    #[arg(long)]
    t_end: Option<f64>,
}

impl NamedParams {
    fn pairs(&self) -> Vec<(&'static str, Option<f64>)> {
        vec![
            ("gamma1", self.gamma1),
            ("gamma2", self.gamma2),
            ("kappa1", self.kappa1),
            ("kappa2", self.kappa2),
            ("gamma", self.gamma),
            ("kappa", self.kappa),
            ("k_amp", self.k_amp),
            ("q", self.q),
            ("p", self.p),
            ("r", self.r),
            ("alpha", self.alpha),
            ("m", self.m),
            ("l", self.l),
            ("outer", self.outer),
            ("modes", self.modes),
            ("points", self.points),
            ("n_vars", self.n_vars),
            ("s", self.s),
            ("t", self.t),
            ("nt", self.nt),
            ("t_end", self.t_end),
        ]
    }
}

fn parse_pair(s: &str) -> Result<(String, f64), String> {
    let (k, v) = s.split_once('=').ok_or_else(|| format!("expected KEY=VALUE, got '{s}'"))?;
    let v: f64 = v.trim().parse().map_err(|_| format!("'{v}' is not a number"))?;
    Ok((k.trim().to_string(), v))
}

impl Knobs {
    fn config(&self) -> RunConfig {
        let mut params: BTreeMap<String, f64> = self.params.iter().cloned().collect();
        for (k, v) in self.named.pairs() {
            if let Some(v) = v {
                params.insert(k.to_string(), v);
            }
        }
        RunConfig {
            seed: self.seed,
            grid_n: self.grid_n,
            box_l: self.box_l,
            samples: self.samples,
            refine: if self.no_refine { Some(false) } else { None },
            params,
            ..RunConfig::default()
        }
    }
}

/// Parses `argv` (program name first), runs the command and returns the exit code.
pub fn run_command<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(all_pass) => {
            if all_pass {
                0
            } else {
                1
            }
        }
        Err(msg) => {
            eprintln!("error: {msg}");
            2
        }
    }
}

fn execute(cli: Cli) -> Result<bool, String> {
    let base = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    let knobs = match &cli.command {
        Command::Kernel { knobs, .. }
        | Command::Gfun { knobs, .. }
        | Command::Norms { knobs }
        | Command::Verify { knobs, .. }
        | Command::Suite { knobs, .. } => knobs,
    };
    let mut flags = knobs.config();
    flags.out_dir = cli.out.clone();
    match &cli.command {
        Command::Kernel { symbol, .. } => flags.symbol = symbol.clone(),
        Command::Gfun { psi1, psi2, .. } => {
            flags.psi1 = psi1.clone();
            flags.psi2 = psi2.clone();
        }
        _ => {}
    }
    let cfg = base.overridden_by(flags);
    let out = cfg.out_dir();
    match &cli.command {
        Command::Kernel { .. } => kernel(&cfg, &out).map(|_| true),
        Command::Gfun { .. } => gfun(&cfg, &out).map(|_| true),
        Command::Norms { .. } => norms(&cfg, &out).map(|_| true),
        Command::Verify { id, .. } => {
            let r = verify_one(id, &cfg, &out)?;
            Ok(r.passed())
        }
        Command::Suite { all, only, .. } => {
            let ids: Vec<String> = if *all {
                ESTIMATE_IDS.iter().map(|s| s.to_string()).collect()
            } else if !only.is_empty() {
                only.clone()
            } else {
                cfg.suite.clone().unwrap_or_default()
            };
            suite(&ids, &cfg, &out)
        }
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<(), String> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| format!("cannot create {}: {e}", dir.display()))?;
    }
    let text = serde_json::to_string_pretty(value).map_err(err)? + "\n";
    std::fs::write(path, text).map_err(|e| format!("cannot write {}: {e}", path.display()))
}

fn create(path: &Path) -> Result<std::fs::File, String> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| format!("cannot create {}: {e}", dir.display()))?;
    }
    std::fs::File::create(path).map_err(|e| format!("cannot write {}: {e}", path.display()))
}

fn kernel(cfg: &RunConfig, out: &Path) -> Result<(), String> {
    let name = cfg.symbol.clone().unwrap_or_else(|| "power".to_string());
    let spec = builtin_symbol(&name, &cfg.params, 1).map_err(err)?;
    let n = cfg.grid_n.unwrap_or(1024);
    let l = cfg.box_l.unwrap_or(20.0);
    let (s, t) = (cfg.param("s", 0.0), cfg.param("t", 1.0));
    let grid = Arc::new(SpectralGrid::uniform(1, n, l, 0.0, 1.0, 2).map_err(err)?);
    let k = evolution_kernel(&spec, grid, s, t).map_err(err)?;
    let csv = out.join("kernel.csv");
    k.write_csv(create(&csv)?).map_err(err)?;
    let origin = k.at_origin();
    let json_path = out.join("kernel.json");
    write_json(
        &json_path,
        &json!({
            "schema_version": SCHEMA_VERSION,
            "command": "kernel",
            "config": cfg.to_json(),
            "symbol": spec.describe(),
            "grid_n": n, "box_l": l, "s": s, "t": t,
            "l1_norm": k.l1_norm(),
            "at_origin": [origin.re, origin.im],
        }),
    )?;
    println!("kernel: {} and {}", csv.display(), json_path.display());
    Ok(())
}

fn symbol_params(cfg: &RunConfig, index: u8, gamma: f64) -> BTreeMap<String, f64> {
    let mut p = BTreeMap::new();
    p.insert("gamma".to_string(), cfg.param(&format!("gamma{index}"), gamma));
    p.insert("kappa".to_string(), cfg.param(&format!("kappa{index}"), 1.0));
    p.extend(cfg.prefixed(&format!("psi{index}_")));
    p
}

fn gfun(cfg: &RunConfig, out: &Path) -> Result<(), String> {
    let psi1 = builtin_symbol(cfg.psi1.as_deref().unwrap_or("power"), &symbol_params(cfg, 1, 1.0), 1).map_err(err)?;
    let psi2 = builtin_symbol(cfg.psi2.as_deref().unwrap_or("power"), &symbol_params(cfg, 2, 2.0), 1).map_err(err)?;
    let n = cfg.grid_n.unwrap_or(64);
    let l = cfg.box_l.unwrap_or(4.0);
    let nt = cfg.param("nt", 17.0) as usize;
    let t_end = cfg.param("t_end", 1.0);
    let q = cfg.param("q", 2.0);
    let p = cfg.param("p", q);
    let mode = if cfg.param("outer", 0.0) != 0.0 {
        LMode::Outer
    } else {
        LMode::Fixed(cfg.param("l", 0.0))
    };
    let grid = Arc::new(SpectralGrid::uniform(1, n, l, 0.0, t_end, nt).map_err(err)?);
    let f: SpaceTimeField = FieldSampler {
        seed: cfg.seed.unwrap_or(0),
        harmonics: 1,
        ..FieldSampler::default()
    }
    .sample_field(&grid, 0)
    .map_err(err)?;
    let g = g_function(&f, &psi1, &psi2, mode, 0.0, q, &GOptions::default()).map_err(err)?;
    let csv = out.join("gfun.csv");
    g.write_csv(create(&csv)?).map_err(err)?;
    let json_path = out.join("gfun.json");
    write_json(
        &json_path,
        &json!({
            "schema_version": SCHEMA_VERSION,
            "command": "gfun",
            "config": cfg.to_json(),
            "psi1": psi1.describe(),
            "psi2": psi2.describe(),
            "grid_n": n, "box_l": l, "nt": nt, "t_end": t_end,
            "q": q, "beta": g.beta, "p": p,
            "g_lp_norm": g_lp_norm(&g, p).map_err(err)?,
            "f_lp_norm": lpevo::grid::spacetime_lebesgue_norm(&f, p).map_err(err)?,
            "warnings": g.warnings,
        }),
    )?;
    println!("gfun: {} and {}", csv.display(), json_path.display());
    Ok(())
}

fn norms(cfg: &RunConfig, out: &Path) -> Result<(), String> {
    let n = cfg.grid_n.unwrap_or(128);
    let l = cfg.box_l.unwrap_or(8.0);
    let p = cfg.param("p", 2.0);
    let alpha = cfg.param("alpha", 1.0);
    let grid = Arc::new(SpectralGrid::uniform(1, n, l, 0.0, 1.0, 2).map_err(err)?);
    let part = DyadicPartition::new(grid.clone()).map_err(err)?;
    let f = FieldSampler {
        seed: cfg.seed.unwrap_or(0),
        harmonics: 0,
        j_hi: part.j_max,
        ..FieldSampler::default()
    }
    .sample_field(&grid, 0)
    .map_err(err)?
    .slice(0);
    let b = besov_norm(&part, &f, alpha, p).map_err(err)?;
    let value = json!({
        "schema_version": SCHEMA_VERSION,
        "command": "norms",
        "config": cfg.to_json(),
        "grid_n": n, "box_l": l, "p": p, "alpha": alpha,
        "lebesgue": spatial_lebesgue_norm(&f, p).map_err(err)?,
        "besov": b.value,
        "besov_truncation": b.truncation,
        "sobolev": sobolev_norm(&f, alpha, p).map_err(err)?,
    });
    let path = out.join("norms.json");
    write_json(&path, &value)?;
    println!("{}", serde_json::to_string_pretty(&value).map_err(err)?);
    Ok(())
}

fn verify_one(id: &str, cfg: &RunConfig, out: &Path) -> Result<VerificationReport, String> {
    let mut r = run_estimate(id, &cfg.params, &cfg.harness()).map_err(err)?;
    r.config = json!({"estimate": r.config, "run": cfg.to_json()});
    let files = r.emit(out, id).map_err(err)?;
    let passed = r.checks.iter().filter(|c| c.passed).count();
    println!(
        "{id}: {} ({passed}/{} checks) -> {}",
        if r.passed() { "pass" } else { "FAIL" },
        r.checks.len(),
        files[0].display()
    );
    for c in r.checks.iter().filter(|c| !c.passed) {
        println!("  failed: {} = {}", c.name, c.value);
    }
    Ok(r)
}

fn suite(ids: &[String], cfg: &RunConfig, out: &Path) -> Result<bool, String> {
    let mut entries = Vec::new();
    let mut all_pass = true;
    for id in ids {
        let r = verify_one(id, cfg, out)?;
        all_pass &= r.passed();
        entries.push(json!({
            "id": id,
            "verdict": r.verdict,
            "checks": r.checks.len(),
            "failed": r.checks.iter().filter(|c| !c.passed).count(),
            "report": format!("{id}.json"),
        }));
    }
    let path = out.join("suite.json");
    write_json(
        &path,
        &json!({
            "schema_version": SCHEMA_VERSION,
            "config": cfg.to_json(),
            "estimates": entries,
            "verdict": if all_pass { "pass" } else { "fail" },
        }),
    )?;
    println!("suite: {} estimates, {} -> {}", ids.len(), if all_pass { "pass" } else { "FAIL" }, path.display());
    Ok(all_pass)
}
