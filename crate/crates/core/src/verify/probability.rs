//! Khintchine moments and the Bessel-potential/Besov embedding.

use std::sync::Arc;

use serde_json::json;

use super::report::{Check, Comparison, SampleRecord, StabilityRecord, VerificationReport};
use super::sampler::FieldSampler;
use super::{Harness, DRIFT_TOLERANCE};
use crate::error::{Error, Result};
use crate::grid::{SpatialField, SpectralGrid};
use crate::lp_decomp::DyadicPartition;
use crate::rademacher::{embedding_check, khintchine_moment, khintchine_upper_constant, RademacherBatch};

#[derive(Debug, Clone, PartialEq)]
pub struct KhintchineParams {
    pub p: f64,
    pub n_vars: usize,
}

fn coefficients(seed: u64, n: usize) -> Vec<f64> {
    // deterministic, non-uniform weights
    (0..n)
        .map(|i| {
            let x = ((i as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ seed) >> 11;
            0.25 + (x as f64) / (1u64 << 53) as f64
        })
        .collect()
}

pub fn verify_khintchine(p: &KhintchineParams, h: &Harness) -> Result<VerificationReport> {
    if !(p.p > 0.0) {
        return Err(Error::Exponent(format!("p = {} must be positive", p.p)));
    }
    let samples = h.samples(10_000);
    let config = json!({"seed": h.seed, "p": p.p, "n_vars": p.n_vars, "samples": samples});
    let mut report = VerificationReport::new("khintchine", config);

    let b2 = RademacherBatch::exhaustive(2)?;
    report.check(Check::new(
        "a=(1,1), p=4 exact",
        (khintchine_moment(&[1.0, 1.0], 4.0, &b2)?.mean - 8.0).abs(),
        Comparison::LessEqual,
        0.0,
    ));
    let b1 = RademacherBatch::exhaustive(1)?;
    report.check(Check::new(
        "a=(1) exact",
        (khintchine_moment(&[1.0], p.p, &b1)?.mean - 1.0).abs(),
        Comparison::LessEqual,
        0.0,
    ));
    for n in [3usize, 8, 16] {
        let a = coefficients(h.seed, n);
        let s2: f64 = a.iter().map(|v| v * v).sum();
        let s4: f64 = a.iter().map(|v| v.powi(4)).sum();
        let b = RademacherBatch::exhaustive(n)?;
        let e2 = khintchine_moment(&a, 2.0, &b)?.mean;
        let e4 = khintchine_moment(&a, 4.0, &b)?.mean;
        report.check(Check::new(&format!("exhaustive p=2 n={n}"), (e2 / s2 - 1.0).abs(), Comparison::LessThan, 1e-12));
        let m4 = 3.0 * s2 * s2 - 2.0 * s4;
        report.check(Check::new(&format!("exhaustive p=4 n={n}"), (e4 / m4 - 1.0).abs(), Comparison::LessThan, 1e-12));
    }

    let a = coefficients(h.seed, p.n_vars);
    let s2: f64 = a.iter().map(|v| v * v).sum();
    let batch = RademacherBatch::auto(h.seed, p.n_vars, samples)?;
    let e2 = khintchine_moment(&a, 2.0, &batch)?;
    let ep = khintchine_moment(&a, p.p, &batch)?;
    report.check(Check::new(
        "p=2 within 3 SE of sum a^2",
        (e2.mean - s2).abs(),
        Comparison::LessEqual,
        3.0 * e2.se,
    ));
    let lower = s2.powf(p.p / 2.0);
    let c2 = khintchine_upper_constant(p.p);
    report.value("moment", ep.mean);
    report.value("moment_se", ep.se);
    report.value("l2_power", lower);
    report.value("upper_constant", c2);
    if p.p >= 2.0 {
        report.check(Check::new("lower bound", ep.mean + 3.0 * ep.se, Comparison::GreaterEqual, lower));
        report.check(Check::new("upper bound", ep.mean - 3.0 * ep.se, Comparison::LessEqual, c2 * lower));
    }
    if !batch.exhaustive {
        let worst = batch.column_means().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        report.check(Check::new(
            "column means",
            worst,
            Comparison::LessThan,
            4.0 / (batch.n_samples as f64).sqrt(),
        ));
    }
    Ok(report.finish())
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingParams {
    pub ps: Vec<f64>,
    pub alphas: Vec<f64>,
    pub ms: Vec<usize>,
}

/// `w(ξ) = χ(|ξ|)² + Σ_{j=1}^{j_max} Φ(2^{-j}ξ)²`, the `p = 2`, `α = 0` Besov weight.
pub fn parseval_weight(part: &DyadicPartition) -> Vec<f64> {
    let mut w: Vec<f64> = part.s0_multiplier().iter().map(|v| v * v).collect();
    for j in 1..=part.j_max {
        for (o, v) in w.iter_mut().zip(part.block_multiplier(j)) {
            *o += v * v;
        }
    }
    w
}

/// `sqrt(Σ w |f̂|² / Σ |f̂|²)` over all components.
pub fn parseval_ratio(part: &DyadicPartition, f: &SpatialField) -> f64 {
    let grid = f.grid();
    let w = parseval_weight(part);
    let (mut num, mut den) = (0.0, 0.0);
    for c in 0..f.m() {
        let mut v = f.component(c).to_vec();
        grid.dft(&mut v);
        for (a, wk) in v.iter().zip(&w) {
            num += wk * a.norm_sqr();
            den += a.norm_sqr();
        }
    }
    (num / den).sqrt()
}

/// Largest embedding ratio over `count` fields per `(p, α, m)`, in `ms × ps × alphas` order.
fn embedding_level(
    p: &EmbeddingParams,
    grid: &Arc<SpectralGrid>,
    part: &DyadicPartition,
    seed: u64,
    count: usize,
    label: &str,
    report: &mut VerificationReport,
    records: &mut Vec<SampleRecord>,
    checks: bool,
) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for &m in &p.ms {
        let sampler = FieldSampler {
            seed,
            m,
            j_lo: -1,
            j_hi: part.j_max,
            harmonics: 0,
            decay: 0.5,
            ..FieldSampler::default()
        };
        let batch = if m > 1 { Some(RademacherBatch::auto(seed, m, 64)?) } else { None };
        let fields: Vec<SpatialField> = (0..count as u64)
            .map(|s| sampler.sample_field(grid, s).map(|f| f.slice(0)))
            .collect::<Result<_>>()?;
        for &pp in &p.ps {
            for &alpha in &p.alphas {
                let mut best: f64 = 0.0;
                let mut parseval_err: f64 = 0.0;
                let mut consistent = true;
                for (s, f) in fields.iter().enumerate() {
                    let r = embedding_check(f, alpha, pp, batch.as_ref())?;
                    best = best.max(r.direct_ratio);
                    consistent &= r.chain_consistent;
                    if pp == 2.0 && alpha == 0.0 {
                        let pr = parseval_ratio(part, f);
                        parseval_err = parseval_err.max((r.direct_ratio / pr - 1.0).abs());
                    }
                    records.push(SampleRecord {
                        group: format!("{label} p={pp} alpha={alpha} m={m}"),
                        index: s as u64,
                        lhs: r.besov,
                        rhs: r.sobolev,
                        ratio: r.direct_ratio,
                    });
                }
                if checks {
                    let tag = format!("p={pp} alpha={alpha} m={m}");
                    report.check(Check::flag(&format!("max ratio finite {tag}"), best.is_finite()));
                    if m > 1 {
                        report.check(Check::flag(&format!("sign-mixture chain consistent {tag}"), consistent));
                    }
                    if pp == 2.0 && alpha == 0.0 {
                        report.check(Check::new(
                            &format!("Parseval relative error {tag}"),
                            parseval_err,
                            Comparison::LessThan,
                            0.05,
                        ));
                    }
                    report.value(&format!("max_ratio_{tag}"), best);
                }
                out.push(best);
            }
        }
    }
    Ok(out)
}

pub fn verify_embedding(p: &EmbeddingParams, h: &Harness) -> Result<VerificationReport> {
    if let Some(bad) = p.ps.iter().find(|&&v| v < 2.0) {
        return Err(Error::Hypothesis(format!("embedding requires p >= 2, got {bad}")));
    }
    if p.ms.iter().any(|&m| m == 0) {
        return Err(Error::InvalidParameter("m must be positive".into()));
    }
    let n = h.n(128);
    let l = h.l(8.0);
    let count = h.samples(200);
    let config = json!({
        "seed": h.seed, "grid_n": n, "box_l": l, "samples": count, "refine": h.refine,
        "p": p.ps, "alpha": p.alphas, "m": p.ms,
    });
    let mut report = VerificationReport::new("embedding", config);
    let grid = Arc::new(SpectralGrid::uniform(1, n, l, 0.0, 1.0, 2)?);
    let part = DyadicPartition::new(grid.clone())?;
    let w = parseval_weight(&part);
    let resolved: Vec<f64> = grid
        .wave_norms()
        .iter()
        .zip(&w)
        .filter(|(r, _)| **r > 0.0 && **r <= 2f64.powi(part.j_max))
        .map(|(_, v)| v.sqrt())
        .collect();
    report.value("parseval_weight_min", resolved.iter().cloned().fold(f64::INFINITY, f64::min));
    report.value("parseval_weight_max", resolved.iter().cloned().fold(0.0, f64::max));
    let mut records = Vec::new();
    let coarse = embedding_level(p, &grid, &part, h.seed, count, "base", &mut report, &mut records, true)?;
    if h.refine {
        let mut scratch = Vec::new();
        let fine = embedding_level(p, &grid, &part, h.seed, 2 * count, "doubled", &mut report, &mut scratch, false)?;
        let mut k = 0;
        for &m in &p.ms {
            for &pp in &p.ps {
                for &alpha in &p.alphas {
                    report.stability_check(
                        StabilityRecord::new(&format!("max ratio p={pp} alpha={alpha} m={m}"), coarse[k], fine[k]),
                        DRIFT_TOLERANCE,
                    );
                    k += 1;
                }
            }
        }
    }
    report.set_samples(records);
    Ok(report.finish())
}
