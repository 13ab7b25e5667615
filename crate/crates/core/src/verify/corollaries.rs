//! Special cases: the fractional Laplacian square function, generator
//! identities by finite differences and the fractional heat semigroup.

use std::sync::Arc;

use num_complex::Complex64;
use serde_json::json;

use super::estimates::{verify_lp_main, LpMainParams};
use super::report::{Check, Comparison, FitRecord, VerificationReport};
use super::sampler::FieldSampler;
use super::Harness;
use crate::error::{Error, Result};
use crate::evolution::{apply_evolution, apply_pseudo_diff};
use crate::grid::{SpatialField, SpectralGrid};
use crate::symbols::{default_n_derivs, SymbolSpec, TimeModulation};

#[derive(Debug, Clone, PartialEq)]
pub struct CorollaryParams {
    pub gamma: f64,
    pub p: f64,
    pub q: f64,
}

/// Finite-difference steps for the generator identities.
pub const FD_STEPS: [f64; 3] = [1e-2, 5e-3, 2.5e-3];

fn rel_sup(a: &SpatialField, b: &SpatialField) -> f64 {
    a.max_distance(b) / b.sup_norm().max(f64::MIN_POSITIVE)
}

fn combine(a: &SpatialField, b: &SpatialField, scale: f64) -> Result<SpatialField> {
    Ok(a.sub(b)?.scaled(Complex64::new(scale, 0.0)))
}

/// Relative sup errors of the central differences in `t` and in `s` against
/// `L_ψ(t)𝒯f` and `-L_ψ(s)𝒯f`.
pub fn generator_errors(spec: &SymbolSpec, s: f64, t: f64, f: &SpatialField, steps: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let u = apply_evolution(spec, s, t, f)?;
    let dt_exact = apply_pseudo_diff(spec, t, &u)?;
    let ds_exact = apply_pseudo_diff(spec, s, &u)?.scaled(Complex64::new(-1.0, 0.0));
    let mut et = Vec::new();
    let mut es = Vec::new();
    for &h in steps {
        let fwd = apply_evolution(spec, s, t + h, f)?;
        let bwd = apply_evolution(spec, s, t - h, f)?;
        et.push(rel_sup(&combine(&fwd, &bwd, 0.5 / h)?, &dt_exact));
        let fwd = apply_evolution(spec, s + h, t, f)?;
        let bwd = apply_evolution(spec, s - h, t, f)?;
        es.push(rel_sup(&combine(&fwd, &bwd, 0.5 / h)?, &ds_exact));
    }
    Ok((et, es))
}

/// `log₂(e(h)/e(h/2))` for consecutive halvings.
pub fn observed_orders(errors: &[f64], steps: &[f64]) -> Vec<f64> {
    errors
        .windows(2)
        .zip(steps.windows(2))
        .map(|(e, h)| (e[0] / e[1]).ln() / (h[0] / h[1]).ln())
        .collect()
}

fn test_field(grid: &Arc<SpectralGrid>, seed: u64) -> Result<SpatialField> {
    let sampler = FieldSampler {
        seed,
        j_lo: -1,
        j_hi: 1,
        harmonics: 0,
        decay: 1.0,
        ..FieldSampler::default()
    };
    Ok(sampler.sample_field(grid, 0)?.slice(0))
}

pub fn verify_corollaries(p: &CorollaryParams, h: &Harness) -> Result<VerificationReport> {
    if !(p.q >= 2.0) || p.p < p.q {
        return Err(Error::Hypothesis(format!("need 2 <= q <= p, got q = {}, p = {}", p.q, p.p)));
    }
    if !(p.gamma > 0.0) {
        return Err(Error::InvalidParameter(format!("gamma = {} must be positive", p.gamma)));
    }
    let n = h.n(64);
    let l = h.l(4.0);
    let config = json!({
        "seed": h.seed, "grid_n": n, "box_l": l, "gamma": p.gamma, "p": p.p, "q": p.q,
        "fd_steps": FD_STEPS, "samples": h.samples(20), "refine": h.refine,
    });
    let mut report = VerificationReport::new("corollaries", config);
    let grid = Arc::new(SpectralGrid::uniform(1, n, l, 0.0, 1.0, 2)?);
    let f = test_field(&grid, h.seed)?;
    let nd = default_n_derivs(p.gamma, 1);

    // generator identities with a time-dependent symbol
    let osc = SymbolSpec::power(
        1.0,
        p.gamma,
        TimeModulation::Oscillating {
            amplitude: 0.5,
            omega: 3.0,
        },
        nd,
    )?;
    let (s, t) = (0.2, 0.7);
    let (et, es) = generator_errors(&osc, s, t, &f, &FD_STEPS)?;
    for (name, errs) in [("dt", &et), ("ds", &es)] {
        let orders = observed_orders(errs, &FD_STEPS);
        for (i, o) in orders.iter().enumerate() {
            report.check(Check::new(&format!("{name} observed order {i}"), *o, Comparison::GreaterEqual, 1.8));
        }
        let data: Vec<[f64; 2]> = FD_STEPS.iter().zip(errs.iter()).map(|(h, e)| [h.ln(), e.ln()]).collect();
        report.fits.push(FitRecord::fit(&format!("{name} central difference"), "ln h", "ln rel error", data, Some(2.0)));
        report.value(&format!("{name}_error_finest"), *errs.last().unwrap());
    }

    // fractional heat semigroup: 𝒯(t,s) = T_γ(t-s)
    let heat = SymbolSpec::fractional_heat(1.0, p.gamma)?;
    let u = apply_evolution(&heat, s, t, &f)?;
    let direct: Vec<f64> = grid.wave_norms().iter().map(|r| (-(t - s) * r.powf(p.gamma)).exp()).collect();
    let semigroup = f.multiplied_real(&direct)?;
    report.check(Check::new("T(t,s) = T_gamma(t-s)", rel_sup(&u, &semigroup), Comparison::LessThan, 1e-12));
    let shifted = apply_evolution(&heat, s + 1.3, t + 1.3, &f)?;
    report.check(Check::new("time translation", rel_sup(&shifted, &u), Comparison::LessThan, 1e-12));

    // (-Δ)^{γ/(2q)} square function
    let mut lp = LpMainParams::power(p.gamma / p.q, p.gamma, 1.0, 1.0, 0.0, p.q, vec![p.p], false, 0.0)?;
    lp.sampler.j_hi = 2;
    let sub = Harness {
        samples: Some(h.samples(20)),
        ..h.clone()
    };
    let inner = verify_lp_main(&lp, &sub)?;
    for c in inner.checks {
        report.check(Check {
            name: format!("fractional laplacian: {}", c.name),
            ..c
        });
    }
    for (k, v) in inner.values {
        report.value(&format!("fractional_laplacian_{k}"), v);
    }
    report.stability.extend(inner.stability);
    report.note(format!(
        "square function with L = -(-Δ)^(gamma/(2q)) and the fractional heat semigroup, gamma = {}",
        p.gamma
    ));
    Ok(report.finish())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn orders_of_exact_quadratic() {
        let e: Vec<f64> = FD_STEPS.iter().map(|h| 3.0 * h * h).collect();
        for o in observed_orders(&e, &FD_STEPS) {
            assert!((o - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn generator_orders_heat() {
        let g = Arc::new(SpectralGrid::uniform(1, 64, 4.0, 0.0, 1.0, 2).unwrap());
        let f = test_field(&g, 1).unwrap();
        let spec = SymbolSpec::power(
            1.0,
            1.5,
            TimeModulation::Oscillating {
                amplitude: 0.5,
                omega: 3.0,
            },
            4,
        )
        .unwrap();
        let (et, es) = generator_errors(&spec, 0.2, 0.7, &f, &FD_STEPS).unwrap();
        assert!(observed_orders(&et, &FD_STEPS).iter().all(|&o| o > 1.8), "{et:?}");
        assert!(observed_orders(&es, &FD_STEPS).iter().all(|&o| o > 1.8), "{es:?}");
    }
}
