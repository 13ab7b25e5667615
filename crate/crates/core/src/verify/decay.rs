//! Dyadic-block `L¹` decay and polynomial tails of the kernel derivatives.

use std::sync::Arc;

use num_complex::Complex64;
use serde_json::json;

use super::report::{Check, Comparison, FitRecord, VerificationReport};
use super::{symbol_json, Harness};
use crate::error::{Error, Result};
use crate::evolution::{kernel_from_multiplier, symbol_multiplier};
use crate::grid::SpectralGrid;
use crate::lp_decomp::phi_profile;
use crate::symbols::{default_n_derivs, SymbolSpec, TimeModulation};
use crate::util::least_squares;

#[derive(Debug, Clone, PartialEq)]
pub struct DecayParams {
    pub gamma1: f64,
    pub gamma2: f64,
}

/// Which derivative of `L_{ψ₁} p_{ψ₂}(τ, ·)` a tail refers to.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TailKind {
    Gradient,
    SecondGradient,
    TimeGradient,
}

impl TailKind {
    fn label(self) -> &'static str {
        match self {
            TailKind::Gradient => "grad",
            TailKind::SecondGradient => "grad2",
            TailKind::TimeGradient => "dt_grad",
        }
    }

    /// Bound exponent `e` in `|x|^{-e}`.
    pub fn exponent(self, gamma1: f64, gamma2: f64, d: usize) -> f64 {
        let d = d as f64;
        match self {
            TailKind::Gradient => gamma1 + 1.0 + d,
            TailKind::SecondGradient => gamma1 + 2.0 + d,
            TailKind::TimeGradient => gamma1 + gamma2 + 1.0 + d,
        }
    }
}

fn is_even_integer(v: f64) -> bool {
    (v / 2.0 - (v / 2.0).round()).abs() < 1e-12
}

/// The tail is a pure power with the bound exponent when the leading
/// non-smooth term of the multiplier at `ξ = 0` is `|ξ|^{γ₁}` times the derivative factor.
pub fn tail_is_sharp(kind: TailKind, gamma1: f64, gamma2: f64) -> bool {
    let order = match kind {
        TailKind::Gradient | TailKind::SecondGradient => gamma1,
        TailKind::TimeGradient => gamma1 + gamma2,
    };
    !is_even_integer(order)
}

/// `ψ₁ = -|ξ|^{γ₁}` as a lattice multiplier; `γ₁ = 0` gives `-1` (the kernel itself).
#[derive(Debug, Clone)]
pub struct Psi1 {
    spec: Option<SymbolSpec>,
}

impl Psi1 {
    pub fn new(gamma1: f64, n_derivs: usize) -> Result<Self> {
        if gamma1 < 0.0 || !gamma1.is_finite() {
            return Err(Error::InvalidParameter(format!("gamma1 = {gamma1} must be >= 0")));
        }
        let spec = if gamma1 > 0.0 {
            Some(SymbolSpec::power(1.0, gamma1, TimeModulation::None, n_derivs)?)
        } else {
            None
        };
        Ok(Self { spec })
    }

    fn multiplier(&self, grid: &SpectralGrid) -> Result<Vec<Complex64>> {
        match &self.spec {
            Some(s) => symbol_multiplier(s, grid, 0.0),
            None => Ok(vec![Complex64::new(-1.0, 0.0); grid.points()]),
        }
    }

    fn json(&self) -> serde_json::Value {
        match &self.spec {
            Some(s) => symbol_json(s),
            None => json!({"symbol": "-1", "gamma": 0.0}),
        }
    }
}

fn symbols(p: &DecayParams) -> Result<(Psi1, SymbolSpec)> {
    let n = default_n_derivs(p.gamma1.max(p.gamma2), 1);
    Ok((Psi1::new(p.gamma1, n)?, SymbolSpec::power(1.0, p.gamma2, TimeModulation::None, n)?))
}

/// `ψ₁(ξ) e^{τψ₂(ξ)}` with the derivative factor of `kind` (`None` for the kernel itself).
fn multiplier(
    grid: &SpectralGrid,
    psi1: &Psi1,
    psi2: &SymbolSpec,
    tau: f64,
    kind: Option<TailKind>,
) -> Result<Vec<Complex64>> {
    let a = psi1.multiplier(grid)?;
    let b = symbol_multiplier(psi2, grid, 0.0)?;
    Ok((0..grid.points())
        .map(|k| {
            let xi = grid.wave_vector(k)[0];
            let base = a[k] * (b[k] * tau).exp();
            match kind {
                None => base,
                Some(TailKind::Gradient) => base * Complex64::new(0.0, xi),
                Some(TailKind::SecondGradient) => base * (-xi * xi),
                Some(TailKind::TimeGradient) => base * b[k] * Complex64::new(0.0, xi),
            }
        })
        .collect())
}

/// `‖L_{ψ₁} p_{ψ₂,j}(τ)‖₁` for the block `Φ(2^{-j}ξ)`.
pub fn block_l1_norm(grid: &SpectralGrid, psi1: &Psi1, psi2: &SymbolSpec, j: i32, tau: f64) -> Result<f64> {
    let mut m = multiplier(grid, psi1, psi2, tau, None)?;
    let s = 2f64.powi(-j);
    for (v, r) in m.iter_mut().zip(grid.wave_norms()) {
        *v *= phi_profile(s * r);
    }
    let k = kernel_from_multiplier(grid, &m)?;
    Ok(k.iter().map(|v| v.norm()).sum::<f64>() * grid.dx())
}

/// Trimmed tail of one kernel derivative: `(ln x, ln |K(x)|)` on `x > 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct TailData {
    pub kind: TailKind,
    pub window: [f64; 2],
    pub data: Vec<[f64; 2]>,
    /// `x > 0` and the magnitudes, for oracles.
    pub x: Vec<f64>,
    pub magnitude: Vec<f64>,
}

/// Kernel derivative on the positive half line of `grid`.
pub fn tail_profile(
    grid: &SpectralGrid,
    psi1: &Psi1,
    psi2: &SymbolSpec,
    tau: f64,
    kind: TailKind,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let m = multiplier(grid, psi1, psi2, tau, Some(kind))?;
    let k = kernel_from_multiplier(grid, &m)?;
    let n = grid.n();
    let x: Vec<f64> = (n / 2 + 1..n).map(|j| grid.position(j)[0]).collect();
    let v: Vec<f64> = (n / 2 + 1..n).map(|j| k[j].norm()).collect();
    Ok((x, v))
}

/// Log-spaced samples of the tail on `[lo, hi]`, lattice points only.
fn log_samples(x: &[f64], v: &[f64], lo: f64, hi: f64, count: usize) -> Vec<[f64; 2]> {
    let mut out: Vec<[f64; 2]> = Vec::new();
    if !(hi > lo) {
        return out;
    }
    let dx = x[1] - x[0];
    for i in 0..count {
        let target = lo * (hi / lo).powf(i as f64 / (count - 1) as f64);
        let j = (((target - x[0]) / dx).round() as usize).min(x.len() - 1);
        if v[j] > 0.0 && out.last().map_or(true, |p| p[0] < x[j].ln()) {
            out.push([x[j].ln(), v[j].ln()]);
        }
    }
    out
}

/// Tail samples and window on the decreasing envelope `sup_{y >= x} |K(y)|`.
/// Polynomial cases use `[max(4dx, 20τ^{1/γ₂}), L/2]`; super-polynomial ones start
/// where the envelope falls below 1% of its peak. Both stop where `|K|` reaches
/// the round-off floor.
pub fn tail_data(
    grid: &SpectralGrid,
    psi1: &Psi1,
    psi2: &SymbolSpec,
    tau: f64,
    kind: TailKind,
    polynomial: bool,
) -> Result<TailData> {
    let (x, v) = tail_profile(grid, psi1, psi2, tau, kind)?;
    let mut env = v.clone();
    for j in (0..env.len() - 1).rev() {
        env[j] = env[j].max(env[j + 1]);
    }
    let peak = env[0];
    let floor_rel = if polynomial { 1e-10 } else { 1e-12 };
    let last = x
        .iter()
        .zip(&v)
        .rev()
        .find(|(_, &m)| m > floor_rel * peak)
        .map_or(x[0], |(&xx, _)| xx);
    let lo = if polynomial {
        (4.0 * grid.dx()).max(20.0 * tau.powf(1.0 / psi2.gamma))
    } else {
        let j = env.iter().position(|&e| e < 1e-2 * peak).unwrap_or(0);
        x[j].max(4.0 * grid.dx())
    };
    let hi = last.min(grid.half_length() / 2.0);
    Ok(TailData {
        kind,
        window: [lo, hi],
        data: log_samples(&x, &env, lo, hi, 40),
        x,
        magnitude: v,
    })
}

/// Periodized Poisson kernel `P_τ` on `[-L, L)` and its derivative.
pub fn periodic_poisson(x: f64, tau: f64, l: f64) -> (f64, f64) {
    let a = std::f64::consts::PI * tau / l;
    let th = std::f64::consts::PI * x / l;
    let den = a.cosh() - th.cos();
    let p = a.sinh() / (2.0 * l * den);
    let dp = -a.sinh() * std::f64::consts::PI * th.sin() / (2.0 * l * l * den * den);
    (p, dp)
}

pub fn verify_kernel_decay(p: &DecayParams, h: &Harness) -> Result<VerificationReport> {
    let (psi1, psi2) = symbols(p)?;
    let block_n = h.n(4096);
    let block_l = h.l(8.0);
    let tail_l = 1024.0;
    let tail_n = 32768;
    let tau = 1.0;
    let config = json!({
        "seed": h.seed, "block_grid": {"n": block_n, "box_l": block_l}, "tail_grid": {"n": tail_n, "box_l": tail_l},
        "tau": tau, "gamma1": p.gamma1, "gamma2": p.gamma2, "psi1": psi1.json(), "psi2": symbol_json(&psi2),
        "j": [2, 6], "k": [2, 8],
    });
    let mut report = VerificationReport::new("kernel-decay", config);

    // block decay
    let grid = Arc::new(SpectralGrid::uniform(1, block_n, block_l, 0.0, 1.0, 2)?);
    let mut rows = Vec::new();
    let mut ys = Vec::new();
    for j in 2..=6 {
        let mut per_j = Vec::new();
        for k in 2..=8 {
            let t = 2f64.powi(-k);
            let norm = block_l1_norm(&grid, &psi1, &psi2, j, t)?;
            let u = t * 2f64.powf(j as f64 * p.gamma2);
            rows.push(vec![1.0, j as f64, u]);
            ys.push(norm.ln());
            per_j.push([t, norm.ln()]);
        }
        let fit = FitRecord::fit(&format!("block j={j} log L1 vs t-s"), "t-s", "ln L1", per_j, None);
        report.check(Check::new(&format!("time slope j={j}"), fit.slope, Comparison::LessThan, 0.0));
        report.fits.push(fit);
    }
    if let Some(beta) = least_squares(&rows, &ys) {
        let growth = beta[1];
        let c = -beta[2];
        report.value("block_growth_slope", growth);
        report.value("block_decay_c", c);
        report.value("block_growth_bound", p.gamma1 * std::f64::consts::LN_2);
        report.check(Check::new(
            "growth slope <= 1.1 gamma1 ln 2",
            growth,
            Comparison::LessEqual,
            1.1 * p.gamma1 * std::f64::consts::LN_2,
        ));
        report.check(Check::new("decay coefficient c", c, Comparison::GreaterThan, 0.0));
    } else {
        report.check(Check::flag("block regression solvable", false));
    }

    // tails
    let tail_grid = SpectralGrid::uniform(1, tail_n, tail_l, 0.0, 1.0, 2)?;
    for kind in [TailKind::Gradient, TailKind::SecondGradient, TailKind::TimeGradient] {
        let e = kind.exponent(p.gamma1, p.gamma2, 1);
        let sharp = tail_is_sharp(kind, p.gamma1, p.gamma2);
        let polynomial = sharp || !is_even_integer(p.gamma2);
        let td = tail_data(&tail_grid, &psi1, &psi2, tau, kind, polynomial)?;
        let label = kind.label();
        report.value(&format!("{label}_window_lo"), td.window[0]);
        report.value(&format!("{label}_window_hi"), td.window[1]);
        // a Gaussian-type tail reaches the round-off floor within a short range
        let span = if polynomial { 4.0 } else { 1.5 };
        let wide = td.window[1] >= span * td.window[0] && td.data.len() >= 8;
        report.check(Check::flag(&format!("{label} tail window wide enough"), wide));
        if !wide {
            continue;
        }
        let fit = FitRecord::fit(&format!("{label} tail"), "ln x", &format!("ln |{label} K|"), td.data, Some(-e));
        let slope = fit.slope;
        report.value(&format!("{label}_tail_slope"), slope);
        report.value(&format!("{label}_bound_exponent"), -e);
        let assert_slope = sharp && kind != TailKind::TimeGradient;
        if assert_slope {
            report.check(Check::within(
                &format!("{label} tail slope within 10% of -{e}"),
                slope,
                -1.1 * e,
                -0.9 * e,
            ));
        } else {
            report.check(Check::new(
                &format!("{label} tail bound slope <= -{e}"),
                slope,
                Comparison::LessEqual,
                -0.9 * e,
            ));
        }
        report.fits.push(fit);
    }
    if p.gamma1 == 0.0 && p.gamma2 == 1.0 {
        let (x, v) = tail_profile(&tail_grid, &psi1, &psi2, tau, TailKind::Gradient)?;
        let peak = v.iter().cloned().fold(0.0, f64::max);
        let err = x
            .iter()
            .zip(&v)
            .map(|(&xx, &m)| (m - periodic_poisson(xx, tau, tail_l).1.abs()).abs())
            .fold(0.0, f64::max);
        report.check(Check::new("Poisson derivative oracle (relative sup)", err / peak, Comparison::LessThan, 1e-8));
        report.note("gamma1 = 0: the gradient tail of the Poisson kernel is |x|^-3, steeper than the bound");
    }
    Ok(report.finish())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn poisson_closed_form_normalized() {
        // ∫ P = 1 over the period
        let l = 4.0;
        let n = 4096;
        let dx = 2.0 * l / n as f64;
        let s: f64 = (0..n).map(|j| periodic_poisson(-l + j as f64 * dx, 0.3, l).0).sum::<f64>() * dx;
        assert!((s - 1.0).abs() < 1e-10);
    }

    #[test]
    fn sharpness_rule() {
        assert!(tail_is_sharp(TailKind::Gradient, 1.0, 1.0));
        assert!(!tail_is_sharp(TailKind::Gradient, 2.0, 2.0));
        assert!(!tail_is_sharp(TailKind::TimeGradient, 1.0, 1.0));
        assert!(tail_is_sharp(TailKind::TimeGradient, 0.5, 1.0));
    }

    #[test]
    fn block_norm_scales_like_power() {
        // τ -> 0: ‖K_j‖₁ ∝ 2^{jγ₁} by dilation
        let g = SpectralGrid::uniform(1, 4096, 8.0, 0.0, 1.0, 2).unwrap();
        let (a, b) = symbols(&DecayParams { gamma1: 1.0, gamma2: 1.0 }).unwrap();
        let n3 = block_l1_norm(&g, &a, &b, 3, 0.0).unwrap();
        let n4 = block_l1_norm(&g, &a, &b, 4, 0.0).unwrap();
        assert!((n4 / n3 - 2.0).abs() < 1e-3, "{}", n4 / n3);
    }
}
