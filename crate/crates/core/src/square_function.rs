//! The parabolic Littlewood-Paley g-function
//! `𝒢_{a,q} f(l, t, x)^q = ∫_a^t (t-s)^{β-1} ‖(ℒ_{ψ₁}(l) 𝒯_{ψ₂}(t, s) f(s))(x)‖_V^q ds`,
//! `β = qγ₁/γ₂`, its `l = t` variant and space-time `L^p` norms.

use std::io::Write;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolution::{symbol_multiplier, TimeIntegrator};
use crate::grid::{ScalarField, SpaceTimeField, SpectralGrid};
use crate::quadrature::GradedRule;
use crate::symbols::{check_symbol_class, SampleSpec, SymbolClass, SymbolSpec};
use crate::util::par_map;

/// Where the operator `ℒ_{ψ₁}(l)` is frozen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum LMode {
    Fixed(f64),
    /// `l = t`, the outer time.
    Outer,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GOptions {
    pub rule: GradedRule,
    /// Run a cheap sampled class check of both symbols and report failures as warnings.
    pub class_warnings: bool,
}

impl Default for GOptions {
    fn default() -> Self {
        Self {
            rule: GradedRule::default(),
            class_warnings: true,
        }
    }
}

/// `𝒢` on every lattice point of the field's grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GFunctionResult {
    pub field: ScalarField,
    pub q: f64,
    pub beta: f64,
    pub l_mode: LMode,
    pub rule: GradedRule,
    /// Quadrature nodes used at each output time.
    pub nodes_per_time: Vec<usize>,
    pub warnings: Vec<String>,
}

impl GFunctionResult {
    pub fn grid(&self) -> &Arc<SpectralGrid> {
        self.field.grid()
    }

    /// CSV `t,x,G`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        self.field.write_csv(w, "G")
    }
}

fn class_warnings(psi1: &SymbolSpec, psi2: &SymbolSpec, grid: &SpectralGrid) -> Vec<String> {
    let mut out = Vec::new();
    if psi1.class != SymbolClass::ST {
        out.push("psi1 is not declared in class S_T".to_string());
    }
    let d = grid.dim();
    let lo = grid.dxi();
    let hi = grid.nyquist();
    let times = [grid.t_start().max(0.0), grid.t_end().max(0.0)];
    let samples = SampleSpec::log_spaced(d, &times, lo, hi, 6);
    for (name, spec) in [("psi1", psi1), ("psi2", psi2)] {
        let mut low = spec.clone();
        low.n_derivs = low.n_derivs.min(2);
        match check_symbol_class(&low, &samples, 1e-3) {
            Ok(r) if r.passes() => {}
            Ok(r) => out.push(format!(
                "{name} fails the sampled class check (S1 margin {:.3e})",
                r.s1_margin
            )),
            Err(e) => out.push(format!("{name}: class check not run ({e})")),
        }
    }
    out
}

struct Prepared {
    np: usize,
    m: usize,
    /// raw DFT of every component-slice, `[time][comp][freq]`
    fhat: Vec<Complex64>,
    zero_slice: Vec<bool>,
    /// largest `|ξ|` carried by the data
    xi_sup: f64,
}

fn prepare(f: &SpaceTimeField) -> Prepared {
    let grid = f.grid();
    let np = grid.points();
    let m = f.m();
    let nt = f.nt();
    let slices: Vec<Vec<Complex64>> = par_map(nt, |i| {
        let mut v = f.slice_values(i).to_vec();
        for c in 0..m {
            grid.dft(&mut v[c * np..(c + 1) * np]);
        }
        v
    });
    let zero_slice: Vec<bool> = (0..nt)
        .map(|i| f.slice_values(i).iter().all(|v| *v == Complex64::new(0.0, 0.0)))
        .collect();
    let peak = slices
        .iter()
        .flat_map(|s| s.iter().map(|v| v.norm()))
        .fold(0.0, f64::max);
    let norms = grid.wave_norms();
    let mut xi_sup: f64 = 0.0;
    if peak > 0.0 {
        for s in &slices {
            for c in 0..m {
                for k in 0..np {
                    if s[c * np + k].norm() > 1e-14 * peak {
                        xi_sup = xi_sup.max(norms[k]);
                    }
                }
            }
        }
    }
    Prepared {
        np,
        m,
        fhat: slices.concat(),
        zero_slice,
        xi_sup,
    }
}

/// Computes `𝒢_{a,q} f(l, t, x)` at every time node `t` and lattice point `x`.
///
/// `a` must be the first time node. The `s`-integral uses
/// [`GradedRule::nodes_with_breaks`] in `τ = t - s` with extra breaks at the time
/// nodes, and `f(s)` is interpolated linearly in time on the Fourier side.
pub fn g_function(
    f: &SpaceTimeField,
    psi1: &SymbolSpec,
    psi2: &SymbolSpec,
    l: LMode,
    a: f64,
    q: f64,
    opts: &GOptions,
) -> Result<GFunctionResult> {
    if !(q >= 2.0) {
        return Err(Error::Exponent(format!("q = {q} must be >= 2")));
    }
    let grid = f.grid().clone();
    if (a - grid.t_start()).abs() > 1e-12 * a.abs().max(1.0) {
        return Err(Error::InvalidParameter(format!(
            "a = {a} must equal the first time node {}",
            grid.t_start()
        )));
    }
    let d = grid.dim();
    psi1.validate_for_dim(d)?;
    psi2.validate_for_dim(d)?;
    let beta = q * psi1.gamma / psi2.gamma;
    let warnings = if opts.class_warnings {
        class_warnings(psi1, psi2, &grid)
    } else {
        Vec::new()
    };

    let prep = prepare(f);
    let integrator = TimeIntegrator::new(psi2, grid.clone())?;
    let frozen_psi1 = match l {
        LMode::Fixed(l) => Some(symbol_multiplier(psi1, &grid, l)?),
        LMode::Outer if psi1.time_independent() => Some(symbol_multiplier(psi1, &grid, 0.0)?),
        LMode::Outer => None,
    };
    let stiffness = q * psi2.mu * prep.xi_sup.powf(psi2.gamma);
    let nodes = grid.t_nodes().to_vec();
    let nt = nodes.len();
    let np = prep.np;
    let m = prep.m;
    let all_zero = prep.zero_slice.iter().all(|z| *z);

    let rows: Vec<Result<(Vec<f64>, usize)>> = par_map(nt, |i| {
        let t = nodes[i];
        if i == 0 || all_zero {
            return Ok((vec![0.0; np], 0));
        }
        let a1 = match &frozen_psi1 {
            Some(v) => v.clone(),
            None => symbol_multiplier(psi1, &grid, t)?,
        };
        let total = t - nodes[0];
        let breaks: Vec<f64> = nodes[..i].iter().map(|tk| t - tk).collect();
        let quad = opts.rule.nodes_with_breaks(total, beta, stiffness, &breaks);
        let mut acc = vec![0.0; np];
        let mut work = vec![Complex64::new(0.0, 0.0); np];
        let mut sq = vec![0.0; np];
        let inv_np = 1.0 / np as f64;
        for &(tau, w) in &quad {
            let s = (t - tau).max(nodes[0]);
            let k = (nodes.partition_point(|&v| v <= s).max(1) - 1).min(nt - 2);
            if prep.zero_slice[k] && prep.zero_slice[k + 1] {
                continue;
            }
            let lam = ((s - nodes[k]) / (nodes[k + 1] - nodes[k])).clamp(0.0, 1.0);
            let e = integrator.exponent(s, t)?;
            let mult: Vec<Complex64> = a1.iter().zip(&e).map(|(x, y)| x * y.exp() * inv_np).collect();
            sq.iter_mut().for_each(|v| *v = 0.0);
            for c in 0..m {
                let lo = &prep.fhat[(k * m + c) * np..(k * m + c + 1) * np];
                let hi = &prep.fhat[((k + 1) * m + c) * np..((k + 1) * m + c + 1) * np];
                for kk in 0..np {
                    let fh = lo[kk] * (1.0 - lam) + hi[kk] * lam;
                    work[kk] = mult[kk] * fh;
                }
                grid.idft(&mut work);
                for (sv, wv) in sq.iter_mut().zip(&work) {
                    *sv += wv.norm_sqr();
                }
            }
            let half_q = 0.5 * q;
            for (av, sv) in acc.iter_mut().zip(&sq) {
                *av += w * sv.powf(half_q);
            }
        }
        let inv_q = 1.0 / q;
        Ok((acc.into_iter().map(|v| v.max(0.0).powf(inv_q)).collect(), quad.len()))
    });
    let mut values = Vec::with_capacity(nt * np);
    let mut nodes_per_time = Vec::with_capacity(nt);
    for r in rows {
        let (row, count) = r?;
        values.extend(row);
        nodes_per_time.push(count);
    }
    Ok(GFunctionResult {
        field: ScalarField::from_values(grid, values)?,
        q,
        beta,
        l_mode: l,
        rule: opts.rule,
        nodes_per_time,
        warnings,
    })
}

/// `𝒢̃_{a,q} f(t, x) = 𝒢_{a,q} f(t, t, x)`.
pub fn g_tilde(
    f: &SpaceTimeField,
    psi1: &SymbolSpec,
    psi2: &SymbolSpec,
    a: f64,
    q: f64,
    opts: &GOptions,
) -> Result<GFunctionResult> {
    g_function(f, psi1, psi2, LMode::Outer, a, q, opts)
}

/// `(Σ_i Δt_i Σ_j G(t_i, x_j)^p dx^d)^{1/p}`; the theorems need `p >= q`.
pub fn g_lp_norm(g: &GFunctionResult, p: f64) -> Result<f64> {
    if p < g.q {
        return Err(Error::Hypothesis(format!("p = {p} < q = {}", g.q)));
    }
    g.field.lp_norm(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::GaussLegendre;
    use crate::symbols::TimeModulation;
    use statrs::function::gamma::{gamma, gamma_lr};
    use std::f64::consts::PI;

    fn grid(nt: usize) -> Arc<SpectralGrid> {
        Arc::new(SpectralGrid::uniform(1, 16, PI, 0.0, 1.0, nt).unwrap())
    }

    fn plane(g: &Arc<SpectralGrid>, k: f64) -> SpaceTimeField {
        SpaceTimeField::from_fn(g.clone(), move |_, x| Complex64::new(0.0, k * x[0]).exp())
    }

    /// `∫_0^T τ^{β-1} e^{-cτ} dτ` by the lower incomplete gamma function.
    fn lower(beta: f64, c: f64, total: f64) -> f64 {
        gamma_lr(beta, c * total) * gamma(beta) * c.powf(-beta)
    }

    #[test]
    fn zero_field_gives_zero() {
        let g = grid(5);
        let f = SpaceTimeField::zeros(g.clone(), 2);
        let p1 = SymbolSpec::fractional_heat(1.0, 1.0).unwrap();
        let p2 = SymbolSpec::fractional_heat(1.0, 2.0).unwrap();
        let r = g_function(&f, &p1, &p2, LMode::Fixed(0.0), 0.0, 2.0, &GOptions::default()).unwrap();
        assert!(r.field.values().iter().all(|v| *v == 0.0));
        assert_eq!(g_lp_norm(&r, 2.0).unwrap(), 0.0);
        assert!(g_lp_norm(&r, 1.5).is_err());
    }

    #[test]
    fn single_mode_matches_incomplete_gamma() {
        let g = grid(5);
        let xi0 = 3.0;
        let f = plane(&g, xi0);
        let k1 = 1.3;
        let k2 = 0.7;
        for &(g1, q) in &[(0.5, 2.0), (1.0, 2.0), (2.0, 2.0), (1.0, 3.0)] {
            let p1 = SymbolSpec::fractional_heat(k1, g1).unwrap();
            let p2 = SymbolSpec::fractional_heat(k2, 2.0).unwrap();
            let beta = q * g1 / 2.0;
            let r = g_function(&f, &p1, &p2, LMode::Fixed(0.4), 0.0, q, &GOptions::default()).unwrap();
            let c = q * k2 * xi0 * xi0;
            for (i, &t) in g.t_nodes().iter().enumerate().skip(1) {
                let expect = (k1 * xi0.powf(g1)).powf(q) * lower(beta, c, t);
                for j in 0..g.points() {
                    let got = r.field.get(i, j).powf(q);
                    assert!(((got - expect) / expect).abs() < 1e-6, "beta {beta} t {t}: {got} vs {expect}");
                }
            }
        }
    }

    #[test]
    fn error_cases() {
        let g = grid(3);
        let f = plane(&g, 1.0);
        let p = SymbolSpec::fractional_heat(1.0, 2.0).unwrap();
        let o = GOptions::default();
        assert!(matches!(
            g_function(&f, &p, &p, LMode::Fixed(0.0), 0.0, 1.5, &o),
            Err(Error::Exponent(_))
        ));
        assert!(g_function(&f, &p, &p, LMode::Fixed(0.0), -1.0, 2.0, &o).is_err());
    }

    #[test]
    fn time_independent_psi1_ignores_l() {
        let g = grid(5);
        let f = SpaceTimeField::from_fn(g.clone(), |t, x| {
            Complex64::new((2.0 * x[0]).cos() * (1.0 + t), (x[0]).sin())
        });
        let p1 = SymbolSpec::fractional_heat(1.0, 1.0).unwrap();
        let p2 = SymbolSpec::fractional_heat(1.0, 2.0).unwrap();
        let o = GOptions::default();
        let a = g_function(&f, &p1, &p2, LMode::Fixed(0.3), 0.0, 2.0, &o).unwrap();
        let b = g_tilde(&f, &p1, &p2, 0.0, 2.0, &o).unwrap();
        assert_eq!(a.field, b.field);
    }

    #[test]
    fn tilde_variant_with_time_dependent_psi1() {
        let g = grid(5);
        let xi0 = 2.0;
        let f = plane(&g, xi0);
        let amp = 0.5;
        let p1 = SymbolSpec::power(
            1.0,
            1.5,
            TimeModulation::Exponential {
                amplitude: amp,
                rate: 1.0,
            },
            4,
        )
        .unwrap();
        let p2 = SymbolSpec::fractional_heat(1.0, 2.0).unwrap();
        let q = 2.0;
        let r = g_tilde(&f, &p1, &p2, 0.0, q, &GOptions::default()).unwrap();
        let beta = q * 1.5 / 2.0;
        for (i, &t) in g.t_nodes().iter().enumerate().skip(1) {
            let a1 = (1.0 + amp * (-t).exp()) * xi0.powf(1.5);
            let expect = a1.powf(q) * lower(beta, q * xi0 * xi0, t);
            let got = r.field.get(i, 3).powf(q);
            assert!(((got - expect) / expect).abs() < 1e-6);
        }
    }

    #[test]
    fn time_dependent_psi2_against_direct_quadrature() {
        let g = grid(5);
        let xi0 = 2.0;
        let f = plane(&g, xi0);
        let p1 = SymbolSpec::fractional_heat(1.0, 1.0).unwrap();
        let amp = 0.5;
        let p2 = SymbolSpec::power(
            1.0,
            2.0,
            TimeModulation::Exponential {
                amplitude: amp,
                rate: 1.0,
            },
            4,
        )
        .unwrap();
        let q = 2.0;
        let r = g_function(&f, &p1, &p2, LMode::Fixed(0.0), 0.0, q, &GOptions::default()).unwrap();
        // β = 1: plain integral of |exp(∫_s^t ψ₂)|^q over s ∈ [0, t]
        let gl = GaussLegendre::new(20);
        for (i, &t) in g.t_nodes().iter().enumerate().skip(1) {
            let big_psi = |s: f64| -(t - s + amp * ((-s).exp() - (-t).exp())) * xi0 * xi0;
            let panels = 200;
            let h = t / panels as f64;
            let mut integral = 0.0;
            for pn in 0..panels {
                integral += gl.integrate(pn as f64 * h, (pn + 1) as f64 * h, |s| (q * big_psi(s)).exp());
            }
            let expect = xi0.powi(2) * integral;
            let got = r.field.get(i, 0).powf(q);
            assert!(((got - expect) / expect).abs() < 1e-8);
        }
    }

    #[test]
    fn lp_norm_of_constant_field() {
        let g = Arc::new(SpectralGrid::uniform(1, 8, 2.0, 0.0, 1.0, 3).unwrap());
        let res = GFunctionResult {
            field: ScalarField::from_values(g.clone(), vec![1.0; 24]).unwrap(),
            q: 2.0,
            beta: 1.0,
            l_mode: LMode::Outer,
            rule: GradedRule::default(),
            nodes_per_time: vec![],
            warnings: vec![],
        };
        assert!((g_lp_norm(&res, 2.0).unwrap() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn homogeneous_in_f() {
        let g = grid(5);
        let f = SpaceTimeField::from_fn(g.clone(), |t, x| Complex64::new((x[0]).cos() * t, (3.0 * x[0]).sin()));
        let p1 = SymbolSpec::fractional_heat(1.0, 0.5).unwrap();
        let p2 = SymbolSpec::fractional_heat(1.0, 1.0).unwrap();
        let o = GOptions::default();
        let a = g_function(&f, &p1, &p2, LMode::Fixed(0.0), 0.0, 3.0, &o).unwrap();
        let b = g_function(&f.scaled(Complex64::new(0.0, -2.5)), &p1, &p2, LMode::Fixed(0.0), 0.0, 3.0, &o).unwrap();
        let na = g_lp_norm(&a, 4.0).unwrap();
        let nb = g_lp_norm(&b, 4.0).unwrap();
        assert!((nb - 2.5 * na).abs() < 1e-12 * nb);
    }
}
