//! Evolution systems `𝒯_ψ(t, s) = ℱ^{-1}[exp(∫_s^t ψ(r, ξ) dr) ℱ]`, their
//! convolution kernels and pseudo-differential operators.

use std::collections::VecDeque;
use std::f64::consts::PI;
use std::io::Write;
use std::sync::{Arc, Mutex};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{Domain, SpatialField, SpectralGrid};
use crate::quadrature::GaussLegendre;
use crate::symbols::{eval_symbol, SymbolSpec};

/// Gauss-Legendre order used on every time panel.
pub const TIME_GL_ORDER: usize = 8;
/// Panel length for time integrals without a time grid.
pub const DEFAULT_PANEL: f64 = 0.25;

fn check_order(s: f64, t: f64) -> Result<()> {
    if !(s.is_finite() && t.is_finite()) || t < s {
        return Err(Error::TimeOrder { s, t });
    }
    Ok(())
}

/// `∫_lo^hi ψ(r, ξ) dr` on one panel; the constant `t < 0` part is exact.
fn panel_integral(spec: &SymbolSpec, gl: &GaussLegendre, lo: f64, hi: f64, xi: &[f64]) -> Complex64 {
    if hi <= lo {
        return Complex64::new(0.0, 0.0);
    }
    let mut acc = Complex64::new(0.0, 0.0);
    let mut lo = lo;
    if lo < 0.0 {
        let neg_end = hi.min(0.0);
        acc += spec.eval_raw(0.0, xi) * (neg_end - lo);
        lo = neg_end;
    }
    if hi > lo {
        for (r, w) in gl.mapped(lo, hi) {
            acc += spec.eval_raw(r, xi) * w;
        }
    }
    acc
}

fn subdivided_integral(spec: &SymbolSpec, gl: &GaussLegendre, lo: f64, hi: f64, xi: &[f64], panel: f64) -> Complex64 {
    let pieces = ((hi - lo) / panel).ceil().max(1.0) as usize;
    let h = (hi - lo) / pieces as f64;
    (0..pieces)
        .map(|i| {
            let a = lo + h * i as f64;
            let b = if i + 1 == pieces { hi } else { a + h };
            panel_integral(spec, gl, a, b, xi)
        })
        .sum()
}

/// `∫_s^t ψ(r, ξ) dr`: exact `(t - s) ψ` for time-independent symbols, otherwise
/// composite 8-point Gauss-Legendre on panels of length at most 0.25.
pub fn integrated_symbol(spec: &SymbolSpec, s: f64, t: f64, xi: &[f64]) -> Result<Complex64> {
    check_order(s, t)?;
    let v = if spec.time_independent() {
        eval_symbol(spec, 0.0, xi)? * (t - s)
    } else {
        let gl = GaussLegendre::new(TIME_GL_ORDER);
        subdivided_integral(spec, &gl, s, t, xi, DEFAULT_PANEL)
    };
    if !(v.re.is_finite() && v.im.is_finite()) {
        return Err(Error::SymbolEval {
            t,
            reason: format!("non-finite time integral at xi = {xi:?}"),
        });
    }
    Ok(v)
}

/// Cumulative time integrals `Ψ(t_i, ξ_k) = ∫_{t_0}^{t_i} ψ` at the time nodes of a
/// grid, for every lattice frequency. `∫_s^t ψ = Ψ(t) - Ψ(s)`, where off-node
/// values add one partial panel.
pub struct TimeIntegrator {
    spec: SymbolSpec,
    grid: Arc<SpectralGrid>,
    gl: GaussLegendre,
    xis: Vec<[f64; 2]>,
    /// symbol values at t = 0 (time-independent case)
    frozen: Option<Vec<Complex64>>,
    cumulative: Vec<Vec<Complex64>>,
    panel: f64,
}

impl TimeIntegrator {
    pub fn new(spec: &SymbolSpec, grid: Arc<SpectralGrid>) -> Result<Self> {
        let d = grid.dim();
        let xis: Vec<[f64; 2]> = (0..grid.points()).map(|k| grid.wave_vector(k)).collect();
        let gl = GaussLegendre::new(TIME_GL_ORDER);
        let nodes = grid.t_nodes().to_vec();
        let max_step = nodes.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
        let panel = if max_step > 0.0 { max_step } else { DEFAULT_PANEL };
        let mut out = Self {
            spec: spec.clone(),
            grid: grid.clone(),
            gl,
            xis,
            frozen: None,
            cumulative: Vec::new(),
            panel,
        };
        if spec.time_independent() {
            let vals = out
                .xis
                .iter()
                .map(|xi| eval_symbol(spec, 0.0, &xi[..d]))
                .collect::<Result<Vec<_>>>()?;
            out.frozen = Some(vals);
            return Ok(out);
        }
        let np = grid.points();
        let mut cum = vec![vec![Complex64::new(0.0, 0.0); np]];
        for w in nodes.windows(2) {
            let prev = cum.last().unwrap();
            let next: Vec<Complex64> = (0..np)
                .map(|k| prev[k] + panel_integral(spec, &out.gl, w[0], w[1], &out.xis[k][..d]))
                .collect();
            if next.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
                return Err(Error::SymbolEval {
                    t: w[1],
                    reason: "non-finite symbol value on the lattice".into(),
                });
            }
            cum.push(next);
        }
        out.cumulative = cum;
        Ok(out)
    }

    pub fn grid(&self) -> &Arc<SpectralGrid> {
        &self.grid
    }

    pub fn spec(&self) -> &SymbolSpec {
        &self.spec
    }

    /// `Ψ(t, ξ_k)` relative to `t_0` (negative for `t < t_0`).
    fn anchored(&self, t: f64, k: usize) -> Complex64 {
        let d = self.grid.dim();
        let nodes = self.grid.t_nodes();
        let t0 = nodes[0];
        let xi = &self.xis[k][..d];
        if t <= t0 {
            return -subdivided_integral(&self.spec, &self.gl, t, t0, xi, self.panel);
        }
        let last = nodes.len() - 1;
        if t >= nodes[last] {
            return self.cumulative[last][k]
                + subdivided_integral(&self.spec, &self.gl, nodes[last], t, xi, self.panel);
        }
        let i = nodes.partition_point(|&v| v <= t) - 1;
        self.cumulative[i][k] + panel_integral(&self.spec, &self.gl, nodes[i], t, xi)
    }

    /// `∫_s^t ψ(r, ξ_k) dr` for every lattice frequency `k`.
    pub fn exponent(&self, s: f64, t: f64) -> Result<Vec<Complex64>> {
        check_order(s, t)?;
        if let Some(vals) = &self.frozen {
            return Ok(vals.iter().map(|v| v * (t - s)).collect());
        }
        Ok((0..self.grid.points())
            .map(|k| self.anchored(t, k) - self.anchored(s, k))
            .collect())
    }

    /// `exp(∫_s^t ψ(r, ξ_k) dr)`.
    pub fn multiplier(&self, s: f64, t: f64) -> Result<Vec<Complex64>> {
        Ok(self.exponent(s, t)?.into_iter().map(|v| v.exp()).collect())
    }
}

/// Small LRU cache of evolution multipliers keyed by `(s, t)`.
pub struct MultiplierCache {
    integrator: TimeIntegrator,
    capacity: usize,
    entries: Mutex<VecDeque<((u64, u64), Arc<Vec<Complex64>>)>>,
}

impl MultiplierCache {
    pub fn new(integrator: TimeIntegrator, capacity: usize) -> Self {
        Self {
            integrator,
            capacity: capacity.max(1),
            entries: Mutex::new(VecDeque::new()),
        }
    }

    pub fn get(&self, s: f64, t: f64) -> Result<Arc<Vec<Complex64>>> {
        let key = (s.to_bits(), t.to_bits());
        {
            let mut e = self.entries.lock().expect("cache lock");
            if let Some(pos) = e.iter().position(|(k, _)| *k == key) {
                let entry = e.remove(pos).unwrap();
                let v = entry.1.clone();
                e.push_front(entry);
                return Ok(v);
            }
        }
        let v = Arc::new(self.integrator.multiplier(s, t)?);
        let mut e = self.entries.lock().expect("cache lock");
        e.push_front((key, v.clone()));
        while e.len() > self.capacity {
            e.pop_back();
        }
        Ok(v)
    }

    pub fn len(&self) -> usize {
        self.entries.lock().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// `exp(∫_s^t ψ(r, ξ_k) dr)` on the lattice of `grid`, FFT order.
pub fn evolution_multiplier(spec: &SymbolSpec, grid: &SpectralGrid, s: f64, t: f64) -> Result<Vec<Complex64>> {
    check_order(s, t)?;
    let d = grid.dim();
    (0..grid.points())
        .map(|k| {
            let xi = grid.wave_vector(k);
            Ok(integrated_symbol(spec, s, t, &xi[..d])?.exp())
        })
        .collect()
}

/// `ψ(l, ξ_k)` on the lattice, FFT order.
pub fn symbol_multiplier(spec: &SymbolSpec, grid: &SpectralGrid, l: f64) -> Result<Vec<Complex64>> {
    let d = grid.dim();
    (0..grid.points())
        .map(|k| {
            let xi = grid.wave_vector(k);
            eval_symbol(spec, l, &xi[..d])
        })
        .collect()
}

/// Convolution kernel of a multiplier: `K(x_j) = (2π)^{-d} Σ_k e^{i x_j·ξ_k} m_k dξ^d`,
/// so that `(ℱ^{-1} m ℱ f)(x) = ∫ K(x - y) f(y) dy`.
pub fn kernel_from_multiplier(grid: &SpectralGrid, multiplier: &[Complex64]) -> Result<Vec<Complex64>> {
    if multiplier.len() != grid.points() {
        return Err(Error::Shape("multiplier length differs from lattice size".into()));
    }
    let mut data = multiplier.to_vec();
    grid.inverse_array(&mut data);
    let scale = (2.0 * PI).powf(-(grid.dim() as f64) / 2.0);
    data.iter_mut().for_each(|v| *v *= scale);
    Ok(data)
}

/// A kernel sampled on the spatial lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct EvolutionKernel {
    pub grid: Arc<SpectralGrid>,
    pub values: Vec<Complex64>,
}

impl EvolutionKernel {
    /// `Σ_j |K(x_j)| dx^d`.
    pub fn l1_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).sum::<f64>() * self.grid.cell_volume()
    }

    /// Value at the lattice point closest to the origin (`x = 0` is a lattice point).
    pub fn at_origin(&self) -> Complex64 {
        let n = self.grid.n();
        let idx = match self.grid.dim() {
            1 => n / 2,
            _ => (n / 2) * n + n / 2,
        };
        self.values[idx]
    }

    /// CSV with columns `x,re,im` (`x1,x2,re,im` in two dimensions).
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let d = self.grid.dim();
        if d == 1 {
            writeln!(w, "x,re,im")?;
        } else {
            writeln!(w, "x1,x2,re,im")?;
        }
        for (j, v) in self.values.iter().enumerate() {
            let p = self.grid.position(j);
            if d == 1 {
                writeln!(w, "{:.17e},{:.17e},{:.17e}", p[0], v.re, v.im)?;
            } else {
                writeln!(w, "{:.17e},{:.17e},{:.17e},{:.17e}", p[0], p[1], v.re, v.im)?;
            }
        }
        Ok(())
    }
}

/// Kernel `p_ψ(t, s, ·)` of the evolution system on the lattice.
pub fn evolution_kernel(spec: &SymbolSpec, grid: Arc<SpectralGrid>, s: f64, t: f64) -> Result<EvolutionKernel> {
    let m = evolution_multiplier(spec, &grid, s, t)?;
    let values = kernel_from_multiplier(&grid, &m)?;
    Ok(EvolutionKernel { grid, values })
}

/// `Σ_j |p(x_j)| dx^d`.
pub fn kernel_l1_norm(kernel: &EvolutionKernel) -> f64 {
    kernel.l1_norm()
}

fn check_physical(f: &SpatialField) -> Result<()> {
    if f.domain() != Domain::Physical {
        return Err(Error::Shape("expected a physical-side field".into()));
    }
    Ok(())
}

/// `𝒯_ψ(t, s) f`; `t = s` returns `f` unchanged.
pub fn apply_evolution(spec: &SymbolSpec, s: f64, t: f64, f: &SpatialField) -> Result<SpatialField> {
    check_order(s, t)?;
    check_physical(f)?;
    if t == s {
        return Ok(f.clone());
    }
    let m = evolution_multiplier(spec, f.grid(), s, t)?;
    f.multiplied(&m)
}

/// `ℒ_ψ(l) f = ℱ^{-1}[ψ(l, ·) ℱ f]`.
pub fn apply_pseudo_diff(spec: &SymbolSpec, l: f64, f: &SpatialField) -> Result<SpatialField> {
    check_physical(f)?;
    let m = symbol_multiplier(spec, f.grid(), l)?;
    f.multiplied(&m)
}

/// Multiplier of `ℒ_{ψ₁}(l) 𝒯_{ψ₂}(t, s)` optionally restricted by a real window
/// (e.g. a Littlewood-Paley block).
pub fn composed_multiplier(
    psi1: Option<(&SymbolSpec, f64)>,
    psi2: &SymbolSpec,
    grid: &SpectralGrid,
    s: f64,
    t: f64,
    window: Option<&[f64]>,
) -> Result<Vec<Complex64>> {
    let mut m = evolution_multiplier(psi2, grid, s, t)?;
    if let Some((p1, l)) = psi1 {
        let a = symbol_multiplier(p1, grid, l)?;
        m.iter_mut().zip(&a).for_each(|(v, w)| *v *= w);
    }
    if let Some(w) = window {
        if w.len() != m.len() {
            return Err(Error::Shape("window length differs from lattice size".into()));
        }
        m.iter_mut().zip(w).for_each(|(v, w)| *v *= w);
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbols::TimeModulation;

    fn grid(n: usize, l: f64) -> Arc<SpectralGrid> {
        Arc::new(SpectralGrid::uniform(1, n, l, 0.0, 1.0, 5).unwrap())
    }

    fn modulated() -> SymbolSpec {
        SymbolSpec::power(
            1.0,
            1.5,
            TimeModulation::Exponential {
                amplitude: 0.5,
                rate: 1.0,
            },
            4,
        )
        .unwrap()
    }

    #[test]
    fn integrated_symbol_matches_closed_form() {
        let s = modulated();
        for &(a, b) in &[(0.0, 1.0), (0.3, 2.7), (-1.0, 0.5), (-2.0, -1.0)] {
            for &xi in &[0.5, 2.0, 7.0] {
                let v = integrated_symbol(&s, a, b, &[xi]).unwrap();
                // ∫ (1 + 0.5 e^{-max(r,0)}) dr
                let k_int = |lo: f64, hi: f64| -> f64 {
                    let neg = (hi.min(0.0) - lo.min(0.0)) * 1.5;
                    let lo_p = lo.max(0.0);
                    let hi_p = hi.max(0.0);
                    neg + (hi_p - lo_p) + 0.5 * ((-lo_p).exp() - (-hi_p).exp())
                };
                let expect = -k_int(a, b) * xi.powf(1.5);
                assert!((v.re - expect).abs() < 1e-12 * expect.abs().max(1.0), "{a} {b} {xi}");
            }
        }
        assert!(integrated_symbol(&s, 1.0, 0.5, &[1.0]).is_err());
    }

    #[test]
    fn heat_kernel_at_origin() {
        let heat = SymbolSpec::fractional_heat(1.0, 2.0).unwrap();
        let k = evolution_kernel(&heat, grid(512, 20.0), 0.0, 1.0).unwrap();
        let expect = (4.0 * PI).powf(-0.5);
        assert!((k.at_origin().re - expect).abs() < 1e-10);
        assert!((k.l1_norm() - 1.0).abs() < 1e-10);
        // Gaussian profile e^{-x²/4}/√(4π)
        for (j, v) in k.values.iter().enumerate() {
            let x = k.grid.position(j)[0];
            assert!((v.re - expect * (-x * x / 4.0).exp()).abs() < 1e-10);
        }
    }

    #[test]
    fn cauchy_kernel_matches_periodized_closed_form() {
        let l = 20.0;
        let cauchy = SymbolSpec::fractional_heat(1.0, 1.0).unwrap();
        let k = evolution_kernel(&cauchy, grid(512, l), 0.0, 1.0).unwrap();
        let a = PI / l;
        for (j, v) in k.values.iter().enumerate() {
            let x = k.grid.position(j)[0];
            let expect = a.sinh() / (a.cosh() - (a * x).cos()) / (2.0 * l);
            assert!((v.re - expect).abs() < 1e-12, "x = {x}");
            assert!(v.im.abs() < 1e-12);
        }
    }

    #[test]
    fn evolution_of_gaussian() {
        let g = grid(256, 16.0);
        let heat = SymbolSpec::fractional_heat(1.0, 2.0).unwrap();
        let f = SpatialField::from_real_fn(g.clone(), |x| (-x[0] * x[0] / 2.0).exp());
        let tau = 0.7;
        let out = apply_evolution(&heat, 0.2, 0.2 + tau, &f).unwrap();
        let s2 = 1.0 + 2.0 * tau;
        let expect = SpatialField::from_real_fn(g, |x| (-x[0] * x[0] / (2.0 * s2)).exp() / s2.sqrt());
        assert!(out.max_distance(&expect) < 1e-12);
        let same = apply_evolution(&heat, 0.4, 0.4, &f).unwrap();
        assert_eq!(same, f);
    }

    #[test]
    fn multiplier_action_equals_direct_convolution() {
        let g = grid(32, 3.0);
        let s = modulated();
        let f = SpatialField::from_real_fn(g.clone(), |x| (x[0] * 1.3).sin() + (-x[0] * x[0]).exp());
        let out = apply_evolution(&s, 0.1, 0.35, &f).unwrap();
        let k = evolution_kernel(&s, g.clone(), 0.1, 0.35).unwrap();
        let n = g.n();
        for j in 0..n {
            let mut acc = Complex64::new(0.0, 0.0);
            for l in 0..n {
                let idx = (j + n + n / 2 - l) % n;
                acc += k.values[idx] * f.values()[l];
            }
            acc *= g.dx();
            assert!((acc - out.values()[j]).norm() < 1e-12);
        }
    }

    #[test]
    fn integrator_matches_direct_integration() {
        let g = Arc::new(SpectralGrid::uniform(1, 64, 4.0, 0.0, 2.0, 9).unwrap());
        let s = modulated();
        let ti = TimeIntegrator::new(&s, g.clone()).unwrap();
        for &(a, b) in &[(0.0, 2.0), (0.13, 1.77), (-0.5, 0.25), (1.9, 3.1)] {
            let e = ti.exponent(a, b).unwrap();
            let direct = evolution_multiplier(&s, &g, a, b).unwrap();
            for k in 0..g.points() {
                assert!((e[k].exp() - direct[k]).norm() < 1e-13);
            }
        }
        let cache = MultiplierCache::new(ti, 2);
        let m1 = cache.get(0.1, 0.5).unwrap();
        let _ = cache.get(0.2, 0.5).unwrap();
        let m1b = cache.get(0.1, 0.5).unwrap();
        assert!(Arc::ptr_eq(&m1, &m1b));
        let _ = cache.get(0.3, 0.5).unwrap();
        assert_eq!(cache.len(), 2);
    }

    #[test]
    fn pseudo_diff_of_plane_wave() {
        let g = grid(64, PI);
        let heat = SymbolSpec::fractional_heat(2.0, 2.0).unwrap();
        let f = SpatialField::from_fn(g.clone(), |x| Complex64::new(0.0, 3.0 * x[0]).exp());
        let out = apply_pseudo_diff(&heat, 0.0, &f).unwrap();
        let expect = f.scaled(Complex64::new(-18.0, 0.0));
        assert!(out.max_distance(&expect) < 1e-11);
    }

    #[test]
    fn csv_export() {
        let heat = SymbolSpec::fractional_heat(1.0, 2.0).unwrap();
        let k = evolution_kernel(&heat, grid(16, 4.0), 0.0, 1.0).unwrap();
        let mut buf = Vec::new();
        k.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("x,re,im\n"));
        assert_eq!(text.lines().count(), 17);
    }
}
