//! Periodic space-time lattice, discrete Fourier transform in the symmetric
//! `(2π)^{-d/2}` normalization, and lattice Lebesgue norms.
//!
//! Space is the box `[-L, L)^d` sampled at `x_j = -L + j dx`, `dx = 2L/n`.
//! Frequencies are `ξ_k = π k / L` for `k ∈ [-n/2, n/2)`; frequency-side data
//! is stored in FFT order (`k = 0, 1, …, n/2-1, -n/2, …, -1`).

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Which side of the transform a field lives on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Domain {
    Physical,
    Frequency,
}

struct FftPlan {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

/// Space-time grid and the transforms attached to it.
#[derive(Clone)]
pub struct SpectralGrid {
    dim: usize,
    n: usize,
    half_length: f64,
    dx: f64,
    t_nodes: Vec<f64>,
    plan: Arc<FftPlan>,
}

impl fmt::Debug for SpectralGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SpectralGrid")
            .field("dim", &self.dim)
            .field("n", &self.n)
            .field("half_length", &self.half_length)
            .field("t_nodes", &self.t_nodes.len())
            .finish()
    }
}

impl PartialEq for SpectralGrid {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim
            && self.n == other.n
            && self.half_length == other.half_length
            && self.t_nodes == other.t_nodes
    }
}

impl SpectralGrid {
    /// Build a grid; `n` must be a power of two `>= 8` and `t_nodes` strictly increasing.
    pub fn new(dim: usize, n: usize, half_length: f64, t_nodes: Vec<f64>) -> Result<Self> {
        if !(1..=2).contains(&dim) {
            return Err(Error::Dimension(dim));
        }
        if n < 8 || !n.is_power_of_two() {
            return Err(Error::GridSize(n));
        }
        if !(half_length.is_finite() && half_length > 0.0) {
            return Err(Error::HalfLength(half_length));
        }
        if t_nodes.len() < 2
            || t_nodes.iter().any(|t| !t.is_finite())
            || t_nodes.windows(2).any(|w| w[1] <= w[0])
        {
            return Err(Error::TimeNodes);
        }
        let mut planner = FftPlanner::new();
        let plan = FftPlan {
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        };
        Ok(Self {
            dim,
            n,
            half_length,
            dx: 2.0 * half_length / n as f64,
            t_nodes,
            plan: Arc::new(plan),
        })
    }

    /// Grid with `nt` uniform time nodes on `[a, b]`.
    pub fn uniform(dim: usize, n: usize, half_length: f64, a: f64, b: f64, nt: usize) -> Result<Self> {
        if nt < 2 || !(b > a) {
            return Err(Error::TimeNodes);
        }
        let h = (b - a) / (nt - 1) as f64;
        let mut nodes: Vec<f64> = (0..nt).map(|i| a + h * i as f64).collect();
        nodes[nt - 1] = b;
        Self::new(dim, n, half_length, nodes)
    }

    /// Same spatial lattice with different time nodes.
    pub fn with_time_nodes(&self, t_nodes: Vec<f64>) -> Result<Self> {
        Self::new(self.dim, self.n, self.half_length, t_nodes)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn half_length(&self) -> f64 {
        self.half_length
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    /// Frequency lattice spacing `π / L`.
    pub fn dxi(&self) -> f64 {
        PI / self.half_length
    }

    pub fn t_nodes(&self) -> &[f64] {
        &self.t_nodes
    }

    pub fn t_start(&self) -> f64 {
        self.t_nodes[0]
    }

    pub fn t_end(&self) -> f64 {
        self.t_nodes[self.t_nodes.len() - 1]
    }

    /// Number of spatial lattice points `n^d`.
    pub fn points(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    /// Spatial cell volume `dx^d`.
    pub fn cell_volume(&self) -> f64 {
        self.dx.powi(self.dim as i32)
    }

    /// Frequency cell volume `(π/L)^d`.
    pub fn freq_cell_volume(&self) -> f64 {
        self.dxi().powi(self.dim as i32)
    }

    /// Largest representable `|ξ|` along an axis (`π n / 2L`).
    pub fn nyquist(&self) -> f64 {
        self.dxi() * (self.n / 2) as f64
    }

    /// Signed lattice index of an FFT-ordered position along one axis.
    pub fn signed_index(&self, k: usize) -> i64 {
        if k < self.n / 2 {
            k as i64
        } else {
            k as i64 - self.n as i64
        }
    }

    /// FFT-ordered position of a signed lattice index (taken modulo `n`).
    pub fn fft_position(&self, k: i64) -> usize {
        k.rem_euclid(self.n as i64) as usize
    }

    /// Symmetric frequency axis `ξ_k`, `k = -n/2 .. n/2-1`, ascending.
    pub fn frequencies(&self) -> Vec<f64> {
        let half = (self.n / 2) as i64;
        (-half..half).map(|k| self.dxi() * k as f64).collect()
    }

    /// Spatial axis `x_j = -L + j dx`.
    pub fn coordinates(&self) -> Vec<f64> {
        (0..self.n)
            .map(|j| -self.half_length + self.dx * j as f64)
            .collect()
    }

    fn axis_indices(&self, flat: usize) -> [usize; 2] {
        if self.dim == 1 {
            [flat, 0]
        } else {
            [flat / self.n, flat % self.n]
        }
    }

    /// Position of the flat spatial index (only the first `dim` entries are used).
    pub fn position(&self, flat: usize) -> [f64; 2] {
        let idx = self.axis_indices(flat);
        let mut out = [0.0; 2];
        for (o, &i) in out.iter_mut().zip(idx.iter()).take(self.dim) {
            *o = -self.half_length + self.dx * i as f64;
        }
        out
    }

    /// Wave vector of the flat FFT-ordered frequency index.
    pub fn wave_vector(&self, flat: usize) -> [f64; 2] {
        let idx = self.axis_indices(flat);
        let mut out = [0.0; 2];
        for (o, &k) in out.iter_mut().zip(idx.iter()).take(self.dim) {
            *o = self.dxi() * self.signed_index(k) as f64;
        }
        out
    }

    /// `|ξ|` at every FFT-ordered frequency.
    pub fn wave_norms(&self) -> Vec<f64> {
        (0..self.points())
            .map(|k| {
                let w = self.wave_vector(k);
                w[..self.dim].iter().map(|v| v * v).sum::<f64>().sqrt()
            })
            .collect()
    }

    /// Trapezoid weights of the time nodes.
    pub fn time_weights(&self) -> Vec<f64> {
        trapezoid_weights(&self.t_nodes)
    }

    fn fft_axis(&self, data: &mut [Complex64], forward: bool) {
        let fft = if forward {
            &self.plan.forward
        } else {
            &self.plan.inverse
        };
        let n = self.n;
        if self.dim == 1 {
            fft.process(data);
            return;
        }
        for row in data.chunks_mut(n) {
            fft.process(row);
        }
        let mut col = vec![Complex64::new(0.0, 0.0); n];
        for c in 0..n {
            for r in 0..n {
                col[r] = data[r * n + c];
            }
            fft.process(&mut col);
            for r in 0..n {
                data[r * n + c] = col[r];
            }
        }
    }

    /// Unnormalized DFT `Σ_j e^{-2πi j·k/n} f_j` in place.
    pub(crate) fn dft(&self, data: &mut [Complex64]) {
        self.fft_axis(data, true);
    }

    /// Unnormalized inverse DFT `Σ_k e^{2πi j·k/n} g_k` in place.
    pub(crate) fn idft(&self, data: &mut [Complex64]) {
        self.fft_axis(data, false);
    }

    /// `(-1)^{Σ k_i}`, the phase from the box offset `x_0 = -L`.
    fn offset_sign(&self, flat: usize) -> f64 {
        let idx = self.axis_indices(flat);
        let s: usize = idx[..self.dim].iter().sum();
        if s % 2 == 0 {
            1.0
        } else {
            -1.0
        }
    }

    /// Multiply a physical-side array by a Fourier multiplier given in FFT order.
    pub fn apply_multiplier(&self, data: &mut [Complex64], multiplier: &[Complex64]) {
        debug_assert_eq!(data.len(), self.points());
        debug_assert_eq!(multiplier.len(), self.points());
        self.dft(data);
        let scale = 1.0 / self.points() as f64;
        for (v, m) in data.iter_mut().zip(multiplier) {
            *v *= m * scale;
        }
        self.idft(data);
    }

    /// Same as [`apply_multiplier`](Self::apply_multiplier) with a real multiplier.
    pub fn apply_real_multiplier(&self, data: &mut [Complex64], multiplier: &[f64]) {
        self.dft(data);
        let scale = 1.0 / self.points() as f64;
        for (v, m) in data.iter_mut().zip(multiplier) {
            *v *= m * scale;
        }
        self.idft(data);
    }

    /// Physical-normalization forward transform of one component array.
    pub(crate) fn forward_array(&self, data: &mut [Complex64]) {
        self.dft(data);
        let scale = (2.0 * PI).powf(-(self.dim as f64) / 2.0) * self.cell_volume();
        for (k, v) in data.iter_mut().enumerate() {
            *v *= scale * self.offset_sign(k);
        }
    }

    /// Physical-normalization inverse transform of one component array.
    pub(crate) fn inverse_array(&self, data: &mut [Complex64]) {
        let scale = (2.0 * PI).powf(-(self.dim as f64) / 2.0) * self.freq_cell_volume();
        for (k, v) in data.iter_mut().enumerate() {
            *v *= scale * self.offset_sign(k);
        }
        self.idft(data);
    }
}

/// Trapezoid weights on arbitrary increasing nodes.
pub fn trapezoid_weights(nodes: &[f64]) -> Vec<f64> {
    let n = nodes.len();
    let mut w = vec![0.0; n];
    for i in 0..n.saturating_sub(1) {
        let h = nodes[i + 1] - nodes[i];
        w[i] += 0.5 * h;
        w[i + 1] += 0.5 * h;
    }
    w
}

/// `V = ℂ^m`-valued samples on the spatial lattice, stored component-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialField {
    grid: Arc<SpectralGrid>,
    m: usize,
    domain: Domain,
    values: Vec<Complex64>,
}

impl SpatialField {
    /// Build from component-major values (`values[c * n^d + j]`).
    pub fn from_values(
        grid: Arc<SpectralGrid>,
        m: usize,
        domain: Domain,
        values: Vec<Complex64>,
    ) -> Result<Self> {
        if m == 0 || values.len() != m * grid.points() {
            return Err(Error::Shape(format!(
                "expected {} values for m = {m}, got {}",
                m * grid.points(),
                values.len()
            )));
        }
        if values.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(Error::NonFinite);
        }
        Ok(Self {
            grid,
            m,
            domain,
            values,
        })
    }

    pub fn zeros(grid: Arc<SpectralGrid>, m: usize) -> Self {
        let len = m * grid.points();
        Self {
            grid,
            m,
            domain: Domain::Physical,
            values: vec![Complex64::new(0.0, 0.0); len],
        }
    }

    /// Scalar physical field `f(x)` sampled on the lattice.
    pub fn from_fn<F: Fn([f64; 2]) -> Complex64>(grid: Arc<SpectralGrid>, f: F) -> Self {
        let values = (0..grid.points()).map(|j| f(grid.position(j))).collect();
        Self {
            grid,
            m: 1,
            domain: Domain::Physical,
            values,
        }
    }

    /// Real scalar physical field.
    pub fn from_real_fn<F: Fn([f64; 2]) -> f64>(grid: Arc<SpectralGrid>, f: F) -> Self {
        Self::from_fn(grid, |x| Complex64::new(f(x), 0.0))
    }

    pub fn grid(&self) -> &Arc<SpectralGrid> {
        &self.grid
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn component(&self, c: usize) -> &[Complex64] {
        let np = self.grid.points();
        &self.values[c * np..(c + 1) * np]
    }

    pub fn component_mut(&mut self, c: usize) -> &mut [Complex64] {
        let np = self.grid.points();
        &mut self.values[c * np..(c + 1) * np]
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= c);
        out
    }

    /// `‖f(x_j)‖_V` at every lattice point.
    pub fn pointwise_norms(&self) -> Vec<f64> {
        let np = self.grid.points();
        (0..np)
            .map(|j| {
                (0..self.m)
                    .map(|c| self.values[c * np + j].norm_sqr())
                    .sum::<f64>()
                    .sqrt()
            })
            .collect()
    }

    /// Largest pointwise `‖f - g‖_V`.
    pub fn max_distance(&self, other: &Self) -> f64 {
        let np = self.grid.points();
        (0..np)
            .map(|j| {
                (0..self.m)
                    .map(|c| (self.values[c * np + j] - other.values[c * np + j]).norm_sqr())
                    .sum::<f64>()
                    .sqrt()
            })
            .fold(0.0, f64::max)
    }

    pub fn sup_norm(&self) -> f64 {
        self.pointwise_norms().into_iter().fold(0.0, f64::max)
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.grid.as_ref() != other.grid.as_ref() || self.m != other.m || self.domain != other.domain {
            return Err(Error::Shape("fields live on different grids".into()));
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        let mut out = self.clone();
        out.values
            .iter_mut()
            .zip(&other.values)
            .for_each(|(a, b)| *a += b);
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        let mut out = self.clone();
        out.values
            .iter_mut()
            .zip(&other.values)
            .for_each(|(a, b)| *a -= b);
        Ok(out)
    }

    /// Apply a multiplier (FFT order) to every component of a physical field.
    pub fn multiplied(&self, multiplier: &[Complex64]) -> Result<Self> {
        if self.domain != Domain::Physical {
            return Err(Error::Shape("multiplier requires a physical-side field".into()));
        }
        if multiplier.len() != self.grid.points() {
            return Err(Error::Shape("multiplier length differs from lattice size".into()));
        }
        let mut out = self.clone();
        for c in 0..self.m {
            self.grid.apply_multiplier(out.component_mut(c), multiplier);
        }
        Ok(out)
    }

    /// Real-multiplier variant of [`multiplied`](Self::multiplied).
    pub fn multiplied_real(&self, multiplier: &[f64]) -> Result<Self> {
        if self.domain != Domain::Physical {
            return Err(Error::Shape("multiplier requires a physical-side field".into()));
        }
        if multiplier.len() != self.grid.points() {
            return Err(Error::Shape("multiplier length differs from lattice size".into()));
        }
        let mut out = self.clone();
        for c in 0..self.m {
            self.grid.apply_real_multiplier(out.component_mut(c), multiplier);
        }
        Ok(out)
    }
}

/// Riemann-sum approximation of `(2π)^{-d/2} ∫ e^{-i x·ξ} f(x) dx` on the lattice.
pub fn forward_transform(f: &SpatialField) -> Result<SpatialField> {
    if f.domain != Domain::Physical {
        return Err(Error::Shape("forward transform expects a physical-side field".into()));
    }
    let mut out = f.clone();
    for c in 0..f.m {
        f.grid.forward_array(out.component_mut(c));
    }
    out.domain = Domain::Frequency;
    Ok(out)
}

/// Lattice inverse of [`forward_transform`].
pub fn inverse_transform(g: &SpatialField) -> Result<SpatialField> {
    if g.domain != Domain::Frequency {
        return Err(Error::Shape("inverse transform expects a frequency-side field".into()));
    }
    let mut out = g.clone();
    for c in 0..g.m {
        g.grid.inverse_array(out.component_mut(c));
    }
    out.domain = Domain::Physical;
    Ok(out)
}

/// `V`-valued samples on the space-time lattice, stored `[time][component][space]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpaceTimeField {
    grid: Arc<SpectralGrid>,
    m: usize,
    values: Vec<Complex64>,
}

impl SpaceTimeField {
    pub fn from_values(grid: Arc<SpectralGrid>, m: usize, values: Vec<Complex64>) -> Result<Self> {
        let expected = grid.t_nodes().len() * m * grid.points();
        if m == 0 || values.len() != expected {
            return Err(Error::Shape(format!(
                "expected {expected} values, got {}",
                values.len()
            )));
        }
        if values.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(Error::NonFinite);
        }
        Ok(Self { grid, m, values })
    }

    pub fn zeros(grid: Arc<SpectralGrid>, m: usize) -> Self {
        let len = grid.t_nodes().len() * m * grid.points();
        Self {
            grid,
            m,
            values: vec![Complex64::new(0.0, 0.0); len],
        }
    }

    /// Build from one spatial slice per time node.
    pub fn from_slices(grid: Arc<SpectralGrid>, slices: &[SpatialField]) -> Result<Self> {
        if slices.len() != grid.t_nodes().len() {
            return Err(Error::Shape("one slice per time node required".into()));
        }
        let m = slices.first().map(|s| s.m).unwrap_or(1);
        let mut values = Vec::with_capacity(slices.len() * m * grid.points());
        for s in slices {
            if s.m != m || s.grid.points() != grid.points() || s.domain != Domain::Physical {
                return Err(Error::Shape("inconsistent slices".into()));
            }
            values.extend_from_slice(&s.values);
        }
        Self::from_values(grid, m, values)
    }

    /// Scalar field `f(t, x)`.
    pub fn from_fn<F: Fn(f64, [f64; 2]) -> Complex64>(grid: Arc<SpectralGrid>, f: F) -> Self {
        let np = grid.points();
        let mut values = Vec::with_capacity(grid.t_nodes().len() * np);
        for &t in grid.t_nodes() {
            values.extend((0..np).map(|j| f(t, grid.position(j))));
        }
        Self { grid, m: 1, values }
    }

    pub fn grid(&self) -> &Arc<SpectralGrid> {
        &self.grid
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn nt(&self) -> usize {
        self.grid.t_nodes().len()
    }

    /// Raw component-major slice at time index `i`.
    pub fn slice_values(&self, i: usize) -> &[Complex64] {
        let stride = self.m * self.grid.points();
        &self.values[i * stride..(i + 1) * stride]
    }

    pub fn slice(&self, i: usize) -> SpatialField {
        SpatialField {
            grid: self.grid.clone(),
            m: self.m,
            domain: Domain::Physical,
            values: self.slice_values(i).to_vec(),
        }
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= c);
        out
    }

    /// `‖f(t_i, x_j)‖_V`, indexed `[i * n^d + j]`.
    pub fn pointwise_norms(&self) -> Vec<f64> {
        (0..self.nt()).flat_map(|i| self.slice(i).pointwise_norms()).collect()
    }
}

/// Real scalar samples on the space-time lattice, stored `[time][space]`
/// (square-function, maximal and sharp-function outputs).
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: Arc<SpectralGrid>,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn from_values(grid: Arc<SpectralGrid>, values: Vec<f64>) -> Result<Self> {
        let expected = grid.t_nodes().len() * grid.points();
        if values.len() != expected {
            return Err(Error::Shape(format!(
                "expected {expected} values, got {}",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Arc<SpectralGrid>) -> Self {
        let len = grid.t_nodes().len() * grid.points();
        Self {
            grid,
            values: vec![0.0; len],
        }
    }

    pub fn from_fn<F: Fn(f64, [f64; 2]) -> f64>(grid: Arc<SpectralGrid>, f: F) -> Self {
        let np = grid.points();
        let mut values = Vec::with_capacity(grid.t_nodes().len() * np);
        for &t in grid.t_nodes() {
            values.extend((0..np).map(|j| f(t, grid.position(j))));
        }
        Self { grid, values }
    }

    /// `‖f(t_i, x_j)‖_V` of a space-time field.
    pub fn norms_of(f: &SpaceTimeField) -> Self {
        Self {
            grid: f.grid.clone(),
            values: f.pointwise_norms(),
        }
    }

    pub fn grid(&self) -> &Arc<SpectralGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn nt(&self) -> usize {
        self.grid.t_nodes().len()
    }

    pub fn slice(&self, i: usize) -> &[f64] {
        let np = self.grid.points();
        &self.values[i * np..(i + 1) * np]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.grid.points() + j]
    }

    /// Elementwise map.
    pub fn map<F: Fn(f64) -> f64>(&self, f: F) -> Self {
        Self {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| f(*v)).collect(),
        }
    }

    /// Space-time `L^p` norm with trapezoid weights in time.
    pub fn lp_norm(&self, p: f64) -> Result<f64> {
        check_exponent(p)?;
        Ok(spacetime_scalar_norm(&self.grid, &self.values, p))
    }

    /// CSV `t,x,value` (`t,x1,x2,value` in two dimensions).
    pub fn write_csv<W: std::io::Write>(&self, mut w: W, name: &str) -> Result<()> {
        let d = self.grid.dim();
        if d == 1 {
            writeln!(w, "t,x,{name}")?;
        } else {
            writeln!(w, "t,x1,x2,{name}")?;
        }
        let np = self.grid.points();
        for (i, &t) in self.grid.t_nodes().iter().enumerate() {
            for j in 0..np {
                let p = self.grid.position(j);
                let v = self.values[i * np + j];
                if d == 1 {
                    writeln!(w, "{t:.17e},{:.17e},{v:.17e}", p[0])?;
                } else {
                    writeln!(w, "{t:.17e},{:.17e},{:.17e},{v:.17e}", p[0], p[1])?;
                }
            }
        }
        Ok(())
    }
}

fn check_exponent(p: f64) -> Result<()> {
    if !(p >= 1.0) || p.is_nan() {
        return Err(Error::Exponent(format!("p = {p} must be >= 1")));
    }
    Ok(())
}

/// `(Σ_j ‖f_j‖_V^p · dx^d)^{1/p}`; frequency-side fields use the `dξ^d` measure.
pub fn spatial_lebesgue_norm(f: &SpatialField, p: f64) -> Result<f64> {
    check_exponent(p)?;
    let cell = match f.domain {
        Domain::Physical => f.grid.cell_volume(),
        Domain::Frequency => f.grid.freq_cell_volume(),
    };
    Ok(weighted_p_norm(&f.pointwise_norms(), cell, p))
}

/// `(Σ_i Δt_i Σ_j ‖f(t_i, x_j)‖_V^p dx^d)^{1/p}` with trapezoid `Δt_i`.
pub fn spacetime_lebesgue_norm(f: &SpaceTimeField, p: f64) -> Result<f64> {
    check_exponent(p)?;
    Ok(spacetime_scalar_norm(
        &f.grid,
        &f.pointwise_norms(),
        p,
    ))
}

/// Space-time norm of nonnegative scalar samples `h[i * n^d + j]`.
pub fn spacetime_scalar_norm(grid: &SpectralGrid, h: &[f64], p: f64) -> f64 {
    let np = grid.points();
    let tw = grid.time_weights();
    let cell = grid.cell_volume();
    let mut acc = 0.0;
    for (i, w) in tw.iter().enumerate() {
        acc += w * h[i * np..(i + 1) * np].iter().map(|v| v.abs().powf(p)).sum::<f64>();
    }
    (acc * cell).powf(1.0 / p)
}

fn weighted_p_norm(norms: &[f64], cell: f64, p: f64) -> f64 {
    let mx = norms.iter().cloned().fold(0.0, f64::max);
    if mx == 0.0 {
        return 0.0;
    }
    // scale by the max to keep large p well conditioned
    let s: f64 = norms.iter().map(|v| (v / mx).powf(p)).sum();
    mx * (s * cell).powf(1.0 / p)
}

/// Either kind of field, for [`lebesgue_norm`].
pub enum FieldRef<'a> {
    Spatial(&'a SpatialField),
    SpaceTime(&'a SpaceTimeField),
}

impl<'a> From<&'a SpatialField> for FieldRef<'a> {
    fn from(f: &'a SpatialField) -> Self {
        FieldRef::Spatial(f)
    }
}

impl<'a> From<&'a SpaceTimeField> for FieldRef<'a> {
    fn from(f: &'a SpaceTimeField) -> Self {
        FieldRef::SpaceTime(f)
    }
}

/// Lattice `L^p` norm of a spatial or space-time field.
pub fn lebesgue_norm<'a, F: Into<FieldRef<'a>>>(f: F, p: f64) -> Result<f64> {
    match f.into() {
        FieldRef::Spatial(s) => spatial_lebesgue_norm(s, p),
        FieldRef::SpaceTime(s) => spacetime_lebesgue_norm(s, p),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid1(n: usize, l: f64) -> Arc<SpectralGrid> {
        Arc::new(SpectralGrid::new(1, n, l, vec![0.0, 1.0]).unwrap())
    }

    #[test]
    fn make_grid_examples() {
        let g = SpectralGrid::new(1, 8, PI, vec![0.0, 1.0]).unwrap();
        assert!((g.dx() - PI / 4.0).abs() < 1e-15);
        let xi = g.frequencies();
        let expect: Vec<f64> = (-4..4).map(|k| k as f64).collect();
        for (a, b) in xi.iter().zip(&expect) {
            assert!((a - b).abs() < 1e-14);
        }
        assert_eq!(xi.iter().filter(|v| **v == 0.0).count(), 1);

        assert_eq!(SpectralGrid::new(1, 7, PI, vec![0.0, 1.0]), Err(Error::GridSize(7)));
        assert_eq!(SpectralGrid::new(1, 4, PI, vec![0.0, 1.0]), Err(Error::GridSize(4)));
        assert_eq!(SpectralGrid::new(1, 8, PI, vec![0.0, 1.0, 0.5]), Err(Error::TimeNodes));
        assert_eq!(SpectralGrid::new(1, 8, PI, vec![0.0]), Err(Error::TimeNodes));
        assert_eq!(SpectralGrid::new(3, 8, PI, vec![0.0, 1.0]), Err(Error::Dimension(3)));
        assert!(SpectralGrid::new(1, 8, -1.0, vec![0.0, 1.0]).is_err());

        let g2 = SpectralGrid::new(2, 16, 8.0, vec![0.0, 0.5, 1.0]).unwrap();
        assert!((g2.dxi() - PI / 8.0).abs() < 1e-15);
        assert!((g2.dx() * 16.0 - 16.0).abs() < 1e-14);
        assert_eq!(g2.points(), 256);
        let w = g2.wave_vector(16 + 3);
        assert!((w[0] - PI / 8.0).abs() < 1e-15 && (w[1] - 3.0 * PI / 8.0).abs() < 1e-15);
    }

    #[test]
    fn gaussian_is_self_dual() {
        let g = grid1(256, 12.0);
        let f = SpatialField::from_real_fn(g.clone(), |x| (-x[0] * x[0] / 2.0).exp());
        let ff = forward_transform(&f).unwrap();
        let mut err: f64 = 0.0;
        for k in 0..g.points() {
            let xi = g.wave_vector(k)[0];
            err = err.max((ff.values()[k] - Complex64::new((-xi * xi / 2.0).exp(), 0.0)).norm());
        }
        assert!(err < 1e-8, "err {err}");

        // inverse of the Gaussian in frequency is the Gaussian in space
        let mut gv: Vec<Complex64> = (0..g.points())
            .map(|k| {
                let xi = g.wave_vector(k)[0];
                Complex64::new((-xi * xi / 2.0).exp(), 0.0)
            })
            .collect();
        g.inverse_array(&mut gv);
        for (j, v) in gv.iter().enumerate() {
            let x = g.position(j)[0];
            assert!((v - Complex64::new((-x * x / 2.0).exp(), 0.0)).norm() < 1e-8);
        }
    }

    #[test]
    fn zero_field_transforms_to_zero() {
        let g = grid1(16, 2.0);
        let f = SpatialField::zeros(g, 2);
        let ff = forward_transform(&f).unwrap();
        assert!(ff.values().iter().all(|v| v.norm() == 0.0));
        let back = inverse_transform(&ff).unwrap();
        assert!(back.values().iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn lattice_mode_is_point_mass() {
        // geometric-sum oracle: direct evaluation of the Riemann sum
        let l = 3.0;
        let g = grid1(32, l);
        let k0 = 5i64;
        let xi0 = PI * k0 as f64 / l;
        let f = SpatialField::from_fn(g.clone(), |x| Complex64::from_polar(1.0, xi0 * x[0]));
        let ff = forward_transform(&f).unwrap();
        let xs = g.coordinates();
        for k in 0..g.points() {
            let xi = g.wave_vector(k)[0];
            let direct: Complex64 = xs
                .iter()
                .map(|&x| Complex64::from_polar(1.0, -x * xi) * Complex64::from_polar(1.0, xi0 * x))
                .sum::<Complex64>()
                * g.dx()
                / (2.0 * PI).sqrt();
            assert!((ff.values()[k] - direct).norm() < 1e-12);
        }
        let expected_weight = 2.0 * l / (2.0 * PI).sqrt();
        assert!((ff.values()[g.fft_position(k0)].re - expected_weight).abs() < 1e-12);
    }

    #[test]
    fn lebesgue_norm_examples() {
        let l = 2.5;
        let grid = Arc::new(SpectralGrid::uniform(1, 16, l, 0.0, 1.0, 5).unwrap());
        let zero = SpaceTimeField::zeros(grid.clone(), 1);
        assert_eq!(lebesgue_norm(&zero, 2.0).unwrap(), 0.0);
        let one = SpaceTimeField::from_fn(grid.clone(), |_, _| Complex64::new(1.0, 0.0));
        let v = lebesgue_norm(&one, 2.0).unwrap();
        assert!((v - (2.0 * l).sqrt()).abs() < 1e-13);
        let scaled = one.scaled(Complex64::new(0.0, -3.0));
        assert!((lebesgue_norm(&scaled, 3.0).unwrap() - 3.0 * lebesgue_norm(&one, 3.0).unwrap()).abs() < 1e-12);
        assert!(matches!(lebesgue_norm(&one, 0.5), Err(Error::Exponent(_))));
    }

    #[test]
    fn from_values_rejects_bad_input() {
        let g = grid1(8, 1.0);
        assert!(matches!(
            SpatialField::from_values(g.clone(), 1, Domain::Physical, vec![Complex64::new(0.0, 0.0); 7]),
            Err(Error::Shape(_))
        ));
        let mut v = vec![Complex64::new(0.0, 0.0); 8];
        v[3] = Complex64::new(f64::NAN, 0.0);
        assert_eq!(
            SpatialField::from_values(g, 1, Domain::Physical, v),
            Err(Error::NonFinite)
        );
    }

    #[test]
    fn two_dimensional_transform_matches_product() {
        let g = Arc::new(SpectralGrid::new(2, 64, 10.0, vec![0.0, 1.0]).unwrap());
        let f = SpatialField::from_real_fn(g.clone(), |x| (-(x[0] * x[0] + x[1] * x[1]) / 2.0).exp());
        let ff = forward_transform(&f).unwrap();
        for k in 0..g.points() {
            let w = g.wave_vector(k);
            let expect = (-(w[0] * w[0] + w[1] * w[1]) / 2.0).exp();
            assert!((ff.values()[k].re - expect).abs() < 1e-8);
        }
    }
}
