//! Maximal functions in space and time, the parabolic sharp function and the
//! nested dyadic filtration.
//!
//! Lattice samples are read as a piecewise-constant "cell model": node `t_i` owns
//! `[c_i, c_{i+1}]` with `c_i` the midpoints between nodes (clipped to `[a, b]`,
//! so cell lengths equal the trapezoid weights), and `x_j` owns
//! `[x_j - dx/2, x_j + dx/2]` on the periodic box. Averages integrate this model
//! exactly in one space dimension; two-dimensional balls use cell-center inclusion.

use std::collections::HashMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{ScalarField, SpectralGrid};
use crate::util::par_map;

/// Volume of the unit ball in `ℝ^d` (`d = 1, 2`).
pub fn unit_ball_volume(d: usize) -> f64 {
    match d {
        1 => 2.0,
        _ => PI,
    }
}

/// `(t - R, t + R) × B_{R^{1/γ}}(x)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParabolicCube {
    pub t: f64,
    pub x: [f64; 2],
    pub radius: f64,
    pub gamma: f64,
}

impl ParabolicCube {
    pub fn new(t: f64, x: [f64; 2], radius: f64, gamma: f64) -> Result<Self> {
        if !(radius > 0.0 && gamma > 0.0) {
            return Err(Error::InvalidParameter("cube radius and gamma must be positive".into()));
        }
        Ok(Self { t, x, radius, gamma })
    }

    pub fn spatial_radius(&self) -> f64 {
        self.radius.powf(1.0 / self.gamma)
    }

    /// `2R · |B_{R^{1/γ}}|`.
    pub fn measure(&self, d: usize) -> f64 {
        2.0 * self.radius * unit_ball_volume(d) * self.spatial_radius().powi(d as i32)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Axis {
    Space,
    Time,
}

/// Boundaries `c_0 < … < c_{n_t}` of the time cells.
pub fn time_cell_bounds(nodes: &[f64]) -> Vec<f64> {
    let n = nodes.len();
    let mut c = Vec::with_capacity(n + 1);
    c.push(nodes[0]);
    for w in nodes.windows(2) {
        c.push(0.5 * (w[0] + w[1]));
    }
    c.push(nodes[n - 1]);
    c
}

/// Overlaps of `[lo, hi]` with consecutive cells `[bounds[i], bounds[i+1]]`.
fn line_weights(bounds: &[f64], lo: f64, hi: f64) -> Vec<(usize, f64)> {
    let n = bounds.len() - 1;
    let lo = lo.max(bounds[0]);
    let hi = hi.min(bounds[n]);
    if hi <= lo {
        return Vec::new();
    }
    let start = bounds.partition_point(|&b| b <= lo).saturating_sub(1).min(n - 1);
    let mut out = Vec::new();
    for i in start..n {
        if bounds[i] >= hi {
            break;
        }
        let w = bounds[i + 1].min(hi) - bounds[i].max(lo);
        if w > 0.0 {
            out.push((i, w));
        }
    }
    out
}

/// Overlaps of `[x0 - r, x0 + r]` (`r <= L`) with the periodic cells of one axis.
fn periodic_weights(grid: &SpectralGrid, x0: f64, r: f64) -> Vec<(usize, f64)> {
    let n = grid.n() as i64;
    let dx = grid.dx();
    let l = grid.half_length();
    let r = r.min(l);
    // cell j covers [-L + (j - 1/2) dx, -L + (j + 1/2) dx]; u measures from the left edge of cell 0
    let lo = x0 - r + l + 0.5 * dx;
    let hi = x0 + r + l + 0.5 * dx;
    let first = (lo / dx).floor() as i64;
    let last = (hi / dx).ceil() as i64;
    let mut out = Vec::new();
    for k in first..last {
        let a = (k as f64 * dx).max(lo);
        let b = ((k + 1) as f64 * dx).min(hi);
        if b > a {
            out.push((k.rem_euclid(n) as usize, b - a));
        }
    }
    out
}

/// Flat indices of cells whose centers lie in the open periodic disc `|y - x0| < r`.
fn disc_cells(grid: &SpectralGrid, x0: [f64; 2], r: f64) -> Vec<(usize, f64)> {
    let n = grid.n();
    let dx = grid.dx();
    let period = 2.0 * grid.half_length();
    let cell = dx * dx;
    let mut out = Vec::new();
    let reach = (r / dx).ceil() as i64 + 1;
    let ci = ((x0[0] + grid.half_length()) / dx).round() as i64;
    let cj = ((x0[1] + grid.half_length()) / dx).round() as i64;
    let mut seen = std::collections::HashSet::new();
    for di in -reach..=reach {
        for dj in -reach..=reach {
            let i = ci + di;
            let j = cj + dj;
            let xi = -grid.half_length() + i as f64 * dx;
            let xj = -grid.half_length() + j as f64 * dx;
            let dist2 = (xi - x0[0]).powi(2) + (xj - x0[1]).powi(2);
            if dist2 < r * r || (di == 0 && dj == 0 && r > 0.0 && dist2 < 0.25 * cell) {
                let flat = (i.rem_euclid(n as i64) as usize) * n + j.rem_euclid(n as i64) as usize;
                // balls wider than the box saturate at the whole torus
                if 2.0 * r <= period || seen.insert(flat) {
                    out.push((flat, cell));
                }
            }
        }
    }
    out
}

/// Prefix integral of the periodic 1D cell model, `I(y)` from the left edge of cell 0.
struct PeriodicPrefix {
    prefix: Vec<f64>,
    values: Vec<f64>,
    dx: f64,
    origin: f64,
    total: f64,
}

impl PeriodicPrefix {
    fn new(values: &[f64], dx: f64, origin: f64) -> Self {
        let mut prefix = Vec::with_capacity(values.len() + 1);
        prefix.push(0.0);
        for v in values {
            prefix.push(prefix.last().unwrap() + v * dx);
        }
        let total = *prefix.last().unwrap();
        Self {
            prefix,
            values: values.to_vec(),
            dx,
            origin,
            total,
        }
    }

    fn at(&self, y: f64) -> f64 {
        let n = self.values.len();
        let period = self.dx * n as f64;
        let u = y - self.origin;
        let wraps = (u / period).floor();
        let rem = u - wraps * period;
        let c = ((rem / self.dx).floor() as usize).min(n - 1);
        let frac = rem - c as f64 * self.dx;
        wraps * self.total + self.prefix[c] + self.values[c] * frac
    }
}

/// `sup_{r > R} (1/2r) ∫_{x-r}^{x+r} h` for one periodic 1D slice, exact for the cell model.
///
/// Between consecutive radii where `x ± r` crosses a cell boundary the average is
/// monotone in `r`, so the sup is attained at the floor, at a crossing or at `r = L`.
fn maximal_line_periodic(grid: &SpectralGrid, h: &[f64], r_floor: f64) -> Vec<f64> {
    let dx = grid.dx();
    let l = grid.half_length();
    let pre = PeriodicPrefix::new(h, dx, -l - 0.5 * dx);
    let n = h.len();
    let mut radii: Vec<f64> = Vec::new();
    if r_floor > 0.0 && r_floor < l {
        radii.push(r_floor);
    }
    let mut m = 0;
    loop {
        let r = (m as f64 + 0.5) * dx;
        if r > l {
            break;
        }
        if r > r_floor {
            radii.push(r);
        }
        m += 1;
    }
    if l > r_floor {
        radii.push(l);
    }
    (0..n)
        .map(|j| {
            let x = -l + j as f64 * dx;
            let mut best = if r_floor <= 0.0 { h[j] } else { 0.0 };
            for &r in &radii {
                let avg = (pre.at(x + r) - pre.at(x - r)) / (2.0 * r);
                if avg > best {
                    best = avg;
                }
            }
            if radii.is_empty() && r_floor > 0.0 {
                // floor beyond the box: the only admissible balls cover everything
                best = pre.total / (2.0 * l);
            }
            best
        })
        .collect()
}

/// Radii of the geometric ladder `{R ρ^k} ∪ {dx 2^k}` capped at `cap`.
fn ladder(r_floor: f64, dx: f64, ratio: f64, cap: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut r = if r_floor > 0.0 { r_floor } else { dx };
    while r <= cap {
        out.push(r);
        r *= ratio;
    }
    let mut r = dx;
    while r <= cap {
        if r > r_floor {
            out.push(r);
        }
        r *= 2.0;
    }
    out.push(cap);
    out.sort_by(|a, b| a.partial_cmp(b).unwrap());
    out.dedup();
    out.retain(|r| *r >= r_floor);
    out
}

fn maximal_disc(grid: &SpectralGrid, h: &[f64], r_floor: f64) -> Vec<f64> {
    let radii = ladder(r_floor, grid.dx(), 2f64.powf(0.25), grid.half_length());
    (0..grid.points())
        .map(|j| {
            let x0 = grid.position(j);
            let mut best = if r_floor <= 0.0 { h[j] } else { 0.0 };
            for &r in &radii {
                let cells = disc_cells(grid, x0, r);
                let ws: f64 = cells.iter().map(|c| c.1).sum();
                if ws > 0.0 {
                    let avg = cells.iter().map(|(k, w)| w * h[*k]).sum::<f64>() / ws;
                    best = best.max(avg);
                }
            }
            best
        })
        .collect()
}

/// Time maximal function with zero extension outside `[a, b]`.
fn maximal_time_series(bounds: &[f64], nodes: &[f64], h: &[f64], r_floor: f64) -> Vec<f64> {
    let n = h.len();
    let mut prefix = vec![0.0; n + 1];
    for i in 0..n {
        prefix[i + 1] = prefix[i] + h[i] * (bounds[i + 1] - bounds[i]);
    }
    let at = |y: f64| -> f64 {
        if y <= bounds[0] {
            return 0.0;
        }
        if y >= bounds[n] {
            return prefix[n];
        }
        let c = (bounds.partition_point(|&b| b <= y) - 1).min(n - 1);
        prefix[c] + h[c] * (y - bounds[c])
    };
    (0..n)
        .map(|i| {
            let t = nodes[i];
            let mut best = if r_floor <= 0.0 { h[i] } else { 0.0 };
            let mut eval = |r: f64| {
                if r > 0.0 && r >= r_floor {
                    let avg = (at(t + r) - at(t - r)) / (2.0 * r);
                    if avg > best {
                        best = avg;
                    }
                }
            };
            if r_floor > 0.0 {
                eval(r_floor);
            }
            for &c in bounds {
                eval((c - t).abs());
            }
            best
        })
        .collect()
}

/// `𝕄^R` along one axis of a nonnegative space-time field (absolute values are used).
pub fn maximal(h: &ScalarField, axis: Axis, r_floor: f64) -> Result<ScalarField> {
    if !(r_floor >= 0.0) {
        return Err(Error::InvalidParameter("R_floor must be nonnegative".into()));
    }
    let grid = h.grid().clone();
    let np = grid.points();
    let nt = h.nt();
    let abs: Vec<f64> = h.values().iter().map(|v| v.abs()).collect();
    let values = match axis {
        Axis::Space => {
            let rows = par_map(nt, |i| {
                let slice = &abs[i * np..(i + 1) * np];
                spatial_maximal_slice(&grid, slice, r_floor)
            });
            rows.concat()
        }
        Axis::Time => {
            let nodes = grid.t_nodes();
            let bounds = time_cell_bounds(nodes);
            let cols = par_map(np, |j| {
                let series: Vec<f64> = (0..nt).map(|i| abs[i * np + j]).collect();
                maximal_time_series(&bounds, nodes, &series, r_floor)
            });
            let mut out = vec![0.0; nt * np];
            for (j, col) in cols.into_iter().enumerate() {
                for (i, v) in col.into_iter().enumerate() {
                    out[i * np + j] = v;
                }
            }
            out
        }
    };
    ScalarField::from_values(grid, values)
}

/// Spatial maximal function of one slice (`‖h‖_V` already taken).
pub fn spatial_maximal_slice(grid: &SpectralGrid, h: &[f64], r_floor: f64) -> Vec<f64> {
    match grid.dim() {
        1 => maximal_line_periodic(grid, h, r_floor),
        _ => maximal_disc(grid, h, r_floor),
    }
}

/// `𝕄_t 𝕄_x h`.
pub fn maximal_parabolic(h: &ScalarField) -> Result<ScalarField> {
    maximal(&maximal(h, Axis::Space, 0.0)?, Axis::Time, 0.0)
}

/// Cube family for the sharp function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SharpOptions {
    /// Ladder factor between consecutive time radii.
    pub ratio: f64,
    /// Smallest and largest time radius; `None` picks lattice-based defaults.
    pub r_min: Option<f64>,
    pub r_max: Option<f64>,
    /// Radii added to the ladder (e.g. filtration comparison radii).
    pub extra_radii: Vec<f64>,
    /// Only cubes centered at the point; otherwise centers are shifted by
    /// `{-1/2, 0, 1/2}` of the radius along each axis.
    pub centered_only: bool,
}

impl Default for SharpOptions {
    fn default() -> Self {
        Self {
            ratio: 2f64.powf(0.25),
            r_min: None,
            r_max: None,
            extra_radii: Vec::new(),
            centered_only: false,
        }
    }
}

impl SharpOptions {
    /// Time radii of the family on this grid.
    pub fn radii(&self, grid: &SpectralGrid, gamma: f64) -> Vec<f64> {
        let nodes = grid.t_nodes();
        let min_dt = nodes.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
        let r_min = self
            .r_min
            .unwrap_or_else(|| 0.5 * min_dt.min(grid.dx().powf(gamma)));
        let r_max = self
            .r_max
            .unwrap_or_else(|| (grid.t_end() - grid.t_start()).max(grid.half_length().powf(gamma)));
        let mut out = Vec::new();
        let mut r = r_min;
        while r <= r_max * (1.0 + 1e-12) {
            out.push(r);
            r *= self.ratio;
        }
        out.extend(self.extra_radii.iter().copied().filter(|r| *r > 0.0));
        out.sort_by(|a, b| a.partial_cmp(b).unwrap());
        out.dedup();
        out
    }
}

/// Mean oscillation of the cell model over `(time weights) × (space weights)`.
fn mean_oscillation(h: &[f64], np: usize, tw: &[(usize, f64)], sw: &[(usize, f64)]) -> f64 {
    let wt: f64 = tw.iter().map(|v| v.1).sum();
    let ws: f64 = sw.iter().map(|v| v.1).sum();
    let total = wt * ws;
    if total <= 0.0 {
        return 0.0;
    }
    let mut s = 0.0;
    for &(i, a) in tw {
        let row = &h[i * np..(i + 1) * np];
        let mut inner = 0.0;
        for &(j, b) in sw {
            inner += b * row[j];
        }
        s += a * inner;
    }
    let mean = s / total;
    let mut osc = 0.0;
    for &(i, a) in tw {
        let row = &h[i * np..(i + 1) * np];
        let mut inner = 0.0;
        for &(j, b) in sw {
            inner += b * (row[j] - mean).abs();
        }
        osc += a * inner;
    }
    osc / total
}

fn spatial_weights(grid: &SpectralGrid, x0: [f64; 2], rho: f64) -> Vec<(usize, f64)> {
    match grid.dim() {
        1 => periodic_weights(grid, x0[0], rho),
        _ => disc_cells(grid, x0, rho.min(grid.half_length() * 2f64.sqrt())),
    }
}

/// `h^#` at the lattice points `(i, j)` (time index, flat space index).
pub fn sharp_parabolic_at(
    h: &ScalarField,
    gamma: f64,
    opts: &SharpOptions,
    points: &[(usize, usize)],
) -> Result<Vec<f64>> {
    if !(gamma > 0.0) {
        return Err(Error::InvalidParameter("gamma must be positive".into()));
    }
    let grid = h.grid().clone();
    let np = grid.points();
    let d = grid.dim();
    let bounds = time_cell_bounds(grid.t_nodes());
    let radii = opts.radii(&grid, gamma);
    let offsets: &[f64] = if opts.centered_only { &[0.0] } else { &[-0.5, 0.0, 0.5] };
    let vals = h.values();
    let (a, b) = (grid.t_start(), grid.t_end());
    let out = par_map(points.len(), |p| {
        let (i, j) = points[p];
        let t = grid.t_nodes()[i];
        let x = grid.position(j);
        let mut best: f64 = 0.0;
        let mut seen: HashMap<[u64; 6], ()> = HashMap::new();
        for &r in &radii {
            let rho = r.powf(1.0 / gamma);
            for &ot in offsets {
                let tc = t + ot * r;
                let lo = (tc - r).max(a);
                let hi = (tc + r).min(b);
                let tw = line_weights(&bounds, lo, hi);
                for &ox in offsets {
                    let spatial_offsets: Vec<[f64; 2]> = if d == 1 {
                        vec![[ox, 0.0]]
                    } else {
                        offsets.iter().map(|&oy| [ox, oy]).collect()
                    };
                    for o in spatial_offsets {
                        let xc = [x[0] + o[0] * rho, x[1] + o[1] * rho];
                        let rho_eff = if d == 1 { rho.min(grid.half_length()) } else { rho };
                        let key = [
                            lo.to_bits(),
                            hi.to_bits(),
                            xc[0].to_bits(),
                            xc[1].to_bits(),
                            rho_eff.to_bits(),
                            0,
                        ];
                        if seen.insert(key, ()).is_some() {
                            continue;
                        }
                        let sw = spatial_weights(&grid, xc, rho_eff);
                        best = best.max(mean_oscillation(vals, np, &tw, &sw));
                    }
                }
            }
        }
        best
    });
    Ok(out)
}

/// `h^#` at every lattice point.
pub fn sharp_parabolic(h: &ScalarField, gamma: f64, opts: &SharpOptions) -> Result<ScalarField> {
    let np = h.grid().points();
    let points: Vec<(usize, usize)> = (0..h.nt())
        .flat_map(|i| (0..np).map(move |j| (i, j)))
        .collect();
    let v = sharp_parabolic_at(h, gamma, opts, &points)?;
    ScalarField::from_values(h.grid().clone(), v)
}

/// One level of the filtration: time side `2^{-n}`, space side `2^{-⌊n/γ⌋}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FiltrationLevel {
    pub n: i32,
    pub time_side: f64,
    pub space_side: f64,
}

/// Nested parabolic dyadic filtration over the grid box `[a, b] × [-L, L)^d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Filtration {
    pub gamma: f64,
    pub dim: usize,
    pub n_min: i32,
    pub n_max: i32,
    /// Cube corners sit at `t_anchor + i 2^{-n}` and `x_anchor + i σ_n`.
    pub t_anchor: f64,
    pub x_anchor: f64,
    t_box: (f64, f64),
    half_length: f64,
}

impl Filtration {
    /// Anchored at the box corner `(a, -L)`; every spatial side must divide `2L`.
    pub fn new(grid: &SpectralGrid, gamma: f64, n_min: i32, n_max: i32) -> Result<Self> {
        Self::with_anchor(grid, gamma, n_min, n_max, grid.t_start(), -grid.half_length())
    }

    pub fn with_anchor(
        grid: &SpectralGrid,
        gamma: f64,
        n_min: i32,
        n_max: i32,
        t_anchor: f64,
        x_anchor: f64,
    ) -> Result<Self> {
        if !(gamma > 0.0) || n_max < n_min {
            return Err(Error::InvalidParameter("invalid filtration levels".into()));
        }
        let f = Self {
            gamma,
            dim: grid.dim(),
            n_min,
            n_max,
            t_anchor,
            x_anchor,
            t_box: (grid.t_start(), grid.t_end()),
            half_length: grid.half_length(),
        };
        for n in n_min..=n_max {
            let s = f.level(n).space_side;
            let count = 2.0 * f.half_length / s;
            if s < 2.0 * f.half_length && (count - count.round()).abs() > 1e-9 {
                return Err(Error::InvalidParameter(format!(
                    "space side {s} at level {n} does not divide the period {}",
                    2.0 * f.half_length
                )));
            }
        }
        Ok(f)
    }

    pub fn level(&self, n: i32) -> FiltrationLevel {
        FiltrationLevel {
            n,
            time_side: 2f64.powi(-n),
            space_side: 2f64.powi(-((n as f64 / self.gamma).floor() as i32)),
        }
    }

    /// Largest parent/child measure ratio over consecutive levels (`<= 2^{1+d}`).
    pub fn n0(&self) -> f64 {
        ((self.n_min + 1)..=self.n_max)
            .map(|n| {
                let c = self.level(n);
                let p = self.level(n - 1);
                (p.time_side / c.time_side) * (p.space_side / c.space_side).powi(self.dim as i32)
            })
            .fold(1.0, f64::max)
    }

    /// Comparison radius `R₀(n) = max(2^{-n}, (d σ_n)^γ)` whose centered cube
    /// contains the level-`n` cube of any of its points.
    pub fn comparison_radius(&self, n: i32) -> f64 {
        let l = self.level(n);
        l.time_side.max((self.dim as f64 * l.space_side).powf(self.gamma))
    }

    /// `max_n |Q_{R₀(n)}| / |P_n|`.
    pub fn n1(&self) -> f64 {
        (self.n_min..=self.n_max)
            .map(|n| {
                let l = self.level(n);
                let r0 = self.comparison_radius(n);
                let q = 2.0 * r0 * unit_ball_volume(self.dim) * r0.powf(self.dim as f64 / self.gamma);
                q / (l.time_side * l.space_side.powi(self.dim as i32))
            })
            .fold(0.0, f64::max)
    }

    /// `(2p/(p-1))^p N₀^{p-1} · 2 N₁²`.
    pub fn fefferman_stein_constant(&self, p: f64) -> f64 {
        (2.0 * p / (p - 1.0)).powf(p) * self.n0().powf(p - 1.0) * 2.0 * self.n1().powi(2)
    }

    /// All comparison radii of the levels.
    pub fn comparison_radii(&self) -> Vec<f64> {
        (self.n_min..=self.n_max).map(|n| self.comparison_radius(n)).collect()
    }

    fn in_box(&self, t: f64, x: &[f64]) -> bool {
        let l = self.half_length;
        t >= self.t_box.0 && t <= self.t_box.1 && x.iter().all(|&v| v >= -l && v < l)
    }
}

/// Indices `(i₀, i₁, …, i_d)` of the level-`n` cube containing the point.
///
/// Spatial indices are reduced modulo the number of cubes per period.
pub fn locate_cube(filt: &Filtration, level: &FiltrationLevel, t: f64, x: &[f64]) -> Result<Vec<i64>> {
    if x.len() != filt.dim || !filt.in_box(t, x) {
        return Err(Error::OutOfBox);
    }
    let mut idx = vec![((t - filt.t_anchor) / level.time_side).floor() as i64];
    let period = 2.0 * filt.half_length;
    let count = ((period / level.space_side).round() as i64).max(1);
    for &v in x {
        let k = ((v - filt.x_anchor) / level.space_side).floor() as i64;
        idx.push(if level.space_side < period { k.rem_euclid(count) } else { k });
    }
    Ok(idx)
}

/// Cube indices touched by each cell along one axis, with overlap lengths.
fn axis_cube_overlaps(cells: &[(f64, f64)], anchor: f64, side: f64) -> Vec<Vec<(i64, f64)>> {
    cells
        .iter()
        .map(|&(lo, hi)| {
            let first = ((lo - anchor) / side).floor() as i64;
            let last = ((hi - anchor) / side).ceil() as i64;
            (first..last.max(first + 1))
                .filter_map(|k| {
                    let a = (anchor + k as f64 * side).max(lo);
                    let b = (anchor + (k + 1) as f64 * side).min(hi);
                    (b > a).then_some((k, b - a))
                })
                .collect()
        })
        .collect()
}

/// `f^{#,P}` at every lattice point: sup over levels of the mean oscillation on
/// the level cube containing the point (cubes intersected with the box).
pub fn filtration_sharp(h: &ScalarField, filt: &Filtration) -> Result<ScalarField> {
    let grid = h.grid().clone();
    if grid.dim() != filt.dim {
        return Err(Error::Dimension(grid.dim()));
    }
    let d = grid.dim();
    let n = grid.n();
    let np = grid.points();
    let nt = h.nt();
    let bounds = time_cell_bounds(grid.t_nodes());
    let tcells: Vec<(f64, f64)> = bounds.windows(2).map(|w| (w[0], w[1])).collect();
    let dx = grid.dx();
    let l = grid.half_length();
    let xcells: Vec<(f64, f64)> = (0..n)
        .map(|j| {
            let x = -l + j as f64 * dx;
            (x - 0.5 * dx, x + 0.5 * dx)
        })
        .collect();
    let vals = h.values();
    let mut best = vec![0.0f64; nt * np];
    let period = 2.0 * l;
    for lev_n in filt.n_min..=filt.n_max {
        let level = filt.level(lev_n);
        let t_ov = axis_cube_overlaps(&tcells, filt.t_anchor, level.time_side);
        let wrap = level.space_side < period;
        let count = ((period / level.space_side).round() as i64).max(1);
        let x_ov: Vec<Vec<(i64, f64)>> = axis_cube_overlaps(&xcells, filt.x_anchor, level.space_side)
            .into_iter()
            .map(|v| {
                v.into_iter()
                    .map(|(k, w)| (if wrap { k.rem_euclid(count) } else { 0 }, w))
                    .collect()
            })
            .collect();
        // per spatial cell: cube key and weight (product over axes in d = 2)
        let s_ov: Vec<Vec<(i64, f64)>> = (0..np)
            .map(|j| {
                if d == 1 {
                    x_ov[j].clone()
                } else {
                    let (a, b) = (j / n, j % n);
                    let mut out = Vec::new();
                    for &(ka, wa) in &x_ov[a] {
                        for &(kb, wb) in &x_ov[b] {
                            out.push((ka * count.max(1) * 4 + kb, wa * wb));
                        }
                    }
                    out
                }
            })
            .collect();
        let mut w: HashMap<(i64, i64), (f64, f64)> = HashMap::new();
        for i in 0..nt {
            for &(kt, wt) in &t_ov[i] {
                for j in 0..np {
                    for &(ks, ws) in &s_ov[j] {
                        let e = w.entry((kt, ks)).or_insert((0.0, 0.0));
                        e.0 += wt * ws;
                        e.1 += wt * ws * vals[i * np + j];
                    }
                }
            }
        }
        let mut osc: HashMap<(i64, i64), f64> = HashMap::new();
        for i in 0..nt {
            for &(kt, wt) in &t_ov[i] {
                for j in 0..np {
                    for &(ks, ws) in &s_ov[j] {
                        let (tw, ts) = w[&(kt, ks)];
                        let mean = ts / tw;
                        *osc.entry((kt, ks)).or_insert(0.0) += wt * ws * (vals[i * np + j] - mean).abs();
                    }
                }
            }
        }
        for i in 0..nt {
            let t = grid.t_nodes()[i];
            for j in 0..np {
                let pos = grid.position(j);
                let idx = locate_cube(filt, &level, t, &pos[..d])?;
                // the right end b belongs to the last cube
                let mut kt = idx[0];
                if !w.keys().any(|k| k.0 == kt) {
                    kt -= 1;
                }
                let ks = if d == 1 {
                    if wrap {
                        idx[1]
                    } else {
                        0
                    }
                } else {
                    let a = if wrap { idx[1] } else { 0 };
                    let b = if wrap { idx[2] } else { 0 };
                    a * count.max(1) * 4 + b
                };
                let key = (kt, ks);
                let o = match (osc.get(&key), w.get(&key)) {
                    (Some(o), Some(tw)) if tw.0 > 0.0 => o / tw.0,
                    _ => return Err(Error::OutOfBox),
                };
                let slot = &mut best[i * np + j];
                *slot = slot.max(o);
            }
        }
    }
    ScalarField::from_values(grid, best)
}
