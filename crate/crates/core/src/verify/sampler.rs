//! Random band-limited test fields.
//!
//! Coefficients are keyed by `(seed, sample, lattice mode, component, harmonic)`
//! and modes are addressed by their physical wave vector, so refining `n` with a
//! fixed box reproduces the same continuum field.

use num_complex::Complex64;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{SpaceTimeField, SpectralGrid};
use crate::lp_decomp::chi;
use std::sync::Arc;

/// Smooth compactly supported time profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum TimeWindow {
    None,
    /// `exp(1 - 1/(1 - u²))` on `(lo, hi)` mapped to `u ∈ (-1, 1)`, zero outside.
    Bump { lo: f64, hi: f64 },
}

impl TimeWindow {
    pub fn value(&self, t: f64) -> f64 {
        match *self {
            TimeWindow::None => 1.0,
            TimeWindow::Bump { lo, hi } => bump((2.0 * t - lo - hi) / (hi - lo)),
        }
    }
}

fn bump(u: f64) -> f64 {
    if u.abs() >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - u * u)).exp()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldSampler {
    pub seed: u64,
    /// Dyadic band: modes with `2^{j_lo} <= |ξ| <= 2^{j_hi}`.
    pub j_lo: i32,
    pub j_hi: i32,
    pub m: usize,
    pub mean_zero: bool,
    /// Amplitudes scale like `(1 + |ξ|²)^{-decay/2}`.
    pub decay: f64,
    /// Keep only this many modes of the band (chosen by keyed priorities).
    pub max_modes: Option<usize>,
    /// Number of temporal cosine harmonics on top of the constant profile.
    pub harmonics: usize,
    pub time_window: TimeWindow,
    /// Multiply by the smooth spatial cutoff `χ(|x|/radius)`.
    pub space_window: Option<f64>,
    /// Take the real part (scalar real fields).
    pub real: bool,
    /// Replace the random sum by the fixed mode `e^{i π k·x / L}` in component 0.
    pub single_mode: Option<[i64; 2]>,
}

impl Default for FieldSampler {
    fn default() -> Self {
        Self {
            seed: 0,
            j_lo: -1,
            j_hi: 2,
            m: 1,
            mean_zero: true,
            decay: 0.0,
            max_modes: None,
            harmonics: 2,
            time_window: TimeWindow::None,
            space_window: None,
            real: false,
            single_mode: None,
        }
    }
}

/// Keyed uniform words: stream `sample`, word offset `8 key`.
struct Keyed {
    rng: ChaCha8Rng,
}

impl Keyed {
    fn new(seed: u64, sample: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(sample);
        Self { rng }
    }

    fn uniforms(&mut self, key: u64) -> [f64; 4] {
        self.rng.set_word_pos(8 * key as u128);
        let mut out = [0.0; 4];
        for o in out.iter_mut() {
            // (0, 1]
            *o = ((self.rng.next_u64() >> 11) as f64 + 1.0) / (1u64 << 53) as f64;
        }
        out
    }

    /// Standard complex Gaussian (`E|z|² = 1`) by Box-Muller.
    fn gaussian(&mut self, key: u64) -> (Complex64, f64) {
        let u = self.uniforms(key);
        let r = (-2.0 * u[0].ln()).sqrt();
        let th = 2.0 * std::f64::consts::PI * u[1];
        (Complex64::new(r * th.cos(), r * th.sin()) * std::f64::consts::FRAC_1_SQRT_2, u[2])
    }
}

const OFFSET: i64 = 1 << 20;

fn mode_key(k: [i64; 2], c: usize, h: usize, m: usize, harmonics: usize) -> u64 {
    let base = ((k[0] + OFFSET) as u64) * (2 * OFFSET as u64) + (k[1] + OFFSET) as u64;
    (base * m as u64 + c as u64) * (harmonics as u64 + 2) + h as u64
}

impl FieldSampler {
    /// Lattice modes of the band, with their `|ξ|`.
    pub fn modes(&self, grid: &SpectralGrid) -> Result<Vec<([i64; 2], f64)>> {
        if let Some(k) = self.single_mode {
            let xi = grid.dxi() * ((k[0] * k[0] + k[1] * k[1]) as f64).sqrt();
            return Ok(vec![(k, xi)]);
        }
        let hi = 2f64.powi(self.j_hi);
        let lo = 2f64.powi(self.j_lo);
        if hi > grid.nyquist() * (1.0 - 1e-12) || self.j_hi < self.j_lo {
            return Err(Error::InvalidParameter(format!(
                "band [2^{}, 2^{}] outside the Nyquist range {}",
                self.j_lo,
                self.j_hi,
                grid.nyquist()
            )));
        }
        let kmax = (hi / grid.dxi()).floor() as i64;
        let d = grid.dim();
        let mut out = Vec::new();
        let range2 = if d == 2 { -kmax..=kmax } else { 0..=0 };
        for k0 in -kmax..=kmax {
            for k1 in range2.clone() {
                let r = grid.dxi() * ((k0 * k0 + k1 * k1) as f64).sqrt();
                if r == 0.0 {
                    if !self.mean_zero && lo <= 0.0 {
                        out.push(([k0, k1], r));
                    }
                    continue;
                }
                if r >= lo && r <= hi {
                    out.push(([k0, k1], r));
                }
            }
        }
        if !self.mean_zero && !out.iter().any(|m| m.1 == 0.0) {
            out.insert(0, ([0, 0], 0.0));
        }
        if out.is_empty() {
            return Err(Error::InvalidParameter("band contains no lattice modes".into()));
        }
        Ok(out)
    }

    /// Field number `sample` on `grid`.
    pub fn sample_field(&self, grid: &Arc<SpectralGrid>, sample: u64) -> Result<SpaceTimeField> {
        if self.m == 0 {
            return Err(Error::InvalidParameter("m must be positive".into()));
        }
        let mut modes = self.modes(grid)?;
        let mut keyed = Keyed::new(self.seed, sample);
        if let Some(limit) = self.max_modes {
            if modes.len() > limit {
                let mut pri: Vec<(f64, usize)> = modes
                    .iter()
                    .enumerate()
                    .map(|(i, (k, _))| (keyed.uniforms(mode_key(*k, 0, self.harmonics + 1, self.m, self.harmonics))[3], i))
                    .collect();
                pri.sort_by(|a, b| a.partial_cmp(b).unwrap());
                let mut keep: Vec<usize> = pri[..limit].iter().map(|p| p.1).collect();
                keep.sort_unstable();
                modes = keep.into_iter().map(|i| modes[i]).collect();
            }
        }
        let d = grid.dim();
        let n = grid.n();
        let np = grid.points();
        let m = self.m;
        let nodes = grid.t_nodes();
        let (a, b) = (grid.t_start(), grid.t_end());
        // coefficient table [mode][comp][harmonic]
        let nh = self.harmonics + 1;
        let mut coef = vec![Complex64::new(0.0, 0.0); modes.len() * m * nh];
        for (mi, (k, r)) in modes.iter().enumerate() {
            let amp = (1.0 + r * r).powf(-0.5 * self.decay);
            for c in 0..m {
                for h in 0..nh {
                    let val = if self.single_mode.is_some() {
                        if c == 0 && h == 0 {
                            Complex64::new(1.0, 0.0)
                        } else {
                            Complex64::new(0.0, 0.0)
                        }
                    } else {
                        keyed.gaussian(mode_key(*k, c, h, m, self.harmonics)).0 * amp / (1.0 + h as f64)
                    };
                    coef[(mi * m + c) * nh + h] = val;
                }
            }
        }
        let space_win: Option<Vec<f64>> = self.space_window.map(|rad| {
            (0..np)
                .map(|j| {
                    let x = grid.position(j);
                    let r = x[..d].iter().map(|v| v * v).sum::<f64>().sqrt();
                    chi(r / rad)
                })
                .collect()
        });
        let mut values = Vec::with_capacity(nodes.len() * m * np);
        let mut buf = vec![Complex64::new(0.0, 0.0); np];
        for &t in nodes {
            let w = self.time_window.value(t);
            let phase_t: Vec<f64> = (0..nh)
                .map(|h| (h as f64 * std::f64::consts::PI * (t - a) / (b - a)).cos())
                .collect();
            for c in 0..m {
                buf.iter_mut().for_each(|v| *v = Complex64::new(0.0, 0.0));
                if w != 0.0 {
                    for (mi, (k, _)) in modes.iter().enumerate() {
                        let mut cv = Complex64::new(0.0, 0.0);
                        for h in 0..nh {
                            cv += coef[(mi * m + c) * nh + h] * phase_t[h];
                        }
                        // e^{iξ x_j} = (-1)^{Σk} e^{2πi j·k/n}
                        let sign = if (k[0] + k[1]).rem_euclid(2) == 0 { 1.0 } else { -1.0 };
                        let pos = if d == 1 {
                            grid.fft_position(k[0])
                        } else {
                            grid.fft_position(k[0]) * n + grid.fft_position(k[1])
                        };
                        buf[pos] += cv * sign * w;
                    }
                    grid.idft(&mut buf);
                }
                if let Some(sw) = &space_win {
                    for (v, s) in buf.iter_mut().zip(sw) {
                        *v *= s;
                    }
                }
                if self.real {
                    for v in buf.iter_mut() {
                        v.im = 0.0;
                    }
                }
                values.extend_from_slice(&buf);
            }
        }
        SpaceTimeField::from_values(grid.clone(), m, values)
    }
}
