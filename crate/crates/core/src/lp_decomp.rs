//! Littlewood-Paley decomposition with the smooth bump `Φ(ξ) = χ(|ξ|) - χ(2|ξ|)`,
//! Besov and Bessel-potential (Sobolev) norms.

use std::io::Write;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{lebesgue_norm, Domain, SpatialField, SpectralGrid};

fn h(s: f64) -> f64 {
    if s > 0.0 {
        (-1.0 / s).exp()
    } else {
        0.0
    }
}

/// Smooth radial cutoff: `1` on `[0, 1]`, `0` on `[2, ∞)`, `C^∞` in between.
pub fn chi(r: f64) -> f64 {
    if r <= 1.0 {
        1.0
    } else if r >= 2.0 {
        0.0
    } else {
        let a = h(2.0 - r);
        a / (a + h(r - 1.0))
    }
}

/// Radial profile `Φ(r) = χ(r) - χ(2r)`, supported in `[1/2, 2]`.
pub fn phi_profile(r: f64) -> f64 {
    chi(r) - chi(2.0 * r)
}

/// Dyadic blocks `Φ(2^{-j} ξ)` resolved by a lattice.
///
/// `j_min` is the lowest block that meets a nonzero lattice frequency and
/// `j_max` the highest block with `2^j <= ξ_Nyquist / 2`.
#[derive(Debug, Clone, PartialEq)]
pub struct DyadicPartition {
    grid: Arc<SpectralGrid>,
    pub j_min: i32,
    pub j_max: i32,
    norms: Vec<f64>,
}

impl DyadicPartition {
    pub fn new(grid: Arc<SpectralGrid>) -> Result<Self> {
        let j_max = (grid.nyquist() / 2.0).log2().floor() as i32;
        // block j reaches 2^{j+1}; it must reach the first nonzero frequency dξ
        let j_min = (grid.dxi().log2() - 1.0).ceil() as i32;
        if j_max - j_min + 1 < 3 {
            return Err(Error::InvalidParameter(format!(
                "grid resolves only {} dyadic bands (need at least 3)",
                (j_max - j_min + 1).max(0)
            )));
        }
        let norms = grid.wave_norms();
        Ok(Self {
            grid,
            j_min,
            j_max,
            norms,
        })
    }

    pub fn grid(&self) -> &Arc<SpectralGrid> {
        &self.grid
    }

    /// `Φ(2^{-j} ξ_k)` in FFT order.
    pub fn block_multiplier(&self, j: i32) -> Vec<f64> {
        let s = 2f64.powi(-j);
        self.norms.iter().map(|r| phi_profile(s * r)).collect()
    }

    /// `χ(|ξ_k|)`, the symbol of `S₀ = Σ_{j <= 0} Δ_j`.
    pub fn s0_multiplier(&self) -> Vec<f64> {
        self.norms.iter().map(|r| chi(*r)).collect()
    }

    /// `Σ_{j=j_lo}^{j_hi} Φ(2^{-j} ξ)` telescoped to `χ(2^{-j_hi}|ξ|) - χ(2^{1-j_lo}|ξ|)`.
    pub fn telescoped_sum(&self, j_lo: i32, j_hi: i32) -> Vec<f64> {
        let a = 2f64.powi(-j_hi);
        let b = 2f64.powi(1 - j_lo);
        self.norms.iter().map(|r| chi(a * r) - chi(b * r)).collect()
    }

    fn check_j(&self, j: i32) -> Result<()> {
        if j < self.j_min || j > self.j_max {
            return Err(Error::BlockRange {
                j,
                min: self.j_min,
                max: self.j_max,
            });
        }
        Ok(())
    }

    /// CSV `r,phi` of the radial profile on `n` points of `[0, 2.5]`.
    pub fn write_profile_csv<W: Write>(mut w: W, n: usize) -> Result<()> {
        writeln!(w, "r,phi")?;
        for i in 0..n {
            let r = 2.5 * i as f64 / (n.max(2) - 1) as f64;
            writeln!(w, "{:.17e},{:.17e}", r, phi_profile(r))?;
        }
        Ok(())
    }
}

/// `Δ_j f = ℱ^{-1}[Φ(2^{-j}·) ℱ f]`.
pub fn delta_j(part: &DyadicPartition, j: i32, f: &SpatialField) -> Result<SpatialField> {
    part.check_j(j)?;
    check_field(part, f)?;
    f.multiplied_real(&part.block_multiplier(j))
}

/// `S₀ f = ℱ^{-1}[χ(|·|) ℱ f]`.
pub fn s0_project(part: &DyadicPartition, f: &SpatialField) -> Result<SpatialField> {
    check_field(part, f)?;
    f.multiplied_real(&part.s0_multiplier())
}

fn check_field(part: &DyadicPartition, f: &SpatialField) -> Result<()> {
    if f.domain() != Domain::Physical {
        return Err(Error::Shape("expected a physical-side field".into()));
    }
    if f.grid().as_ref() != part.grid.as_ref() {
        return Err(Error::Shape("field and partition use different grids".into()));
    }
    Ok(())
}

/// A Besov norm with the part of `f` above the resolved bands.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BesovNorm {
    pub value: f64,
    /// `‖f - S₀f - Σ_{j=1}^{j_max} Δ_j f‖_p`, nonzero when `f` has content near Nyquist.
    pub truncation: f64,
}

/// `(‖S₀ f‖_p^p + Σ_{j=1}^{j_max} 2^{jαp} ‖Δ_j f‖_p^p)` without the outer root.
pub fn besov_p_power(part: &DyadicPartition, f: &SpatialField, alpha: f64, p: f64) -> Result<f64> {
    check_field(part, f)?;
    let mut total = lebesgue_norm(&s0_project(part, f)?, p)?.powf(p);
    for j in 1..=part.j_max {
        let block = f.multiplied_real(&part.block_multiplier(j))?;
        total += 2f64.powf(j as f64 * alpha * p) * lebesgue_norm(&block, p)?.powf(p);
    }
    Ok(total)
}

/// `‖f‖_{B^α_{p,p}}`.
pub fn besov_norm(part: &DyadicPartition, f: &SpatialField, alpha: f64, p: f64) -> Result<BesovNorm> {
    if !(p >= 1.0) {
        return Err(Error::Exponent(format!("p = {p} must be >= 1")));
    }
    let value = besov_p_power(part, f, alpha, p)?.powf(1.0 / p);
    let captured = f.multiplied_real(&part.telescoped_sum(1, part.j_max))?;
    let low = s0_project(part, f)?;
    let rest = f.sub(&captured)?.sub(&low)?;
    Ok(BesovNorm {
        value,
        truncation: lebesgue_norm(&rest, p)?,
    })
}

/// Symbol `(1 + |ξ|²)^{α/2}` of the Bessel potential.
pub fn bessel_multiplier(grid: &SpectralGrid, alpha: f64) -> Vec<f64> {
    grid.wave_norms()
        .iter()
        .map(|r| (1.0 + r * r).powf(alpha / 2.0))
        .collect()
}

/// `‖(1 - Δ)^{α/2} f‖_p`.
pub fn sobolev_norm(f: &SpatialField, alpha: f64, p: f64) -> Result<f64> {
    if f.domain() != Domain::Physical {
        return Err(Error::Shape("expected a physical-side field".into()));
    }
    let m = bessel_multiplier(f.grid(), alpha);
    lebesgue_norm(&f.multiplied_real(&m)?, p)
}
