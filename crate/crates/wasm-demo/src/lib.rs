//! Browser bindings: evolution kernels, a Littlewood-Paley decomposition and
//! the one-dimensional maximal function, each returned as flat `Float64Array`s.

use std::sync::Arc;

use wasm_bindgen::prelude::*;

use lpevo::evolution::evolution_kernel;
use lpevo::grid::Domain;
use lpevo::lp_decomp::{delta_j, s0_project, DyadicPartition};
use lpevo::maximal_sharp::spatial_maximal_slice;
use lpevo::symbols::{default_n_derivs, SymbolSpec};
use lpevo::verify::FieldSampler;
use lpevo::{SpatialField, SpectralGrid};

fn js(e: lpevo::Error) -> JsValue {
    JsValue::from_str(&e.to_string())
}

fn grid(n: usize, half_length: f64) -> Result<Arc<SpectralGrid>, JsValue> {
    Ok(Arc::new(SpectralGrid::uniform(1, n, half_length, 0.0, 1.0, 2).map_err(js)?))
}

/// Lattice points `x_j = -L + j·2L/n`.
#[wasm_bindgen]
pub fn lattice(n: usize, half_length: f64) -> Result<Vec<f64>, JsValue> {
    Ok(grid(n, half_length)?.coordinates())
}

/// Real part of the kernel of `exp(-τ κ|ξ|^γ)` on the lattice.
#[wasm_bindgen]
pub fn kernel(gamma: f64, kappa: f64, tau: f64, n: usize, half_length: f64) -> Result<Vec<f64>, JsValue> {
    let spec = SymbolSpec::power(kappa, gamma, lpevo::TimeModulation::None, default_n_derivs(gamma, 1)).map_err(js)?;
    let k = evolution_kernel(&spec, grid(n, half_length)?, 0.0, tau).map_err(js)?;
    Ok(k.values.iter().map(|v| v.re).collect())
}

/// Number of rows returned by [`lp_blocks`]: `f`, `S₀f`, then `Δ_j f` for `j = 1..=j_max`.
#[wasm_bindgen]
pub fn lp_block_rows(n: usize, half_length: f64) -> Result<usize, JsValue> {
    let part = DyadicPartition::new(grid(n, half_length)?).map_err(js)?;
    Ok(2 + part.j_max.max(0) as usize)
}

/// A seeded random field followed by its Littlewood-Paley pieces, row after row.
#[wasm_bindgen]
pub fn lp_blocks(seed: u64, n: usize, half_length: f64) -> Result<Vec<f64>, JsValue> {
    let g = grid(n, half_length)?;
    let part = DyadicPartition::new(g.clone()).map_err(js)?;
    let sampler = FieldSampler {
        seed,
        j_lo: -1,
        j_hi: part.j_max,
        harmonics: 0,
        decay: 0.5,
        real: true,
        mean_zero: false,
        ..FieldSampler::default()
    };
    let f = sampler.sample_field(&g, 0).map_err(js)?.slice(0);
    let mut out: Vec<f64> = f.values().iter().map(|v| v.re).collect();
    out.extend(s0_project(&part, &f).map_err(js)?.values().iter().map(|v| v.re));
    for j in 1..=part.j_max {
        out.extend(delta_j(&part, j, &f).map_err(js)?.values().iter().map(|v| v.re));
    }
    Ok(out)
}

/// `𝕄f` for `f = |values|` sampled on the lattice of half-length `half_length`.
#[wasm_bindgen]
pub fn maximal(values: Vec<f64>, half_length: f64) -> Result<Vec<f64>, JsValue> {
    let g = grid(values.len(), half_length)?;
    let f = SpatialField::from_values(
        g.clone(),
        1,
        Domain::Physical,
        values.iter().map(|v| v.into()).collect(),
    )
    .map_err(js)?;
    Ok(spatial_maximal_slice(&g, &f.pointwise_norms(), 0.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn heat_kernel_peak() {
        let k = kernel(2.0, 1.0, 1.0, 512, 20.0).unwrap();
        assert!((k[256] - (4.0 * std::f64::consts::PI).powf(-0.5)).abs() < 1e-9);
    }

    #[test]
    fn blocks_sum_to_field() {
        let (n, l) = (128, 8.0);
        let rows = lp_block_rows(n, l).unwrap();
        let data = lp_blocks(3, n, l).unwrap();
        assert_eq!(data.len(), rows * n);
        for i in 0..n {
            let sum: f64 = (1..rows).map(|r| data[r * n + i]).sum();
            assert!((sum - data[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn maximal_of_indicator() {
        let x = lattice(256, 8.0).unwrap();
        let f: Vec<f64> = x.iter().map(|&v| if v.abs() < 1.0 { 1.0 } else { 0.0 }).collect();
        let m = maximal(f.clone(), 8.0).unwrap();
        for (a, b) in f.iter().zip(&m) {
            assert!(b + 1e-12 >= *a && *b <= 1.0 + 1e-12);
        }
    }
}
