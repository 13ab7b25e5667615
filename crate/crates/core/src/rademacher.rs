//! Rademacher sign batches, Khintchine moments and the sign-mixture route to
//! the Bessel-potential/Besov embedding.

use num_complex::Complex64;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::grid::{Domain, SpatialField};
use crate::lp_decomp::{besov_p_power, sobolev_norm, DyadicPartition};
use crate::util::{pairwise_sum, par_map};

/// Largest `n_vars` enumerated exhaustively.
pub const EXHAUSTIVE_MAX_VARS: usize = 16;

/// A sample-major matrix of ±1 signs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RademacherBatch {
    pub seed: u64,
    pub n_vars: usize,
    pub n_samples: usize,
    /// Every sign pattern exactly once (uniform expectation, no sampling error).
    pub exhaustive: bool,
    signs: Vec<i8>,
}

impl RademacherBatch {
    /// Signs keyed by `(seed, sample, var)`: stream `sample` of a ChaCha8 generator
    /// seeded with `seed`, bit `var` of the sequential 32-bit words.
    pub fn monte_carlo(seed: u64, n_vars: usize, n_samples: usize) -> Result<Self> {
        if n_vars == 0 || n_samples == 0 {
            return Err(Error::InvalidParameter("empty Rademacher batch".into()));
        }
        let rows = par_map(n_samples, |s| sign_row(seed, s as u64, n_vars));
        Ok(Self {
            seed,
            n_vars,
            n_samples,
            exhaustive: false,
            signs: rows.concat(),
        })
    }

    /// All `2^{n_vars}` patterns; sample `s` has sign `-1` at var `i` when bit `i` of `s` is set.
    pub fn exhaustive(n_vars: usize) -> Result<Self> {
        if n_vars == 0 || n_vars > EXHAUSTIVE_MAX_VARS {
            return Err(Error::InvalidParameter(format!(
                "exhaustive enumeration needs 1 <= n_vars <= {EXHAUSTIVE_MAX_VARS}"
            )));
        }
        let n_samples = 1usize << n_vars;
        let mut signs = Vec::with_capacity(n_samples * n_vars);
        for s in 0..n_samples {
            for i in 0..n_vars {
                signs.push(if (s >> i) & 1 == 1 { -1 } else { 1 });
            }
        }
        Ok(Self {
            seed: 0,
            n_vars,
            n_samples,
            exhaustive: true,
            signs,
        })
    }

    /// Exhaustive when `n_vars <= 16`, otherwise Monte Carlo.
    pub fn auto(seed: u64, n_vars: usize, n_samples: usize) -> Result<Self> {
        if n_vars <= EXHAUSTIVE_MAX_VARS {
            Self::exhaustive(n_vars)
        } else {
            Self::monte_carlo(seed, n_vars, n_samples)
        }
    }

    pub fn row(&self, s: usize) -> &[i8] {
        &self.signs[s * self.n_vars..(s + 1) * self.n_vars]
    }

    pub fn signs(&self) -> &[i8] {
        &self.signs
    }

    pub fn column_means(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.n_vars];
        for s in 0..self.n_samples {
            for (o, &v) in out.iter_mut().zip(self.row(s)) {
                *o += v as f64;
            }
        }
        out.iter().map(|v| v / self.n_samples as f64).collect()
    }

    /// Sample mean and standard error of `f(row)`, reduced in a fixed order.
    pub fn expectation<F>(&self, f: F) -> Estimate
    where
        F: Fn(&[i8]) -> f64 + Sync + Send,
    {
        let vals = par_map(self.n_samples, |s| f(self.row(s)));
        Estimate::from_values(&vals, self.exhaustive)
    }
}

fn sign_row(seed: u64, sample: u64, n_vars: usize) -> Vec<i8> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(sample);
    let mut out = Vec::with_capacity(n_vars);
    let mut word = 0u32;
    for i in 0..n_vars {
        if i % 32 == 0 {
            word = rng.next_u32();
        }
        out.push(if (word >> (i % 32)) & 1 == 1 { -1 } else { 1 });
    }
    out
}

/// Mean with its standard error (zero for exhaustive enumeration).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub se: f64,
    pub samples: usize,
    pub exact: bool,
}

impl Estimate {
    pub fn from_values(vals: &[f64], exact: bool) -> Self {
        let n = vals.len();
        let mean = pairwise_sum(vals) / n as f64;
        let se = if exact || n < 2 {
            0.0
        } else {
            let dev: Vec<f64> = vals.iter().map(|v| (v - mean).powi(2)).collect();
            (pairwise_sum(&dev) / (n - 1) as f64 / n as f64).sqrt()
        };
        Self {
            mean,
            se,
            samples: n,
            exact,
        }
    }
}

/// `𝔼|Σ a_i r_i|^p` over the batch.
pub fn khintchine_moment(a: &[f64], p: f64, batch: &RademacherBatch) -> Result<Estimate> {
    if a.is_empty() {
        return Err(Error::InvalidParameter("empty coefficient sequence".into()));
    }
    if !(p > 0.0) {
        return Err(Error::Exponent(format!("p = {p} must be positive")));
    }
    if a.iter().map(|v| v * v).sum::<f64>() <= 0.0 {
        return Err(Error::InvalidParameter("coefficients must not all vanish".into()));
    }
    if a.len() != batch.n_vars {
        return Err(Error::Shape(format!(
            "{} coefficients for a batch of {} variables",
            a.len(),
            batch.n_vars
        )));
    }
    Ok(batch.expectation(|r| {
        let s: f64 = a.iter().zip(r).map(|(x, &e)| x * e as f64).sum();
        s.abs().powf(p)
    }))
}

/// Upper Khintchine constant for `p >= 2`: `2^{p/2} Γ((p+1)/2) / √π`.
pub fn khintchine_upper_constant(p: f64) -> f64 {
    if p <= 2.0 {
        1.0
    } else {
        2f64.powf(p / 2.0) * gamma((p + 1.0) / 2.0) / std::f64::consts::PI.sqrt()
    }
}

/// Direct and sign-mixture evaluations of `‖f‖_{B^α_{p,p}} / ‖f‖_{H^α_p}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingReport {
    pub alpha: f64,
    pub p: f64,
    pub m: usize,
    pub besov: f64,
    pub sobolev: f64,
    pub direct_ratio: f64,
    /// `𝔼_r ‖Σ r_c f_c‖_B^p` and `𝔼_r ‖Σ r_c f_c‖_H^p`.
    pub mixture_besov: Option<Estimate>,
    pub mixture_sobolev: Option<Estimate>,
    /// `(𝔼 B / 𝔼 H)^{1/p}`.
    pub chain_ratio: f64,
    /// Khintchine bracket `[1, C₂]` for both mixture moments relative to the direct p-powers.
    pub khintchine_upper: f64,
    pub chain_consistent: bool,
}

/// Embedding ratio for an `m`-component field; `batch` supplies the signs when `m > 1`.
pub fn embedding_check(
    f: &SpatialField,
    alpha: f64,
    p: f64,
    batch: Option<&RademacherBatch>,
) -> Result<EmbeddingReport> {
    if !(p >= 2.0) {
        return Err(Error::Hypothesis(format!("embedding requires p >= 2, got {p}")));
    }
    let part = DyadicPartition::new(f.grid().clone())?;
    let besov_pow = besov_p_power(&part, f, alpha, p)?;
    let sob = sobolev_norm(f, alpha, p)?;
    let besov = besov_pow.powf(1.0 / p);
    let direct = besov / sob;
    let m = f.m();
    let c2 = khintchine_upper_constant(p);
    if m == 1 {
        return Ok(EmbeddingReport {
            alpha,
            p,
            m,
            besov,
            sobolev: sob,
            direct_ratio: direct,
            mixture_besov: None,
            mixture_sobolev: None,
            chain_ratio: direct,
            khintchine_upper: c2,
            chain_consistent: true,
        });
    }
    let batch = batch.ok_or_else(|| Error::InvalidParameter("sign batch required for m > 1".into()))?;
    if batch.n_vars != m {
        return Err(Error::Shape(format!("batch has {} variables, field has {m} components", batch.n_vars)));
    }
    let np = f.grid().points();
    let mix = |r: &[i8]| -> Result<SpatialField> {
        let mut v = vec![Complex64::new(0.0, 0.0); np];
        for (c, &s) in r.iter().enumerate() {
            for (o, x) in v.iter_mut().zip(f.component(c)) {
                *o += x * s as f64;
            }
        }
        SpatialField::from_values(f.grid().clone(), 1, Domain::Physical, v)
    };
    let pairs: Vec<Result<(f64, f64)>> = par_map(batch.n_samples, |s| {
        let g = mix(batch.row(s))?;
        Ok((besov_p_power(&part, &g, alpha, p)?, sobolev_norm(&g, alpha, p)?.powf(p)))
    });
    let pairs: Vec<(f64, f64)> = pairs.into_iter().collect::<Result<_>>()?;
    let b: Vec<f64> = pairs.iter().map(|v| v.0).collect();
    let h: Vec<f64> = pairs.iter().map(|v| v.1).collect();
    let eb = Estimate::from_values(&b, batch.exhaustive);
    let eh = Estimate::from_values(&h, batch.exhaustive);
    let within = |e: &Estimate, direct_pow: f64| {
        let slack = 3.0 * e.se + 1e-10 * direct_pow;
        e.mean >= direct_pow - slack && e.mean <= c2 * direct_pow + slack
    };
    let consistent = within(&eb, besov_pow) && within(&eh, sob.powf(p));
    Ok(EmbeddingReport {
        alpha,
        p,
        m,
        besov,
        sobolev: sob,
        direct_ratio: direct,
        chain_ratio: (eb.mean / eh.mean).powf(1.0 / p),
        mixture_besov: Some(eb),
        mixture_sobolev: Some(eh),
        khintchine_upper: c2,
        chain_consistent: consistent,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::SpectralGrid;
    use std::sync::Arc;

    #[test]
    fn exhaustive_values() {
        let b = RademacherBatch::exhaustive(2).unwrap();
        assert_eq!(khintchine_moment(&[1.0, 1.0], 4.0, &b).unwrap().mean, 8.0);
        let b1 = RademacherBatch::exhaustive(1).unwrap();
        assert_eq!(khintchine_moment(&[1.0], 3.7, &b1).unwrap().mean, 1.0);
        let b3 = RademacherBatch::exhaustive(3).unwrap();
        // E(a·r)^4 = 3(Σa²)² - 2Σa⁴
        let a = [1.0, 2.0, -0.5];
        let s2: f64 = a.iter().map(|v: &f64| v * v).sum();
        let s4: f64 = a.iter().map(|v: &f64| v.powi(4)).sum();
        let e = khintchine_moment(&a, 4.0, &b3).unwrap();
        assert!((e.mean - (3.0 * s2 * s2 - 2.0 * s4)).abs() < 1e-12);
        assert_eq!(e.se, 0.0);
    }

    #[test]
    fn monte_carlo_second_moment() {
        let b = RademacherBatch::monte_carlo(7, 20, 10_000).unwrap();
        let a: Vec<f64> = (0..20).map(|i| 1.0 / (1.0 + i as f64)).collect();
        let s2: f64 = a.iter().map(|v| v * v).sum();
        let e = khintchine_moment(&a, 2.0, &b).unwrap();
        assert!((e.mean - s2).abs() < 3.0 * e.se);
        let tol = 4.0 / (b.n_samples as f64).sqrt();
        assert!(b.column_means().iter().all(|m| m.abs() < tol));
        assert!(b.signs().iter().all(|&s| s == 1 || s == -1));
        assert_eq!(b, RademacherBatch::monte_carlo(7, 20, 10_000).unwrap());
    }

    #[test]
    fn errors() {
        let b = RademacherBatch::exhaustive(2).unwrap();
        assert!(khintchine_moment(&[], 2.0, &b).is_err());
        assert!(khintchine_moment(&[0.0, 0.0], 2.0, &b).is_err());
        assert!(khintchine_moment(&[1.0, 1.0], 0.0, &b).is_err());
        assert!(RademacherBatch::exhaustive(17).is_err());
    }

    fn field(m: usize) -> SpatialField {
        let g = Arc::new(SpectralGrid::uniform(1, 128, 8.0, 0.0, 1.0, 2).unwrap());
        let mut vals = Vec::new();
        for c in 0..m {
            for j in 0..128 {
                let x = g.position(j)[0];
                let k = std::f64::consts::PI / 8.0;
                vals.push(Complex64::new(
                    (3.0 * k * x + c as f64).cos() + 0.4 * (11.0 * k * x).sin() * (c as f64 + 1.0),
                    0.2 * (5.0 * k * x).cos(),
                ));
            }
        }
        SpatialField::from_values(g, m, Domain::Physical, vals).unwrap()
    }

    #[test]
    fn embedding_paths() {
        let f1 = field(1);
        let r1 = embedding_check(&f1, 1.0, 2.0, None).unwrap();
        assert!(r1.mixture_besov.is_none());
        // one populated component of three gives the scalar ratio
        let g = f1.grid().clone();
        let mut vals = vec![Complex64::new(0.0, 0.0); 3 * 128];
        vals[128..256].copy_from_slice(f1.values());
        let f3 = SpatialField::from_values(g, 3, Domain::Physical, vals).unwrap();
        let b = RademacherBatch::exhaustive(3).unwrap();
        let r3 = embedding_check(&f3, 1.0, 2.0, Some(&b)).unwrap();
        assert!((r3.direct_ratio - r1.direct_ratio).abs() < 1e-12);
        assert!((r3.chain_ratio - r1.direct_ratio).abs() < 1e-12);
        // p = 2: the mixture moments equal the direct squares exactly
        let f = field(3);
        let r = embedding_check(&f, 0.0, 2.0, Some(&b)).unwrap();
        assert!((r.chain_ratio - r.direct_ratio).abs() < 1e-10);
        assert!(r.chain_consistent);
        let r4 = embedding_check(&f, 1.0, 4.0, Some(&b)).unwrap();
        assert!(r4.chain_consistent);
        assert!(embedding_check(&f, 0.0, 1.5, Some(&b)).is_err());
    }
}
