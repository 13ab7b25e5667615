//! Symbols `ψ(t, ξ)` of pseudo-differential operators, the power family
//! `-(κ + k(t))|ξ|^γ`, and sampled checks of the symbol-class conditions.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A symbol evaluable for `t >= 0`; the library extends it to `t < 0` by clamping.
///
/// This is the extension point for user symbols: implement it and wrap the value
/// in a [`SymbolSpec`].
pub trait Symbol: Send + Sync {
    /// `ψ(t, ξ)`; `xi` holds exactly `d` entries.
    fn eval(&self, t: f64, xi: &[f64]) -> Complex64;

    /// `true` when `ψ` does not depend on `t`; enables exact time integration.
    fn time_independent(&self) -> bool {
        false
    }

    fn describe(&self) -> String {
        "user symbol".to_string()
    }
}

/// Which conditions a symbol is declared to satisfy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SymbolClass {
    /// (S1) + (S2)
    S,
    /// (S1) + (S3); implies differentiability in `t`
    ST,
}

/// A symbol together with its structural constants `κ, μ, γ, N`.
#[derive(Clone)]
pub struct SymbolSpec {
    symbol: Arc<dyn Symbol>,
    pub kappa: f64,
    pub mu: f64,
    pub gamma: f64,
    pub n_derivs: usize,
    pub class: SymbolClass,
}

impl fmt::Debug for SymbolSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SymbolSpec")
            .field("symbol", &self.symbol.describe())
            .field("kappa", &self.kappa)
            .field("mu", &self.mu)
            .field("gamma", &self.gamma)
            .field("n_derivs", &self.n_derivs)
            .field("class", &self.class)
            .finish()
    }
}

impl SymbolSpec {
    pub fn new(
        symbol: Arc<dyn Symbol>,
        kappa: f64,
        mu: f64,
        gamma: f64,
        n_derivs: usize,
        class: SymbolClass,
    ) -> Result<Self> {
        for (name, v) in [("kappa", kappa), ("mu", mu), ("gamma", gamma)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
            }
        }
        if n_derivs == 0 {
            return Err(Error::InvalidParameter("N must be at least floor(d/2) + 1".into()));
        }
        Ok(Self {
            symbol,
            kappa,
            mu,
            gamma,
            n_derivs,
            class,
        })
    }

    /// Checks `N >= floor(d/2) + 1` for the intended dimension.
    pub fn validate_for_dim(&self, d: usize) -> Result<()> {
        if self.n_derivs < d / 2 + 1 {
            return Err(Error::InvalidParameter(format!(
                "N = {} is below floor(d/2) + 1 = {}",
                self.n_derivs,
                d / 2 + 1
            )));
        }
        Ok(())
    }

    /// Symbol `-(κ + k(t))|ξ|^γ` with `μ` taken from the one-dimensional
    /// derivative constants of `|ξ|^γ` up to order `n_derivs`.
    pub fn power(kappa: f64, gamma: f64, modulation: TimeModulation, n_derivs: usize) -> Result<Self> {
        if !(modulation.bound() >= 0.0) {
            return Err(Error::InvalidParameter("time modulation must be nonnegative".into()));
        }
        let sym = PowerSymbol {
            kappa,
            gamma,
            modulation,
        };
        let k_const = (0..=n_derivs)
            .map(|a| falling_factorial(gamma, a).abs())
            .fold(1.0, f64::max);
        let mu = (kappa + modulation.bound()).max(modulation.derivative_bound()) * k_const;
        Self::new(Arc::new(sym), kappa, mu, gamma, n_derivs, SymbolClass::ST)
    }

    /// Time-independent `-κ|ξ|^γ` (the fractional heat generator when `κ = 1`).
    pub fn fractional_heat(kappa: f64, gamma: f64) -> Result<Self> {
        Self::power(kappa, gamma, TimeModulation::None, default_n_derivs(gamma, 1))
    }

    /// Wrap a closure as a symbol with user-declared constants.
    #[allow(clippy::too_many_arguments)]
    pub fn from_fn<F>(
        f: F,
        time_independent: bool,
        kappa: f64,
        mu: f64,
        gamma: f64,
        n_derivs: usize,
        class: SymbolClass,
        name: &str,
    ) -> Result<Self>
    where
        F: Fn(f64, &[f64]) -> Complex64 + Send + Sync + 'static,
    {
        let sym = FnSymbol {
            f: Box::new(f),
            time_independent,
            name: name.to_string(),
        };
        Self::new(Arc::new(sym), kappa, mu, gamma, n_derivs, class)
    }

    pub fn with_mu(mut self, mu: f64) -> Self {
        self.mu = mu;
        self
    }

    pub fn with_class(mut self, class: SymbolClass) -> Self {
        self.class = class;
        self
    }

    pub fn symbol(&self) -> &Arc<dyn Symbol> {
        &self.symbol
    }

    pub fn time_independent(&self) -> bool {
        self.symbol.time_independent()
    }

    pub fn describe(&self) -> String {
        self.symbol.describe()
    }

    /// Evaluate with the `t < 0` extension `ψ(max(t, 0), ξ)`; no finiteness check.
    #[inline]
    pub fn eval_raw(&self, t: f64, xi: &[f64]) -> Complex64 {
        self.symbol.eval(t.max(0.0), xi)
    }
}

/// `N` large enough for the kernel-decay hypothesis `N > d + 2 + ⌊γ₁⌋ + ⌊γ₂⌋`
/// when paired with a symbol of similar order.
pub fn default_n_derivs(gamma: f64, d: usize) -> usize {
    d + 3 + 2 * gamma.floor() as usize
}

/// `ψ(t, ξ)` with the negative-time extension; non-finite values are errors.
pub fn eval_symbol(spec: &SymbolSpec, t: f64, xi: &[f64]) -> Result<Complex64> {
    let v = spec.eval_raw(t, xi);
    if v.re.is_finite() && v.im.is_finite() {
        Ok(v)
    } else {
        Err(Error::SymbolEval {
            t,
            reason: format!("non-finite value {v} at xi = {xi:?}"),
        })
    }
}

/// Bounded nonnegative modulation `k(t)` of the power symbol.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum TimeModulation {
    None,
    /// `amplitude · e^{-rate t}`
    Exponential { amplitude: f64, rate: f64 },
    /// `amplitude · (1 + sin(ω t)) / 2`
    Oscillating { amplitude: f64, omega: f64 },
}

impl TimeModulation {
    pub fn value(&self, t: f64) -> f64 {
        match *self {
            TimeModulation::None => 0.0,
            TimeModulation::Exponential { amplitude, rate } => amplitude * (-rate * t).exp(),
            TimeModulation::Oscillating { amplitude, omega } => amplitude * 0.5 * (1.0 + (omega * t).sin()),
        }
    }

    pub fn derivative(&self, t: f64) -> f64 {
        match *self {
            TimeModulation::None => 0.0,
            TimeModulation::Exponential { amplitude, rate } => -amplitude * rate * (-rate * t).exp(),
            TimeModulation::Oscillating { amplitude, omega } => amplitude * 0.5 * omega * (omega * t).cos(),
        }
    }

    /// `M₁ >= sup |k|` on `t >= 0`.
    pub fn bound(&self) -> f64 {
        match *self {
            TimeModulation::None => 0.0,
            TimeModulation::Exponential { amplitude, .. } => amplitude,
            TimeModulation::Oscillating { amplitude, .. } => amplitude,
        }
    }

    /// `M₂ >= sup |k'|` on `t >= 0`.
    pub fn derivative_bound(&self) -> f64 {
        match *self {
            TimeModulation::None => 0.0,
            TimeModulation::Exponential { amplitude, rate } => (amplitude * rate).abs(),
            TimeModulation::Oscillating { amplitude, omega } => (0.5 * amplitude * omega).abs(),
        }
    }
}

/// `ψ(t, ξ) = -(κ + k(t))|ξ|^γ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerSymbol {
    pub kappa: f64,
    pub gamma: f64,
    pub modulation: TimeModulation,
}

impl Symbol for PowerSymbol {
    fn eval(&self, t: f64, xi: &[f64]) -> Complex64 {
        let r2: f64 = xi.iter().map(|v| v * v).sum();
        let r = if r2 == 0.0 { 0.0 } else { r2.powf(0.5 * self.gamma) };
        Complex64::new(-(self.kappa + self.modulation.value(t)) * r, 0.0)
    }

    fn time_independent(&self) -> bool {
        matches!(self.modulation, TimeModulation::None)
    }

    fn describe(&self) -> String {
        format!(
            "power(kappa={}, gamma={}, k={:?})",
            self.kappa, self.gamma, self.modulation
        )
    }
}

struct FnSymbol {
    f: Box<dyn Fn(f64, &[f64]) -> Complex64 + Send + Sync>,
    time_independent: bool,
    name: String,
}

impl Symbol for FnSymbol {
    fn eval(&self, t: f64, xi: &[f64]) -> Complex64 {
        (self.f)(t, xi)
    }

    fn time_independent(&self) -> bool {
        self.time_independent
    }

    fn describe(&self) -> String {
        self.name.clone()
    }
}

fn falling_factorial(g: f64, k: usize) -> f64 {
    (0..k).map(|i| g - i as f64).product()
}

/// Built-in symbols by name, as selected from the command line or a config file.
///
/// | name | symbol | parameters (defaults) |
/// |------|--------|-----------------------|
/// | `power` | `-(κ + a e^{-r t})|ξ|^γ` | `kappa` (1), `gamma` (2), `k_amp` (0), `k_rate` (1), `n_derivs` |
/// | `power_osc` | `-(κ + a(1+sin ωt)/2)|ξ|^γ` | `kappa`, `gamma`, `k_amp`, `k_omega` |
/// | `unstable` | `+κ|ξ|^γ` | `kappa`, `gamma` |
/// | `oscillating` | `-|ξ|²(2 + sin(t|ξ|²))` | none |
pub fn builtin_symbol(name: &str, params: &BTreeMap<String, f64>, d: usize) -> Result<SymbolSpec> {
    let get = |k: &str, default: f64| params.get(k).copied().unwrap_or(default);
    let kappa = get("kappa", 1.0);
    let gamma = get("gamma", 2.0);
    let n_derivs = params
        .get("n_derivs")
        .map(|v| *v as usize)
        .unwrap_or_else(|| default_n_derivs(gamma, d));
    let spec = match name {
        "power" => {
            let amp = get("k_amp", 0.0);
            let modulation = if amp == 0.0 {
                TimeModulation::None
            } else {
                TimeModulation::Exponential {
                    amplitude: amp,
                    rate: get("k_rate", 1.0),
                }
            };
            SymbolSpec::power(kappa, gamma, modulation, n_derivs)?
        }
        "power_osc" => SymbolSpec::power(
            kappa,
            gamma,
            TimeModulation::Oscillating {
                amplitude: get("k_amp", 0.5),
                omega: get("k_omega", 1.0),
            },
            n_derivs,
        )?,
        "unstable" => SymbolSpec::from_fn(
            move |_, xi: &[f64]| {
                let r2: f64 = xi.iter().map(|v| v * v).sum();
                Complex64::new(kappa * r2.powf(0.5 * gamma), 0.0)
            },
            true,
            kappa,
            kappa * 2f64.max(gamma),
            gamma,
            n_derivs,
            SymbolClass::S,
            "unstable",
        )?,
        "oscillating" => SymbolSpec::from_fn(
            |t, xi: &[f64]| {
                let r2: f64 = xi.iter().map(|v| v * v).sum();
                Complex64::new(-r2 * (2.0 + (t * r2).sin()), 0.0)
            },
            false,
            1.0,
            8.0,
            2.0,
            n_derivs.min(2).max(1),
            SymbolClass::ST,
            "oscillating",
        )?,
        other => return Err(Error::InvalidParameter(format!("unknown symbol '{other}'"))),
    };
    spec.validate_for_dim(d)?;
    Ok(spec)
}

/// Sample points `(t, ξ)` for the class checker.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSpec {
    pub points: Vec<(f64, Vec<f64>)>,
    /// Seed for the random multi-index subset used when `N > 4`.
    pub seed: u64,
}

impl SampleSpec {
    /// Times `times` crossed with log-spaced `|ξ|` in `[lo, hi]` along a fixed
    /// direction off the coordinate hyperplanes.
    pub fn log_spaced(d: usize, times: &[f64], lo: f64, hi: f64, count: usize) -> Self {
        let dir: Vec<f64> = match d {
            1 => vec![1.0],
            _ => vec![0.8, 0.6],
        };
        let mut points = Vec::new();
        for &t in times {
            for i in 0..count {
                let frac = if count == 1 { 0.0 } else { i as f64 / (count - 1) as f64 };
                let r = lo * (hi / lo).powf(frac);
                points.push((t, dir.iter().map(|c| c * r).collect()));
            }
        }
        Self { points, seed: 0 }
    }
}

/// Worst-case sampled bound of one derivative `∂_t^m ∂_ξ^α ψ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DerivativeCheck {
    pub alpha: Vec<usize>,
    pub time_order: usize,
    /// `max |∂ψ| / |ξ|^{γ - |α|}` over the samples.
    pub empirical_constant: f64,
    /// `empirical_constant / μ`; the condition holds when `<= 1 + tol`.
    pub margin: f64,
    /// `|ξ|` of the worst sample.
    pub worst_xi: f64,
}

/// Outcome of [`check_symbol_class`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassCheckReport {
    /// `max (Re ψ + κ|ξ|^γ)`; (S1) needs `<= tol`.
    pub s1_margin: f64,
    pub s2: Vec<DerivativeCheck>,
    /// Present when the symbol is declared in class `S_T`.
    pub s3: Option<Vec<DerivativeCheck>>,
    pub tolerance: f64,
    /// `true` when only a random subset of multi-indices was checked.
    pub sampled_multi_indices: bool,
    pub passes_s1: bool,
    pub passes_s2: bool,
    pub passes_s3: Option<bool>,
}

impl ClassCheckReport {
    pub fn passes(&self) -> bool {
        self.passes_s1 && self.passes_s2 && self.passes_s3.unwrap_or(true)
    }
}

fn multi_indices(d: usize, max_order: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    match d {
        1 => {
            for a in 0..=max_order {
                out.push(vec![a]);
            }
        }
        _ => {
            for total in 0..=max_order {
                for a in 0..=total {
                    out.push(vec![a, total - a]);
                }
            }
        }
    }
    out
}

/// Central-difference step for a derivative of the given order.
///
/// Orders up to two use `1e-4 · scale`; higher orders grow the step as
/// `ε^{1/(k+2)}` so roundoff stays below the truncation error.
fn fd_step(order: usize, scale: f64) -> f64 {
    let base = if order <= 2 {
        1e-4
    } else {
        f64::EPSILON.powf(1.0 / (order as f64 + 2.0))
    };
    base * scale
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// `∂^α` by tensor-product central differences with steps `h`.
fn mixed_difference(f: &dyn Fn(&[f64]) -> Complex64, xi: &[f64], alpha: &[usize], h: &[f64]) -> Complex64 {
    let d = xi.len();
    let mut total = Complex64::new(0.0, 0.0);
    // stencil offsets per axis: (k/2 - i) h for i = 0..=k
    let mut idx = vec![0usize; d];
    loop {
        let mut coeff = 1.0;
        let mut point = xi.to_vec();
        for ax in 0..d {
            let k = alpha[ax];
            let i = idx[ax];
            coeff *= if i % 2 == 0 { 1.0 } else { -1.0 } * binomial(k, i) / h[ax].powi(k as i32);
            point[ax] += (k as f64 / 2.0 - i as f64) * h[ax];
        }
        total += f(&point) * coeff;
        // advance the multi-counter
        let mut ax = 0;
        loop {
            if ax == d {
                return total;
            }
            idx[ax] += 1;
            if idx[ax] <= alpha[ax] {
                break;
            }
            idx[ax] = 0;
            ax += 1;
        }
    }
}

fn derivative_estimate(
    f: &dyn Fn(&[f64]) -> Complex64,
    xi: &[f64],
    alpha: &[usize],
) -> Result<Complex64> {
    let order: usize = alpha.iter().sum();
    if order == 0 {
        return Ok(f(xi));
    }
    let norm = xi.iter().map(|v| v * v).sum::<f64>().sqrt();
    let h: Vec<f64> = xi
        .iter()
        .zip(alpha)
        .map(|(&c, &a)| {
            let h = fd_step(a.max(1), norm.max(1.0));
            // stay well inside the orthant so |ξ|^{γ-|α|} stays smooth on the stencil
            h.min(0.05 * c.abs() / (a.max(1) as f64))
        })
        .collect();
    if h.iter().any(|v| !(v.is_finite() && *v > 1e-300)) {
        return Err(Error::InvalidParameter("finite-difference step underflow".into()));
    }
    let half: Vec<f64> = h.iter().map(|v| v * 0.5).collect();
    let coarse = mixed_difference(f, xi, alpha, &h);
    let fine = mixed_difference(f, xi, alpha, &half);
    Ok((fine * 4.0 - coarse) / 3.0)
}

/// Sampled check of (S1), (S2) and, for class `S_T`, (S3).
///
/// Derivatives come from Richardson-extrapolated central differences. For
/// `N <= 4` every multi-index is checked; beyond that a seeded random subset of
/// 16 multi-indices (always including the pure ones) is used and flagged.
pub fn check_symbol_class(spec: &SymbolSpec, samples: &SampleSpec, tol: f64) -> Result<ClassCheckReport> {
    if samples.points.is_empty() {
        return Err(Error::InvalidParameter("no sample points".into()));
    }
    let d = samples.points[0].1.len();
    for (t, xi) in &samples.points {
        if xi.len() != d {
            return Err(Error::Shape("sample points of mixed dimension".into()));
        }
        if xi.iter().any(|v| *v == 0.0) {
            return Err(Error::InvalidParameter(format!(
                "sample xi = {xi:?} touches a coordinate hyperplane"
            )));
        }
        if !t.is_finite() {
            return Err(Error::InvalidParameter("non-finite sample time".into()));
        }
    }
    let mut alphas = multi_indices(d, spec.n_derivs);
    let sampled = spec.n_derivs > 4 && alphas.len() > 16;
    if sampled {
        let mut rng = ChaCha8Rng::seed_from_u64(samples.seed);
        let (pure, mixed): (Vec<_>, Vec<_>) = alphas
            .into_iter()
            .partition(|a| a.iter().filter(|v| **v > 0).count() <= 1);
        let mut chosen = pure;
        let mut pool = mixed;
        while chosen.len() < 16 && !pool.is_empty() {
            let i = rng.random_range(0..pool.len());
            chosen.push(pool.swap_remove(i));
        }
        alphas = chosen;
    }

    let mut s1_margin = f64::NEG_INFINITY;
    let mut s2: Vec<DerivativeCheck> = alphas
        .iter()
        .map(|a| DerivativeCheck {
            alpha: a.clone(),
            time_order: 0,
            empirical_constant: 0.0,
            margin: 0.0,
            worst_xi: 0.0,
        })
        .collect();
    let mut s3 = s2.clone();
    for c in s3.iter_mut() {
        c.time_order = 1;
    }

    for (t, xi) in &samples.points {
        let t = *t;
        let norm = xi.iter().map(|v| v * v).sum::<f64>().sqrt();
        let val = eval_symbol(spec, t, xi)?;
        s1_margin = s1_margin.max(val.re + spec.kappa * norm.powf(spec.gamma));

        let at_t = |x: &[f64]| spec.eval_raw(t, x);
        for check in s2.iter_mut() {
            let order: usize = check.alpha.iter().sum();
            let der = derivative_estimate(&at_t, xi, &check.alpha)?;
            let ratio = der.norm() / norm.powf(spec.gamma - order as f64);
            if !ratio.is_finite() {
                return Err(Error::SymbolEval {
                    t,
                    reason: "non-finite derivative estimate".into(),
                });
            }
            if ratio > check.empirical_constant {
                check.empirical_constant = ratio;
                check.worst_xi = norm;
            }
        }

        if spec.class == SymbolClass::ST {
            let ht = 1e-4 * t.abs().max(1.0);
            if ht < 1e-300 {
                return Err(Error::InvalidParameter("finite-difference step underflow".into()));
            }
            for check in s3.iter_mut() {
                let order: usize = check.alpha.iter().sum();
                let space = |tt: f64| -> Result<Complex64> {
                    let g = |x: &[f64]| spec.eval_raw(tt, x);
                    derivative_estimate(&g, xi, &check.alpha)
                };
                // one-sided three-point rule near t = 0 where the extension kinks
                let dt = if t - ht >= 0.0 {
                    let d1 = (space(t + ht)? - space(t - ht)?) / (2.0 * ht);
                    let d2 = (space(t + 0.5 * ht)? - space(t - 0.5 * ht)?) / ht;
                    (d2 * 4.0 - d1) / 3.0
                } else {
                    (space(t + ht)? * 4.0 - space(t + 2.0 * ht)? - space(t)? * 3.0) / (2.0 * ht)
                };
                let ratio = dt.norm() / norm.powf(spec.gamma - order as f64);
                if ratio > check.empirical_constant {
                    check.empirical_constant = ratio;
                    check.worst_xi = norm;
                }
            }
        }
    }

    for c in s2.iter_mut().chain(s3.iter_mut()) {
        c.margin = c.empirical_constant / spec.mu;
    }
    let passes_s1 = s1_margin <= tol;
    let passes_s2 = s2.iter().all(|c| c.margin <= 1.0 + tol);
    let (s3, passes_s3) = if spec.class == SymbolClass::ST {
        // (S3) with m = 0 coincides with (S2)
        let ok = passes_s2 && s3.iter().all(|c| c.margin <= 1.0 + tol);
        (Some(s3), Some(ok))
    } else {
        (None, None)
    };
    Ok(ClassCheckReport {
        s1_margin,
        s2,
        s3,
        tolerance: tol,
        sampled_multi_indices: sampled,
        passes_s1,
        passes_s2,
        passes_s3,
    })
}
