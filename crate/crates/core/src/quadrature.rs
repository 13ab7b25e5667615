//! Gauss-Legendre rules and the graded panel rule used for weakly singular
//! time weights `tau^(beta - 1)`.

use std::f64::consts::PI;

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// Newton iteration on `P_n` started from the Chebyshev-like guess.
    pub fn new(order: usize) -> Self {
        assert!(order >= 1, "Gauss-Legendre order must be positive");
        let n = order;
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n.div_ceil(2) {
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let step = p / d;
                x -= step;
                if step.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            dp = if d != 0.0 { d } else { dp };
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    /// Integrate `f` over `[lo, hi]`.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, lo: f64, hi: f64, mut f: F) -> f64 {
        let half = 0.5 * (hi - lo);
        let mid = 0.5 * (hi + lo);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(mid + half * x))
            .sum::<f64>()
            * half
    }

    /// Nodes and weights mapped onto `[lo, hi]`.
    pub fn mapped(&self, lo: f64, hi: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (hi - lo);
        let mid = 0.5 * (hi + lo);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&x, &w)| (mid + half * x, w * half))
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { 1.0 } else { p1 };
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p, d)
}

/// Parameters of the graded rule for `∫_0^T tau^(beta-1) F(tau) dtau`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct GradedRule {
    /// Gauss-Legendre order per panel.
    pub order: usize,
    /// Ratio between consecutive panel endpoints (0 < ratio < 1).
    pub ratio: f64,
    /// Panels are refined until `c_max * tau_min <= resolution`.
    pub resolution: f64,
}

impl Default for GradedRule {
    fn default() -> Self {
        Self {
            order: 8,
            ratio: 0.5,
            resolution: 1e-4,
        }
    }
}

impl GradedRule {
    /// Half the ratio and double the order; used by refinement checks.
    pub fn refined(&self) -> Self {
        Self {
            order: self.order * 2,
            ratio: self.ratio.sqrt(),
            resolution: self.resolution * 0.1,
        }
    }

    /// Quadrature nodes `tau_k` and weights `w_k` (weight already included) with
    /// `Σ w_k F(tau_k) ≈ ∫_0^T tau^(beta-1) F(tau) dtau`.
    ///
    /// `stiffness` is the largest decay rate of `F` (e.g. `q κ |ξ_max|^γ`). Away
    /// from zero the panels are geometric in `tau` with the weight folded into
    /// Gauss-Legendre; the innermost panel `[0, tau_min]` uses the substitution
    /// `u = tau^beta`, which turns the weight into the constant `1/beta`.
    pub fn nodes(&self, total: f64, beta: f64, stiffness: f64) -> Vec<(f64, f64)> {
        self.nodes_with_breaks(total, beta, stiffness, &[])
    }

    /// As [`nodes`](Self::nodes) with extra panel breaks (e.g. where `F` has kinks).
    pub fn nodes_with_breaks(&self, total: f64, beta: f64, stiffness: f64, breaks: &[f64]) -> Vec<(f64, f64)> {
        assert!(total > 0.0 && beta > 0.0);
        let gl = GaussLegendre::new(self.order);
        let stiff = stiffness.max(1.0 / total);
        let mut tau_min = (self.resolution / stiff).min(total);
        for &b in breaks {
            if b > 0.0 && b < tau_min {
                tau_min = b;
            }
        }
        let mut ends = vec![total];
        let mut hi = total;
        while hi > tau_min * (1.0 + 1e-12) {
            hi = (hi * self.ratio).max(tau_min);
            ends.push(hi);
        }
        for &b in breaks {
            if b > tau_min * (1.0 + 1e-12) && b < total * (1.0 - 1e-12) {
                ends.push(b);
            }
        }
        ends.sort_by(|a, b| b.partial_cmp(a).unwrap());
        ends.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * total);
        let mut out = Vec::with_capacity((ends.len() + 1) * self.order);
        for w in ends.windows(2) {
            for (tau, wt) in gl.mapped(w[1], w[0]) {
                out.push((tau, wt * tau.powf(beta - 1.0)));
            }
        }
        // ∫_0^hi tau^(beta-1) F dtau = (1/beta) ∫_0^(hi^beta) F(u^(1/beta)) du
        let u_max = ends.last().copied().unwrap_or(total).powf(beta);
        for (u, w) in gl.mapped(0.0, u_max) {
            out.push((u.powf(1.0 / beta), w / beta));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_is_exact_for_polynomials() {
        let gl = GaussLegendre::new(8);
        // degree 15 is integrated exactly
        let val = gl.integrate(-1.0, 2.0, |x| x.powi(15) + 3.0 * x.powi(4));
        let exact = (2f64.powi(16) - 1.0) / 16.0 + 3.0 * (32.0 + 1.0) / 5.0;
        assert!((val - exact).abs() < 1e-10 * exact.abs());
        assert!((gl.weights.iter().sum::<f64>() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn odd_orders_have_center_node() {
        let gl = GaussLegendre::new(5);
        assert_eq!(gl.nodes[2], 0.0);
        let val = gl.integrate(0.0, 1.0, |x| x.powi(9));
        assert!((val - 0.1).abs() < 1e-14);
    }

    #[test]
    fn graded_rule_integrates_singular_weight() {
        // ∫_0^1 tau^(beta-1) e^{-c tau} = c^{-beta} γ(beta, c)
        for &beta in &[0.5, 1.0, 2.0, 4.0 / 3.0] {
            for &c in &[0.0, 1.0, 100.0, 3.0e4] {
                let rule = GradedRule::default();
                let val: f64 = rule
                    .nodes(1.0, beta, c)
                    .into_iter()
                    .map(|(tau, w)| w * (-c * tau).exp())
                    .sum();
                let exact = if c == 0.0 {
                    1.0 / beta
                } else {
                    statrs::function::gamma::gamma_lr(beta, c)
                        * statrs::function::gamma::gamma(beta)
                        * c.powf(-beta)
                };
                assert!(
                    ((val - exact) / exact).abs() < 1e-9,
                    "beta {beta} c {c}: {val} vs {exact}"
                );
            }
        }
    }
}
