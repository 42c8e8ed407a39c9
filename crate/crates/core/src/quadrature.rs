//! Gauss-Legendre rules and an adaptive composite integrator.
//!
//! Callers are expected to remove endpoint singularities by a change of
//! variables before integrating; the rules here assume a smooth integrand.

use std::f64::consts::PI;
use std::sync::OnceLock;

/// A fixed-degree Gauss-Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    /// Builds the rule by Newton iteration on the Legendre recurrence.
    ///
    /// Nodes are returned in ascending order.
    pub fn new(degree: usize) -> Self {
        assert!(degree >= 1, "Gauss-Legendre degree must be positive");
        let n = degree;
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n.div_ceil(2) {
            // Chebyshev-like initial guess for the i-th largest root.
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 1.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() <= 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            if d != 0.0 {
                dp = d;
            }
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

    pub fn degree(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Integrates `f` over `[lo, hi]` with a single panel.
    #[inline]
    pub fn integrate<F: Fn(f64) -> f64>(&self, lo: f64, hi: f64, f: F) -> f64 {
        let half = 0.5 * (hi - lo);
        let mid = 0.5 * (hi + lo);
        let mut acc = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc += w * f(mid + half * x);
        }
        acc * half
    }

    /// Integrates over `[lo, hi]` split into `panels` equal panels.
    pub fn integrate_composite<F: Fn(f64) -> f64>(
        &self,
        lo: f64,
        hi: f64,
        panels: usize,
        f: F,
    ) -> f64 {
        let panels = panels.max(1);
        let width = (hi - lo) / panels as f64;
        (0..panels)
            .map(|k| {
                let a = lo + width * k as f64;
                let b = if k + 1 == panels { hi } else { a + width };
                self.integrate(a, b, &f)
            })
            .sum()
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

/// The 16-point rule shared by the law and distance computations.
pub fn gauss_legendre_16() -> &'static GaussLegendre {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(16))
}

const MAX_DEPTH: u32 = 48;

/// Adaptive composite Gauss-Legendre integration.
///
/// Each panel is compared against the sum over its two halves and split
/// until the two estimates differ by less than the panel's share of `tol`
/// (absolute). Panels therefore concentrate wherever the integrand is steep.
pub fn integrate_adaptive<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, tol: f64) -> f64 {
    if hi == lo {
        return 0.0;
    }
    let rule = gauss_legendre_16();
    let total_width = (hi - lo).abs();
    let mut stack: Vec<(f64, f64, f64, u32)> = vec![(lo, hi, rule.integrate(lo, hi, &f), 0)];
    let mut result = 0.0;
    while let Some((a, b, whole, depth)) = stack.pop() {
        let mid = 0.5 * (a + b);
        let left = rule.integrate(a, mid, &f);
        let right = rule.integrate(mid, b, &f);
        let refined = left + right;
        let share = tol * ((b - a).abs() / total_width).max(f64::EPSILON);
        if (refined - whole).abs() <= share || depth >= MAX_DEPTH {
            result += refined;
        } else {
            stack.push((mid, b, right, depth + 1));
            stack.push((a, mid, left, depth + 1));
        }
    }
    result
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_to_two() {
        for degree in [1, 2, 5, 8, 16, 31] {
            let rule = GaussLegendre::new(degree);
            let s: f64 = rule.weights().iter().sum();
            assert!((s - 2.0).abs() < 1e-14, "degree {degree}: {s}");
        }
    }

    #[test]
    fn exact_for_polynomials_up_to_degree_2n_minus_1() {
        let rule = GaussLegendre::new(16);
        for p in 0..32u32 {
            let got = rule.integrate(0.0, 1.0, |x| x.powi(p as i32));
            let want = 1.0 / (p as f64 + 1.0);
            assert!((got - want).abs() < 1e-14, "x^{p}: {got} vs {want}");
        }
    }

    #[test]
    fn nodes_are_sorted_and_symmetric() {
        let rule = GaussLegendre::new(9);
        let nodes = rule.nodes();
        assert!(nodes.windows(2).all(|w| w[0] < w[1]));
        for i in 0..nodes.len() {
            assert!((nodes[i] + nodes[nodes.len() - 1 - i]).abs() < 1e-15);
        }
    }

    #[test]
    fn adaptive_handles_steep_integrand() {
        // ∫_0^1 eps/(eps^2 + x^2) dx = atan(1/eps)
        let eps = 1e-4;
        let got = integrate_adaptive(|x| eps / (eps * eps + x * x), 0.0, 1.0, 1e-12);
        let want = (1.0 / eps).atan();
        assert!((got - want).abs() < 1e-10, "{got} vs {want}");
    }

    #[test]
    fn composite_matches_single_panel_for_smooth_functions() {
        let rule = gauss_legendre_16();
        let a = rule.integrate(0.0, 2.0, f64::exp);
        let b = rule.integrate_composite(0.0, 2.0, 7, f64::exp);
        assert!((a - b).abs() < 1e-13);
        assert!((a - (2f64.exp() - 1.0)).abs() < 1e-13);
    }
}
