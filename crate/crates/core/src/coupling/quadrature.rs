//! Gauss–Legendre rules and a panel-adaptive integrator.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            // Tricomi initial guess, then Newton on P_n.
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 1.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            dp = if d.is_finite() { d } else { dp };
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

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Nodes and weights mapped onto `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(x, w)| (mid + half * x, half * w))
    }

    pub fn integrate<F>(&self, a: f64, b: f64, mut f: F) -> Complex64
    where
        F: FnMut(f64) -> Complex64,
    {
        self.mapped(a, b).map(|(x, w)| f(x) * w).sum()
    }

    pub fn integrate_real<F>(&self, a: f64, b: f64, mut f: F) -> f64
    where
        F: FnMut(f64) -> f64,
    {
        self.mapped(a, b).map(|(x, w)| f(x) * w).sum()
    }
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Adaptive bisection over the panels delimited by `breakpoints` (sorted, at
/// least two). Each panel is accepted when a `coarse`-node and a `fine`-node
/// rule agree within the local share of the tolerance.
pub struct AdaptiveIntegrator {
    coarse: GaussLegendre,
    fine: GaussLegendre,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_depth: usize,
}

impl Default for AdaptiveIntegrator {
    fn default() -> Self {
        Self {
            coarse: GaussLegendre::new(12),
            fine: GaussLegendre::new(24),
            rel_tol: 1e-10,
            abs_tol: 1e-300,
            max_depth: 48,
        }
    }
}

impl AdaptiveIntegrator {
    pub fn integrate<F>(&self, breakpoints: &[f64], f: F) -> Result<Complex64>
    where
        F: Fn(f64) -> Complex64,
    {
        assert!(breakpoints.len() >= 2);
        // Coarse global scale estimate for the relative tolerance.
        let scale: f64 = breakpoints
            .windows(2)
            .map(|w| self.fine.integrate(w[0], w[1], &f).norm())
            .sum::<f64>()
            .max(self.abs_tol);
        let width = breakpoints[breakpoints.len() - 1] - breakpoints[0];
        let mut total = Complex64::new(0.0, 0.0);
        let mut error = 0.0;
        let mut failed = false;
        let mut stack: Vec<(f64, f64, usize)> = breakpoints
            .windows(2)
            .rev()
            .filter(|w| w[1] > w[0])
            .map(|w| (w[0], w[1], 0))
            .collect();
        while let Some((a, b, depth)) = stack.pop() {
            let c = self.coarse.integrate(a, b, &f);
            let fv = self.fine.integrate(a, b, &f);
            let err = (fv - c).norm();
            let allowed = (self.rel_tol * scale * (b - a) / width).max(self.abs_tol);
            if err <= allowed {
                total += fv;
                error += err;
            } else if depth >= self.max_depth {
                total += fv;
                error += err;
                failed = true;
            } else {
                let m = 0.5 * (a + b);
                stack.push((m, b, depth + 1));
                stack.push((a, m, depth + 1));
            }
        }
        if failed || !total.re.is_finite() || !total.im.is_finite() {
            return Err(Error::Quadrature {
                estimate: total,
                error_bound: error,
            });
        }
        Ok(total)
    }
}
