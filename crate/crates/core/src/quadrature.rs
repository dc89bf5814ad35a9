//! Gauss–Legendre rules and a panel-doubling integrator.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        // Tricomi's initial guess, then Newton on P_n
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
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
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
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

/// Composite Gauss–Legendre integrator over `[a, b]`.
#[derive(Clone, Debug)]
pub struct PanelRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl PanelRule {
    pub fn new(order: usize) -> Self {
        let (nodes, weights) = gauss_legendre(order);
        Self { nodes, weights }
    }

    /// Integral with `panels` equal sub-intervals.
    pub fn integrate(&self, f: &dyn Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
        let h = (b - a) / panels as f64;
        let mut total = 0.0;
        for k in 0..panels {
            let mid = a + (k as f64 + 0.5) * h;
            let s: f64 = self.nodes.iter().zip(&self.weights).map(|(x, w)| w * f(mid + 0.5 * h * x)).sum();
            total += 0.5 * h * s;
        }
        total
    }

    /// Double the panel count until two successive estimates agree to
    /// `rel_tol` relative to `scale` (or to the estimate itself when larger).
    /// At the panel limit a change up to `accept` is still returned.
    pub fn integrate_adaptive(
        &self,
        f: &dyn Fn(f64) -> f64,
        (a, b): (f64, f64),
        rel_tol: f64,
        accept: f64,
        scale: f64,
    ) -> Result<f64> {
        const MAX_PANELS: usize = 1 << 12;
        let mut panels = 4;
        let mut prev = self.integrate(f, a, b, panels);
        let mut change = f64::INFINITY;
        while panels < MAX_PANELS {
            panels *= 2;
            let next = self.integrate(f, a, b, panels);
            change = (next - prev).abs() / next.abs().max(scale).max(f64::MIN_POSITIVE);
            if !next.is_finite() {
                return Err(Error::QuadratureFailure(f64::INFINITY));
            }
            if change < rel_tol {
                return Ok(next);
            }
            prev = next;
        }
        if change < accept {
            Ok(prev)
        } else {
            Err(Error::QuadratureFailure(change))
        }
    }
}
