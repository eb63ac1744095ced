//! Gauss-Legendre rules and composite panel integration.

use std::f64::consts::PI;
use std::sync::{Mutex, OnceLock};

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    /// `n`-point rule on [-1, 1] by Newton iteration on P_n.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n.div_ceil(2) {
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
        Self { nodes, weights }
    }

    /// Cached rule.
    pub fn cached(n: usize) -> std::sync::Arc<GaussLegendre> {
        static CACHE: OnceLock<Mutex<Vec<(usize, std::sync::Arc<GaussLegendre>)>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(Vec::new()));
        let mut guard = cache.lock().expect("quadrature cache poisoned");
        if let Some((_, r)) = guard.iter().find(|(k, _)| *k == n) {
            return r.clone();
        }
        let r = std::sync::Arc::new(GaussLegendre::new(n));
        guard.push((n, r.clone()));
        r
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Nodes and weights mapped onto `[a, b]` split into `panels` equal pieces.
    pub fn composite(&self, a: f64, b: f64, panels: usize) -> (Vec<f64>, Vec<f64>) {
        let h = (b - a) / panels as f64;
        let mut xs = Vec::with_capacity(panels * self.len());
        let mut ws = Vec::with_capacity(panels * self.len());
        for k in 0..panels {
            let lo = a + k as f64 * h;
            for (x, w) in self.nodes.iter().zip(&self.weights) {
                xs.push(lo + 0.5 * h * (x + 1.0));
                ws.push(0.5 * h * w);
            }
        }
        (xs, ws)
    }

    pub fn integrate(&self, a: f64, b: f64, panels: usize, f: impl Fn(f64) -> f64) -> f64 {
        let (xs, ws) = self.composite(a, b, panels);
        xs.iter().zip(&ws).map(|(&x, &w)| w * f(x)).sum()
    }

    pub fn integrate_c(&self, a: f64, b: f64, panels: usize, f: impl Fn(f64) -> C64) -> C64 {
        let (xs, ws) = self.composite(a, b, panels);
        xs.iter().zip(&ws).map(|(&x, &w)| f(x) * w).sum()
    }
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Composite Gauss-Legendre with panel doubling until two successive estimates agree.
pub fn integrate_adaptive(
    a: f64,
    b: f64,
    tol: f64,
    f: impl Fn(f64) -> C64,
) -> Result<C64> {
    let rule = GaussLegendre::cached(16);
    let mut panels = 1;
    let mut prev = rule.integrate_c(a, b, panels, &f);
    while panels < 1 << 16 {
        panels *= 2;
        let next = rule.integrate_c(a, b, panels, &f);
        if (next - prev).norm() <= tol * next.norm().max(1.0) {
            return Ok(next);
        }
        prev = next;
    }
    let last = rule.integrate_c(a, b, panels, &f);
    Err(Error::Quadrature { prev: prev.norm(), last: last.norm() })
}

/// Tensor-product box rule for two variables.
#[derive(Debug, Clone)]
pub struct BoxRule {
    pub xs: Vec<f64>,
    pub wx: Vec<f64>,
    pub ys: Vec<f64>,
    pub wy: Vec<f64>,
}

impl BoxRule {
    pub fn new(x: (f64, f64), y: (f64, f64), order: usize, panels: usize) -> Self {
        let rule = GaussLegendre::cached(order);
        let (xs, wx) = rule.composite(x.0, x.1, panels);
        let (ys, wy) = rule.composite(y.0, y.1, panels);
        Self { xs, wx, ys, wy }
    }

    pub fn points(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.xs
            .iter()
            .zip(&self.wx)
            .flat_map(move |(&x, &wx)| self.ys.iter().zip(&self.wy).map(move |(&y, &wy)| (x, y, wx * wy)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_exactness() {
        let r = GaussLegendre::new(10);
        let s: f64 = r.weights.iter().sum();
        assert!((s - 2.0).abs() < 1e-14);
        let v = r.integrate(0.0, 1.0, 1, |x| x.powi(19));
        assert!((v - 0.05).abs() < 1e-15);
    }

    #[test]
    fn gaussian_integral() {
        let v = integrate_adaptive(-10.0, 10.0, 1e-13, |x| C64::new((-x * x).exp(), 0.0)).unwrap();
        assert!((v.re - PI.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn oscillatory() {
        let v = integrate_adaptive(0.0, 50.0, 1e-13, |x| C64::new((7.0 * x).cos(), 0.0)).unwrap();
        assert!((v.re - (350.0f64).sin() / 7.0).abs() < 1e-12);
    }
}
