//! Quadrature rules: Gauss-Legendre on an interval and the periodic
//! midpoint rule for 1-periodic integrands.
//!
//! Gauss-Legendre nodes are computed once per order by Newton iteration on
//! the Legendre recurrence and cached. Order 64 is the default for chord
//! integrals; the periodic rule defaults to 512 points per axis, which is
//! exact for the trigonometric polynomials appearing in the oracles.

use once_cell::sync::Lazy;
use std::collections::HashMap;
use std::sync::{Arc, RwLock};

/// Default order for Gauss-Legendre chord integrals.
pub const GL_DEFAULT_ORDER: usize = 64;
/// Default points per axis for periodic tensor quadrature.
pub const PERIODIC_DEFAULT_POINTS: usize = 512;

/// Nodes and weights on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

static GL_CACHE: Lazy<RwLock<HashMap<usize, Arc<GaussRule>>>> =
    Lazy::new(|| RwLock::new(HashMap::new()));

/// Legendre polynomial value and derivative at `x` by the three-term recurrence.
fn legendre_pair(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Gauss-Legendre rule of the given order, cached.
pub fn gauss_legendre(order: usize) -> Arc<GaussRule> {
    assert!(order >= 2, "Gauss-Legendre order must be at least 2");
    if let Some(rule) = GL_CACHE.read().unwrap().get(&order) {
        return Arc::clone(rule);
    }
    let n = order;
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        // Tricomi initial guess, then Newton.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre_pair(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre_pair(n, x);
        nodes[i] = x;
        weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    nodes.reverse();
    weights.reverse();
    let rule = Arc::new(GaussRule { nodes, weights });
    GL_CACHE.write().unwrap().insert(order, Arc::clone(&rule));
    rule
}

/// ∫_a^b f(x) dx by Gauss-Legendre of the given order.
pub fn gl_integrate<F: Fn(f64) -> f64>(a: f64, b: f64, order: usize, f: F) -> f64 {
    let rule = gauss_legendre(order);
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let mut acc = 0.0;
    for (&x, &w) in rule.nodes.iter().zip(rule.weights.iter()) {
        acc += w * f(mid + half * x);
    }
    acc * half
}

/// Midpoint grid `(i + 1/2)/n` on [0, 1]; for 1-periodic integrands the
/// midpoint rule coincides with the trapezoid rule and integrates
/// trigonometric polynomials of degree < n exactly.
pub fn periodic_points(n: usize) -> Vec<f64> {
    (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect()
}

/// Integral over one period of a 1-periodic integrand.
pub fn integrate_periodic_1d<F: Fn(f64) -> f64>(n: usize, f: F) -> f64 {
    let pts = periodic_points(n);
    pts.iter().map(|&x| f(x)).sum::<f64>() / n as f64
}

/// Integral over the unit square of a 1-periodic integrand, tensor midpoint rule.
pub fn integrate_periodic_2d<F: Fn(f64, f64) -> f64>(n: usize, f: F) -> f64 {
    let pts = periodic_points(n);
    let mut acc = 0.0;
    for &x in &pts {
        for &y in &pts {
            acc += f(x, y);
        }
    }
    acc / (n * n) as f64
}
