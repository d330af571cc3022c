//! Gauss–Legendre quadrature on the symmetric interval [-π, π].

use std::f64::consts::PI;

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("quadrature rule needs at least one node, got {0}")]
pub struct QuadratureError(pub usize);

/// Nodes and weights of an `n`-point Gauss–Legendre rule mapped affinely onto
/// [-π, π]. Exact for polynomials of degree up to `2n - 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn gauss_legendre(n: usize) -> Result<Self, QuadratureError> {
        if n == 0 {
            return Err(QuadratureError(n));
        }
        let (ref_nodes, ref_weights) = legendre_nodes_weights(n);
        Ok(Self {
            nodes: ref_nodes.iter().map(|t| PI * t).collect(),
            weights: ref_weights.iter().map(|w| PI * w).collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }

    /// Quadrature of pre-sampled values `samples[i] = f(nodes[i])`.
    pub fn integrate_samples(&self, samples: &[f64]) -> f64 {
        debug_assert_eq!(samples.len(), self.nodes.len());
        samples.iter().zip(&self.weights).map(|(s, w)| s * w).sum()
    }

    /// Quadrature of the product of two sampled functions.
    pub fn inner_product(&self, a: &[f64], b: &[f64]) -> f64 {
        debug_assert_eq!(a.len(), self.nodes.len());
        debug_assert_eq!(b.len(), self.nodes.len());
        a.iter().zip(b).zip(&self.weights).map(|((p, q), w)| p * q * w).sum()
    }
}

/// Roots of `P_n` on [-1, 1] and their weights, by Newton iteration on the
/// three-term recurrence.
fn legendre_nodes_weights(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        // Tricomi-style initial guess, descending from the largest root
        let mut t = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, t);
            dp = d;
            let step = p / d;
            t -= step;
            if step.abs() <= 1e-16 * t.abs().max(1.0) {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, t);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - t * t) * dp * dp);
        nodes[i] = -t;
        nodes[n - 1 - i] = t;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, t: f64) -> (f64, f64) {
    let mut p_prev = 1.0;
    let mut p = t;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let next = ((2.0 * kf - 1.0) * t * p - (kf - 1.0) * p_prev) / kf;
        p_prev = p;
        p = next;
    }
    let nf = n as f64;
    let d = nf * (t * p - p_prev) / (t * t - 1.0);
    (p, d)
}
