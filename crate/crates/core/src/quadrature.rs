//! Gauss-Hermite type quadrature rules.
//!
//! Both rules come from the Golub-Welsch construction: the nodes are the
//! eigenvalues of the symmetric Jacobi matrix of the weight's monic
//! recurrence, the weights `μ₀·v₀²` from the first eigenvector components.
//! Hermite nodes are then polished by Newton steps on the three-term
//! recurrence so the tail nodes keep full relative accuracy.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.nodes.iter().copied().zip(self.weights.iter().copied())
    }

    /// `Σ w_i f(x_i)`.
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.iter().map(|(x, w)| w * f(x)).sum()
    }
}

fn golub_welsch(offdiag_sq: &[f64], mu0: f64) -> QuadratureRule {
    let n = offdiag_sq.len() + 1;
    let mut jacobi = DMatrix::<f64>::zeros(n, n);
    for (i, b) in offdiag_sq.iter().enumerate() {
        let s = b.sqrt();
        jacobi[(i, i + 1)] = s;
        jacobi[(i + 1, i)] = s;
    }
    let eig = jacobi.symmetric_eigen();
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|j| {
            let v0 = eig.eigenvectors[(0, j)];
            (eig.eigenvalues[j], mu0 * v0 * v0)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (nodes, weights) = pairs.into_iter().unzip();
    QuadratureRule { nodes, weights }
}

/// Orthonormal Hermite recurrence at `x`: returns `(h_n(x), h_{n-1}(x))`
/// for the functions `h_k = H_k / sqrt(2^k k! sqrt(π))`.
fn hermite_orthonormal(n: usize, x: f64) -> (f64, f64) {
    let mut prev = 0.0;
    let mut cur = std::f64::consts::PI.powf(-0.25);
    for k in 1..=n {
        let kf = k as f64;
        let next = x * (2.0 / kf).sqrt() * cur - ((kf - 1.0) / kf).sqrt() * prev;
        prev = cur;
        cur = next;
    }
    (cur, prev)
}

/// Gauss-Hermite rule for `∫ e^{-x²} f(x) dx`.
pub fn gauss_hermite(n: usize) -> Result<QuadratureRule> {
    if n == 0 {
        return Err(Error::InvalidParameter(
            "quadrature needs at least one node".into(),
        ));
    }
    let offdiag: Vec<f64> = (1..n).map(|k| k as f64 / 2.0).collect();
    let mut rule = golub_welsch(&offdiag, std::f64::consts::PI.sqrt());
    // Newton polish with h_n' = sqrt(2n)·h_{n-1}; weights w_i = 1/(n·h_{n-1}(x_i)²).
    let nf = n as f64;
    for (x, w) in rule.nodes.iter_mut().zip(rule.weights.iter_mut()) {
        for _ in 0..3 {
            let (p, q) = hermite_orthonormal(n, *x);
            let dp = (2.0 * nf).sqrt() * q;
            if dp == 0.0 {
                break;
            }
            *x -= p / dp;
        }
        let (_, q) = hermite_orthonormal(n, *x);
        let refined = 1.0 / (nf * q * q);
        if refined.is_finite() && refined > 0.0 {
            *w = refined;
        }
    }
    Ok(rule)
}

/// Rule for `∫ |x|·e^{-x²} f(x) dx` (generalized Hermite weight, `μ = 1/2`).
///
/// The monic recurrence coefficients are `β_k = k/2` for even `k` and
/// `β_k = (k+1)/2` for odd `k`, with total mass `μ₀ = 1`.
pub fn gauss_hermite_abs(n: usize) -> Result<QuadratureRule> {
    if n == 0 {
        return Err(Error::InvalidParameter(
            "quadrature needs at least one node".into(),
        ));
    }
    let offdiag: Vec<f64> = (1..n)
        .map(|k| {
            let kf = k as f64;
            if k % 2 == 1 {
                (kf + 1.0) / 2.0
            } else {
                kf / 2.0
            }
        })
        .collect();
    Ok(golub_welsch(&offdiag, 1.0))
}
