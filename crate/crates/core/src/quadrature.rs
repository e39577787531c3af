//! Gauss–Hermite quadrature for expectations of smooth functions of a
//! standard normal variable.

use nalgebra::DMatrix;

/// Nodes and weights for the weight function `exp(-t^2)` on the real line.
///
/// Built with the Golub–Welsch algorithm: the Hermite recurrence gives a
/// symmetric tridiagonal companion matrix whose eigenvalues are the nodes and
/// whose first eigenvector components give the weights.
#[derive(Debug, Clone)]
pub struct GaussHermite {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

/// Node count used for the shipped link-coefficient integrals. The integrands
/// are smooth and sub-Gaussian; 64 nodes leave the quadrature error far below
/// the 1e-9 tolerances asserted in tests, for scale parameters up to ~100.
pub const DEFAULT_NODES: usize = 64;

impl GaussHermite {
    pub fn new(deg: usize) -> Self {
        assert!(deg >= 1, "quadrature needs at least one node");
        let mut companion = DMatrix::<f64>::zeros(deg, deg);
        for k in 0..deg - 1 {
            let off = ((k + 1) as f64 * 0.5).sqrt();
            companion[(k, k + 1)] = off;
            companion[(k + 1, k)] = off;
        }
        let eigen = companion.symmetric_eigen();
        let mut pairs: Vec<(f64, f64)> = eigen
            .eigenvalues
            .iter()
            .enumerate()
            .map(|(i, &node)| {
                let first = eigen.eigenvectors[(0, i)];
                (node, first * first * std::f64::consts::PI.sqrt())
            })
            .collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        GaussHermite {
            nodes: pairs.iter().map(|p| p.0).collect(),
            weights: pairs.iter().map(|p| p.1).collect(),
        }
    }

    /// Integral of `exp(-t^2) f(t)` over the real line.
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&t, &w)| w * f(t))
            .sum()
    }

    /// `E f(g)` for `g ~ N(0, 1)`.
    pub fn expect_standard_normal(&self, f: impl Fn(f64) -> f64) -> f64 {
        let scale = std::f64::consts::SQRT_2;
        self.integrate(|t| f(scale * t)) / std::f64::consts::PI.sqrt()
    }
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`, also via Golub–Welsch.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(deg: usize) -> Self {
        assert!(deg >= 1, "quadrature needs at least one node");
        let mut companion = DMatrix::<f64>::zeros(deg, deg);
        for k in 1..deg {
            let kf = k as f64;
            let off = kf / (4.0 * kf * kf - 1.0).sqrt();
            companion[(k - 1, k)] = off;
            companion[(k, k - 1)] = off;
        }
        let eigen = companion.symmetric_eigen();
        let mut pairs: Vec<(f64, f64)> = eigen
            .eigenvalues
            .iter()
            .enumerate()
            .map(|(i, &node)| {
                let first = eigen.eigenvectors[(0, i)];
                (node, 2.0 * first * first)
            })
            .collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        GaussLegendre {
            nodes: pairs.iter().map(|p| p.0).collect(),
            weights: pairs.iter().map(|p| p.1).collect(),
        }
    }

    /// Integral of `f` over `[a, b]`.
    pub fn integrate(&self, a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
        let mid = 0.5 * (a + b);
        let half = 0.5 * (b - a);
        half * self
            .nodes
            .iter()
            .zip(&self.weights)
            .map(|(&t, &w)| w * f(mid + half * t))
            .sum::<f64>()
    }
}
