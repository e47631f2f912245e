//! Gauss-Hermite rules for expectations against the standard normal law.

use crate::error::{param, Result};

/// Nodes `z_i` and weights `w_i` with `sum_i w_i f(z_i) ~ E f(xi)`, `xi ~ N(0, 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussHermite {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussHermite {
    /// Nodes are the eigenvalues of the Jacobi matrix of the probabilists'
    /// Hermite recurrence (Sturm bisection, then one Newton polish); weights are
    /// Christoffel numbers from the scaled orthonormal recurrence. Exact for
    /// polynomials of degree `2n - 1`.
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(param("quadrature needs at least one node"));
        }
        // Jacobi matrix: zero diagonal, off-diagonal sqrt(k)
        let count_below = |x: f64| -> usize {
            let mut count = 0;
            let mut q = -x;
            if q < 0.0 {
                count += 1;
            }
            for k in 1..n {
                let prev = if q == 0.0 { f64::EPSILON } else { q };
                q = -x - k as f64 / prev;
                if q < 0.0 {
                    count += 1;
                }
            }
            count
        };
        let bound = 2.0 * ((n as f64) - 1.0).max(1.0).sqrt() + 1.0;
        let mut nodes = Vec::with_capacity(n);
        for i in 0..n {
            let (mut lo, mut hi) = (-bound, bound);
            if let Some(&prev) = nodes.last() {
                lo = prev;
            }
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if count_below(mid) > i {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            nodes.push(0.5 * (lo + hi));
        }
        let mut weights = Vec::with_capacity(n);
        for z in nodes.iter_mut() {
            let (psi_n, psi_nm1, _) = hermite_functions(n, *z);
            if psi_nm1 != 0.0 {
                let step = psi_n / ((n as f64).sqrt() * psi_nm1);
                if step.abs() < 1e-6 * z.abs().max(1.0) {
                    *z -= step;
                }
            }
            let (_, _, sum_sq) = hermite_functions(n, *z);
            let log_w = -0.5 * *z * *z;
            weights.push(if log_w < -700.0 || sum_sq == 0.0 {
                0.0
            } else {
                log_w.exp() / sum_sq
            });
        }
        // symmetrize
        for i in 0..n / 2 {
            let j = n - 1 - i;
            let z = 0.5 * (nodes[j] - nodes[i]);
            nodes[i] = -z;
            nodes[j] = z;
            let w = 0.5 * (weights[i] + weights[j]);
            weights[i] = w;
            weights[j] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Ok(Self { nodes, weights })
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

    /// `E f(xi)` for a one-dimensional standard normal `xi`.
    pub fn expect_1d(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(z, w)| w * f(*z)).sum()
    }
}

/// Scaled orthonormal Hermite values `psi_k = p_k(z) e^{-z^2/4}`: returns
/// `(psi_n, psi_{n-1}, sum_{k<n} psi_k^2)`.
fn hermite_functions(n: usize, z: f64) -> (f64, f64, f64) {
    let mut prev = 0.0;
    let mut cur = (-0.25 * z * z).exp();
    let mut sum_sq = 0.0;
    for k in 0..n {
        sum_sq += cur * cur;
        let next = (z * cur - (k as f64).sqrt() * prev) / ((k + 1) as f64).sqrt();
        prev = cur;
        cur = next;
    }
    (cur, prev, sum_sq)
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(param("quadrature needs at least one node"));
        }
        let nf = n as f64;
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n.div_ceil(2) {
            let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 1.0;
            for _ in 0..100 {
                let (mut p1, mut p2) = (1.0, 0.0);
                for j in 0..n {
                    let p3 = p2;
                    p2 = p1;
                    let jf = j as f64;
                    p1 = ((2.0 * jf + 1.0) * z * p2 - jf * p3) / (jf + 1.0);
                }
                dp = nf * (z * p1 - p2) / (z * z - 1.0);
                let z1 = z;
                z = z1 - p1 / dp;
                if (z - z1).abs() <= 1e-16 {
                    break;
                }
            }
            nodes[i] = -z;
            nodes[n - 1 - i] = z;
            weights[i] = 2.0 / ((1.0 - z * z) * dp * dp);
            weights[n - 1 - i] = weights[i];
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Ok(Self { nodes, weights })
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

    /// `int_a^b f`.
    pub fn integrate(&self, a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
        let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
        half * self
            .nodes
            .iter()
            .zip(&self.weights)
            .map(|(z, w)| w * f(mid + half * z))
            .sum::<f64>()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn double_factorial(k: u32) -> f64 {
        (1..=k).rev().step_by(2).map(|v| v as f64).product()
    }

    #[test]
    fn gaussian_moments_are_exact() {
        for n in [8, 16, 64, 128, 256, 400] {
            let gh = GaussHermite::new(n).unwrap();
            assert_eq!(gh.len(), n);
            let total: f64 = gh.weights().iter().sum();
            assert!((total - 1.0).abs() < 1e-13, "n={n}: {total}");
            for k in 1..(n as u32).min(24) {
                let got = gh.expect_1d(|z| z.powi(2 * k as i32));
                let want = double_factorial(2 * k - 1);
                assert!(((got - want) / want).abs() < 1e-11, "n={n} k={k}: {got} vs {want}");
                assert!(gh.expect_1d(|z| z.powi(2 * k as i32 - 1)).abs() < 1e-9 * want);
            }
        }
    }

    #[test]
    fn nodes_are_sorted_and_symmetric() {
        let gh = GaussHermite::new(9).unwrap();
        assert!(gh.nodes().windows(2).all(|p| p[0] < p[1]));
        for (a, b) in gh.nodes().iter().zip(gh.nodes().iter().rev()) {
            assert!((a + b).abs() < 1e-14);
        }
        assert!(gh.nodes()[4].abs() < 1e-14);
    }

    #[test]
    fn smooth_expectation() {
        // E cos(xi) = e^{-1/2}
        let gh = GaussHermite::new(64).unwrap();
        assert!((gh.expect_1d(f64::cos) - (-0.5f64).exp()).abs() < 1e-14);
    }

    #[test]
    fn legendre_rule() {
        for n in [1, 2, 7, 64, 129] {
            let gl = GaussLegendre::new(n).unwrap();
            assert!((gl.weights().iter().sum::<f64>() - 2.0).abs() < 1e-13);
            assert!(gl.nodes().windows(2).all(|p| p[0] < p[1]));
            for k in 0..(2 * n).min(40) {
                let got = gl.integrate(0.0, 1.0, |x| x.powi(k as i32));
                assert!((got - 1.0 / (k as f64 + 1.0)).abs() < 1e-13, "n={n} k={k}");
            }
        }
        let gl = GaussLegendre::new(64).unwrap();
        assert!((gl.integrate(0.0, std::f64::consts::PI, f64::sin) - 2.0).abs() < 1e-14);
    }
}
