//! The heat semigroup `P_t` generated by `(alpha/2) Laplacian`.
//!
//! `P_t f(x) = E f(x + sqrt(alpha t) xi)` with `xi` standard Gaussian. Gaussian
//! and constant families are propagated in closed form. Integrands with
//! compactly supported pieces are integrated against the Gaussian kernel with
//! panelled Gauss-Legendre rules split at the support faces, since Hermite
//! rules converge poorly on functions that are flat outside a ball. Analytic
//! integrands use tensor Gauss-Hermite. Quadrature is limited to dimension 3.

use crate::error::{check_dim, param, Error, Result};
use crate::measure::{AtomicMeasure, Rectangle};
use crate::quadrature::{GaussHermite, GaussLegendre};
use crate::stats::normal_interval;
use crate::testfn::{make_gaussian_bump, Family, TestFunction};

pub const DEFAULT_QUAD_NODES: usize = 64;
pub const MAX_QUAD_DIM: usize = 3;
/// Half-width of the kernel window, in standard deviations, used with the
/// support-based rule.
const KERNEL_WINDOW: f64 = 10.0;

/// Where a quadrature integrand lives.
#[derive(Debug, Clone, Copy)]
pub enum Domain<'a> {
    /// Smooth on all of `R^d`: Gauss-Hermite.
    Whole,
    /// Vanishes outside the box: Gauss-Legendre on the box clipped to the
    /// kernel window.
    Support(&'a Rectangle),
    /// Has compactly supported components: panelled Gauss-Legendre on the
    /// kernel window, split at every face of the listed boxes.
    Pieces(&'a [Rectangle]),
}

impl Domain<'_> {
    fn check(&self, d: usize) -> Result<()> {
        match self {
            Domain::Whole => Ok(()),
            Domain::Support(b) => check_dim(d, b.dim()),
            Domain::Pieces(parts) => parts.iter().try_for_each(|b| check_dim(d, b.dim())),
        }
    }
}

/// Owned form of [`Domain`] derived from a test function.
#[derive(Debug, Clone)]
pub enum OwnedDomain {
    Whole,
    Support(Rectangle),
    Pieces(Vec<Rectangle>),
}

impl OwnedDomain {
    pub fn as_ref(&self) -> Domain<'_> {
        match self {
            OwnedDomain::Whole => Domain::Whole,
            OwnedDomain::Support(b) => Domain::Support(b),
            OwnedDomain::Pieces(p) => Domain::Pieces(p),
        }
    }
}

impl Domain<'_> {
    pub fn of(phi: &TestFunction) -> OwnedDomain {
        if let Some(b) = phi.support_box() {
            return OwnedDomain::Support(b);
        }
        let parts = phi.compact_parts();
        if parts.is_empty() {
            OwnedDomain::Whole
        } else {
            OwnedDomain::Pieces(parts)
        }
    }
}

#[derive(Debug, Clone)]
pub struct HeatEvaluator {
    alpha: f64,
    dim: usize,
    rule: GaussHermite,
    legendre: GaussLegendre,
}

fn check_time(t: f64) -> Result<()> {
    if t >= 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(param(format!("time must be non-negative, got {t}")))
    }
}

impl HeatEvaluator {
    pub fn new(alpha: f64, dim: usize, quad_nodes: usize) -> Result<Self> {
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(param(format!("alpha must be positive, got {alpha}")));
        }
        if dim == 0 {
            return Err(param("dimension must be positive"));
        }
        if quad_nodes < 8 {
            return Err(param(format!("need at least 8 quadrature nodes, got {quad_nodes}")));
        }
        Ok(Self {
            alpha,
            dim,
            rule: GaussHermite::new(quad_nodes)?,
            legendre: GaussLegendre::new(quad_nodes)?,
        })
    }

    pub fn with_default_nodes(alpha: f64, dim: usize) -> Result<Self> {
        Self::new(alpha, dim, DEFAULT_QUAD_NODES)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn quad_nodes(&self) -> usize {
        self.rule.len()
    }

    /// Same alpha and dimension, different rule size.
    pub fn with_nodes(&self, quad_nodes: usize) -> Result<Self> {
        Self::new(self.alpha, self.dim, quad_nodes)
    }

    /// Standard deviation `sqrt(alpha t)` of each coordinate at time `t`.
    pub fn spread(&self, t: f64) -> f64 {
        (self.alpha * t).sqrt()
    }

    /// Per-axis nodes and weights for `E g(x + sqrt(alpha t) xi)`; `None`
    /// means the integrand vanishes on the kernel window.
    fn axis_rules(&self, t: f64, x: &[f64], domain: &Domain<'_>) -> Option<Vec<(Vec<f64>, Vec<f64>)>> {
        let s = self.spread(t);
        let norm = 1.0 / (s * (2.0 * std::f64::consts::PI).sqrt());
        let mut rules = Vec::with_capacity(self.dim);
        for k in 0..self.dim {
            let window = (x[k] - KERNEL_WINDOW * s, x[k] + KERNEL_WINDOW * s);
            let segments: Vec<(f64, f64)> = match domain {
                Domain::Whole => {
                    let pts = self.rule.nodes().iter().map(|z| x[k] + s * z).collect();
                    rules.push((pts, self.rule.weights().to_vec()));
                    continue;
                }
                Domain::Support(b) => {
                    let lo = b.lower()[k].max(window.0);
                    let hi = b.upper()[k].min(window.1);
                    if lo >= hi {
                        return None;
                    }
                    vec![(lo, hi)]
                }
                Domain::Pieces(parts) => {
                    let mut cuts = vec![window.0, window.1];
                    for p in parts.iter() {
                        for c in [p.lower()[k], p.upper()[k]] {
                            if c > window.0 && c < window.1 {
                                cuts.push(c);
                            }
                        }
                    }
                    cuts.sort_by(f64::total_cmp);
                    cuts.dedup();
                    cuts.windows(2).map(|w| (w[0], w[1])).collect()
                }
            };
            let mut pts = Vec::with_capacity(segments.len() * self.legendre.len());
            let mut wts = Vec::with_capacity(pts.capacity());
            for (lo, hi) in segments {
                let (mid, half) = (0.5 * (lo + hi), 0.5 * (hi - lo));
                for (z, w) in self.legendre.nodes().iter().zip(self.legendre.weights()) {
                    let y = mid + half * z;
                    let u = (y - x[k]) / s;
                    pts.push(y);
                    wts.push(half * w * norm * (-0.5 * u * u).exp());
                }
            }
            rules.push((pts, wts));
        }
        Some(rules)
    }

    /// Tensor-product expectation of a vector-valued integrand writing
    /// `acc.len()` outputs.
    fn quadrature_vec(
        &self,
        t: f64,
        x: &[f64],
        domain: &Domain<'_>,
        acc: &mut [f64],
        mut g: impl FnMut(&[f64], &mut [f64]),
    ) -> Result<()> {
        let d = self.dim;
        if d > MAX_QUAD_DIM {
            return Err(Error::UnsupportedDimension(d));
        }
        acc.fill(0.0);
        let Some(rules) = self.axis_rules(t, x, domain) else {
            return Ok(());
        };
        let n: Vec<usize> = rules.iter().map(|r| r.0.len()).collect();
        let mut y = x.to_vec();
        let mut val = vec![0.0; acc.len()];
        let mut idx = vec![0usize; d];
        let total: usize = n.iter().product();
        for _ in 0..total {
            let mut w = 1.0;
            for k in 0..d {
                y[k] = rules[k].0[idx[k]];
                w *= rules[k].1[idx[k]];
            }
            if w != 0.0 {
                g(&y, &mut val);
                for (a, v) in acc.iter_mut().zip(&val) {
                    *a += w * v;
                }
            }
            for k in 0..d {
                idx[k] += 1;
                if idx[k] < n[k] {
                    break;
                }
                idx[k] = 0;
            }
        }
        Ok(())
    }

    /// `E f(x + sqrt(alpha t) xi)` by tensor Gauss-Hermite quadrature.
    pub fn expect(&self, f: impl Fn(&[f64]) -> f64, t: f64, x: &[f64]) -> Result<f64> {
        self.expect_in(f, &Domain::Whole, t, x)
    }

    /// As [`expect`](Self::expect) with an explicit integration domain.
    pub fn expect_in(&self, f: impl Fn(&[f64]) -> f64, domain: &Domain<'_>, t: f64, x: &[f64]) -> Result<f64> {
        check_time(t)?;
        check_dim(self.dim, x.len())?;
        domain.check(self.dim)?;
        if t == 0.0 {
            return Ok(f(x));
        }
        let mut acc = [0.0];
        self.quadrature_vec(t, x, domain, &mut acc, |y, out| out[0] = f(y))?;
        Ok(acc[0])
    }

    /// Closed-form image of a Gaussian bump under `P_t`.
    fn propagate_gaussian(&self, center: &[f64], width: f64, amplitude: f64, t: f64) -> TestFunction {
        let var = width * width + self.alpha * t;
        let shrink = (width * width / var).powf(self.dim as f64 / 2.0);
        make_gaussian_bump(self.dim, center, var.sqrt(), amplitude * shrink)
            .expect("propagated Gaussian parameters are valid")
    }

    /// `P_t phi(x)`; exact for Gaussian and constant families, `phi(x)` at `t = 0`.
    pub fn apply(&self, phi: &TestFunction, t: f64, x: &[f64]) -> Result<f64> {
        check_time(t)?;
        check_dim(self.dim, phi.dim())?;
        check_dim(self.dim, x.len())?;
        if t == 0.0 {
            return Ok(phi.eval(x));
        }
        match &phi.family {
            Family::Constant(c) => Ok(*c),
            Family::GaussianBump {
                center,
                width,
                amplitude,
            } => Ok(self.propagate_gaussian(center, *width, *amplitude, t).eval(x)),
            Family::Combination(parts) => {
                let mut total = 0.0;
                for (w, f) in parts {
                    total += w * self.apply(f, t, x)?;
                }
                Ok(total)
            }
            _ => self.expect_in(|y| phi.eval(y), &Domain::of(phi).as_ref(), t, x),
        }
    }

    /// `grad P_t phi(x) = P_t grad phi(x)`.
    pub fn apply_grad(&self, phi: &TestFunction, t: f64, x: &[f64]) -> Result<Vec<f64>> {
        check_time(t)?;
        check_dim(self.dim, phi.dim())?;
        check_dim(self.dim, x.len())?;
        if t == 0.0 {
            return Ok(phi.grad(x));
        }
        match &phi.family {
            Family::Constant(_) => Ok(vec![0.0; self.dim]),
            Family::GaussianBump {
                center,
                width,
                amplitude,
            } => Ok(self.propagate_gaussian(center, *width, *amplitude, t).grad(x)),
            Family::Combination(parts) => {
                let mut total = vec![0.0; self.dim];
                for (w, f) in parts {
                    for (a, v) in total.iter_mut().zip(self.apply_grad(f, t, x)?) {
                        *a += w * v;
                    }
                }
                Ok(total)
            }
            _ => {
                let mut acc = vec![0.0; self.dim];
                let domain = Domain::of(phi);
                self.quadrature_vec(t, x, &domain.as_ref(), &mut acc, |y, out| phi.grad_into(y, out))?;
                Ok(acc)
            }
        }
    }

    /// `Laplacian P_t phi(x) = P_t Laplacian phi(x)`.
    pub fn apply_laplacian(&self, phi: &TestFunction, t: f64, x: &[f64]) -> Result<f64> {
        check_time(t)?;
        check_dim(self.dim, phi.dim())?;
        check_dim(self.dim, x.len())?;
        if t == 0.0 {
            return Ok(phi.laplacian(x));
        }
        match &phi.family {
            Family::Constant(_) => Ok(0.0),
            Family::GaussianBump {
                center,
                width,
                amplitude,
            } => Ok(self.propagate_gaussian(center, *width, *amplitude, t).laplacian(x)),
            Family::Combination(parts) => {
                let mut total = 0.0;
                for (w, f) in parts {
                    total += w * self.apply_laplacian(f, t, x)?;
                }
                Ok(total)
            }
            _ => self.expect_in(|y| phi.laplacian(y), &Domain::of(phi).as_ref(), t, x),
        }
    }

    /// Value, gradient and Laplacian of `P_t phi` at `x` from one quadrature sweep.
    pub fn apply_jet(&self, phi: &TestFunction, t: f64, x: &[f64]) -> Result<(f64, Vec<f64>, f64)> {
        check_time(t)?;
        check_dim(self.dim, phi.dim())?;
        check_dim(self.dim, x.len())?;
        let d = self.dim;
        let closed_form = matches!(
            phi.family,
            Family::Constant(_) | Family::GaussianBump { .. } | Family::Combination(_)
        );
        if t == 0.0 || closed_form {
            return Ok((
                self.apply(phi, t, x)?,
                self.apply_grad(phi, t, x)?,
                self.apply_laplacian(phi, t, x)?,
            ));
        }
        let mut acc = vec![0.0; d + 2];
        let domain = Domain::of(phi);
        self.quadrature_vec(t, x, &domain.as_ref(), &mut acc, |y, out| {
            out[0] = phi.eval(y);
            phi.grad_into(y, &mut out[1..=d]);
            out[d + 1] = phi.laplacian(y);
        })?;
        Ok((acc[0], acc[1..=d].to_vec(), acc[d + 1]))
    }

    /// `P_t 1_A(x)`: product of normal probabilities of each side of the box.
    pub fn indicator(&self, a: &Rectangle, t: f64, x: &[f64]) -> Result<f64> {
        if !(t > 0.0) || !t.is_finite() {
            return Err(param(format!("indicator smoothing needs t > 0, got {t}")));
        }
        check_dim(self.dim, a.dim())?;
        check_dim(self.dim, x.len())?;
        let s = self.spread(t);
        Ok(a.lower()
            .iter()
            .zip(a.upper())
            .zip(x)
            .map(|((lo, hi), xk)| normal_interval((lo - xk) / s, (hi - xk) / s))
            .product())
    }

    /// `<nu, P_t phi>`.
    pub fn pair(&self, nu: &AtomicMeasure, phi: &TestFunction, t: f64) -> Result<f64> {
        check_dim(self.dim, nu.dim())?;
        let mut total = 0.0;
        for atom in nu.atoms() {
            total += self.apply(phi, t, atom)?;
        }
        Ok(total / nu.alpha())
    }
}

/// `heat_apply` in free-function form.
pub fn heat_apply(h: &HeatEvaluator, phi: &TestFunction, t: f64, x: &[f64]) -> Result<f64> {
    h.apply(phi, t, x)
}

pub fn heat_indicator(h: &HeatEvaluator, a: &Rectangle, t: f64, x: &[f64]) -> Result<f64> {
    h.indicator(a, t, x)
}

pub fn heat_pair(h: &HeatEvaluator, nu: &AtomicMeasure, phi: &TestFunction, t: f64) -> Result<f64> {
    h.pair(nu, phi, t)
}
