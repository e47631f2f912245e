//! Smooth rapidly decreasing test functions with exact derivatives.
//!
//! Every built-in family exposes its value, gradient, Hessian and Laplacian in
//! closed form. User-supplied functions plug in through [`Smooth`].

use std::fmt;
use std::sync::Arc;

use crate::error::{check_dim, param, Error, Result};
use crate::measure::Rectangle;

/// A smooth scalar field on `R^d` with analytic first and second derivatives.
pub trait Smooth: Send + Sync {
    fn dim(&self) -> usize;
    fn value(&self, x: &[f64]) -> f64;
    fn gradient(&self, x: &[f64], out: &mut [f64]);
    fn laplacian(&self, x: &[f64]) -> f64;

    /// Closed box `(lower, upper)` outside of which the function vanishes, if any.
    fn support(&self) -> Option<Rectangle> {
        None
    }

    /// Support boxes of compactly supported components; quadrature splits its
    /// panels at their faces.
    fn compact_parts(&self) -> Vec<Rectangle> {
        self.support().into_iter().collect()
    }

    /// Row-major `d x d` Hessian. The default differentiates the analytic
    /// gradient by central differences.
    fn hessian(&self, x: &[f64], out: &mut [f64]) {
        let d = self.dim();
        let mut y = x.to_vec();
        let mut gp = vec![0.0; d];
        let mut gm = vec![0.0; d];
        for j in 0..d {
            let h = 1e-5 * (1.0 + x[j].abs());
            y[j] = x[j] + h;
            self.gradient(&y, &mut gp);
            y[j] = x[j] - h;
            self.gradient(&y, &mut gm);
            y[j] = x[j];
            for i in 0..d {
                out[i * d + j] = (gp[i] - gm[i]) / (2.0 * h);
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FamilyTag {
    GaussianBump,
    CompactBump,
    Kappa,
    Constant,
    Custom,
}

#[derive(Clone)]
pub(crate) enum Family {
    GaussianBump {
        center: Vec<f64>,
        width: f64,
        amplitude: f64,
    },
    CompactBump {
        center: Vec<f64>,
        radius: f64,
        amplitude: f64,
    },
    Kappa {
        amplitude: f64,
    },
    Constant(f64),
    /// Finite linear combination `sum c_i f_i`.
    Combination(Vec<(f64, TestFunction)>),
    Custom(Arc<dyn Smooth>),
}

/// A test function `phi: R^d -> R` together with its exact derivatives.
#[derive(Clone)]
pub struct TestFunction {
    dim: usize,
    pub(crate) family: Family,
}

impl fmt::Debug for TestFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = f.debug_struct("TestFunction");
        s.field("dim", &self.dim);
        match &self.family {
            Family::GaussianBump {
                center,
                width,
                amplitude,
            } => s
                .field("family", &"GaussianBump")
                .field("center", center)
                .field("width", width)
                .field("amplitude", amplitude),
            Family::CompactBump {
                center,
                radius,
                amplitude,
            } => s
                .field("family", &"CompactBump")
                .field("center", center)
                .field("radius", radius)
                .field("amplitude", amplitude),
            Family::Kappa { amplitude } => s.field("family", &"Kappa").field("amplitude", amplitude),
            Family::Constant(c) => s.field("family", &"Constant").field("value", c),
            Family::Combination(parts) => s.field("family", &"Combination").field("terms", &parts.len()),
            Family::Custom(_) => s.field("family", &"Custom"),
        };
        s.finish()
    }
}

fn finite(name: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(param(format!("{name} must be finite")))
    }
}

/// `a * exp(-|x - center|^2 / (2 width^2))`.
pub fn make_gaussian_bump(d: usize, center: &[f64], width: f64, amplitude: f64) -> Result<TestFunction> {
    if d == 0 {
        return Err(param("dimension must be positive"));
    }
    check_dim(d, center.len())?;
    if !(width > 0.0) || !width.is_finite() {
        return Err(param(format!("width must be positive, got {width}")));
    }
    finite("amplitude", amplitude)?;
    Ok(TestFunction {
        dim: d,
        family: Family::GaussianBump {
            center: center.to_vec(),
            width,
            amplitude,
        },
    })
}

/// Mollifier profile `a * exp(-r^2 / (r^2 - |x - center|^2))` on the open ball
/// of radius `r`, identically zero outside.
pub fn make_compact_bump(d: usize, center: &[f64], radius: f64, amplitude: f64) -> Result<TestFunction> {
    if d == 0 {
        return Err(param("dimension must be positive"));
    }
    check_dim(d, center.len())?;
    if !(radius > 0.0) || !radius.is_finite() {
        return Err(param(format!("radius must be positive, got {radius}")));
    }
    finite("amplitude", amplitude)?;
    Ok(TestFunction {
        dim: d,
        family: Family::CompactBump {
            center: center.to_vec(),
            radius,
            amplitude,
        },
    })
}

/// The weight `kappa(x) = exp(-sqrt(1 + |x|^2))`: smooth, strictly positive and
/// comparable to `exp(-|x|)` at infinity.
pub fn make_kappa(d: usize) -> Result<TestFunction> {
    if d == 0 {
        return Err(param("dimension must be positive"));
    }
    Ok(TestFunction {
        dim: d,
        family: Family::Kappa { amplitude: 1.0 },
    })
}

pub fn make_constant(d: usize, c: f64) -> Result<TestFunction> {
    if d == 0 {
        return Err(param("dimension must be positive"));
    }
    finite("constant", c)?;
    Ok(TestFunction {
        dim: d,
        family: Family::Constant(c),
    })
}

pub fn make_custom(f: Arc<dyn Smooth>) -> TestFunction {
    TestFunction {
        dim: f.dim(),
        family: Family::Custom(f),
    }
}

fn dist_sq(x: &[f64], c: &[f64]) -> f64 {
    x.iter().zip(c).map(|(a, b)| (a - b) * (a - b)).sum()
}

impl TestFunction {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn tag(&self) -> FamilyTag {
        match self.family {
            Family::GaussianBump { .. } => FamilyTag::GaussianBump,
            Family::CompactBump { .. } => FamilyTag::CompactBump,
            Family::Kappa { .. } => FamilyTag::Kappa,
            Family::Constant(_) => FamilyTag::Constant,
            Family::Combination(_) | Family::Custom(_) => FamilyTag::Custom,
        }
    }

    /// `c * self`, staying inside the closed-form family when possible.
    pub fn scaled(&self, c: f64) -> TestFunction {
        let family = match &self.family {
            Family::GaussianBump {
                center,
                width,
                amplitude,
            } => Family::GaussianBump {
                center: center.clone(),
                width: *width,
                amplitude: c * amplitude,
            },
            Family::CompactBump {
                center,
                radius,
                amplitude,
            } => Family::CompactBump {
                center: center.clone(),
                radius: *radius,
                amplitude: c * amplitude,
            },
            Family::Kappa { amplitude } => Family::Kappa {
                amplitude: c * amplitude,
            },
            Family::Constant(v) => Family::Constant(c * v),
            Family::Combination(parts) => {
                Family::Combination(parts.iter().map(|(w, f)| (c * w, f.clone())).collect())
            }
            Family::Custom(_) => Family::Combination(vec![(c, self.clone())]),
        };
        TestFunction { dim: self.dim, family }
    }

    /// `a * self + b * other`.
    pub fn combine(&self, a: f64, other: &TestFunction, b: f64) -> Result<TestFunction> {
        check_dim(self.dim, other.dim)?;
        Ok(TestFunction {
            dim: self.dim,
            family: Family::Combination(vec![(a, self.clone()), (b, other.clone())]),
        })
    }

    /// Bounding box of the support for compactly supported functions.
    pub fn support_box(&self) -> Option<Rectangle> {
        match &self.family {
            Family::CompactBump { center, radius, .. } => Rectangle::new(
                center.iter().map(|c| c - radius).collect(),
                center.iter().map(|c| c + radius).collect(),
            )
            .ok(),
            Family::Combination(parts) => {
                let mut boxes = parts.iter().filter(|(w, _)| *w != 0.0).map(|(_, f)| f.support_box());
                let first = boxes.next()??;
                boxes.try_fold(first, |acc, b| {
                    let b = b?;
                    Rectangle::new(
                        acc.lower().iter().zip(b.lower()).map(|(x, y)| x.min(*y)).collect(),
                        acc.upper().iter().zip(b.upper()).map(|(x, y)| x.max(*y)).collect(),
                    )
                    .ok()
                })
            }
            Family::Custom(f) => f.support(),
            _ => None,
        }
    }

    /// Support boxes of the compactly supported components.
    pub fn compact_parts(&self) -> Vec<Rectangle> {
        match &self.family {
            Family::CompactBump { .. } => self.support_box().into_iter().collect(),
            Family::Combination(parts) => parts
                .iter()
                .filter(|(w, _)| *w != 0.0)
                .flat_map(|(_, f)| f.compact_parts())
                .collect(),
            Family::Custom(f) => f.compact_parts(),
            _ => Vec::new(),
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match &self.family {
            Family::GaussianBump {
                center,
                width,
                amplitude,
            } => amplitude * (-dist_sq(x, center) / (2.0 * width * width)).exp(),
            Family::CompactBump {
                center,
                radius,
                amplitude,
            } => {
                let r2 = radius * radius;
                let q = r2 - dist_sq(x, center);
                if q <= 0.0 {
                    0.0
                } else {
                    amplitude * (-r2 / q).exp()
                }
            }
            Family::Kappa { amplitude } => {
                let rho = (1.0 + x.iter().map(|v| v * v).sum::<f64>()).sqrt();
                amplitude * (-rho).exp()
            }
            Family::Constant(c) => *c,
            Family::Combination(parts) => parts.iter().map(|(w, f)| w * f.eval(x)).sum(),
            Family::Custom(f) => f.value(x),
        }
    }

    pub fn grad_into(&self, x: &[f64], out: &mut [f64]) {
        match &self.family {
            Family::GaussianBump { center, width, .. } => {
                let v = self.eval(x);
                let s2 = width * width;
                for ((o, xi), ci) in out.iter_mut().zip(x).zip(center) {
                    *o = -v * (xi - ci) / s2;
                }
            }
            Family::CompactBump { center, radius, .. } => {
                let v = self.eval(x);
                if v == 0.0 {
                    out.fill(0.0);
                    return;
                }
                let r2 = radius * radius;
                let q = r2 - dist_sq(x, center);
                for ((o, xi), ci) in out.iter_mut().zip(x).zip(center) {
                    *o = -v * 2.0 * r2 * (xi - ci) / (q * q);
                }
            }
            Family::Kappa { .. } => {
                let v = self.eval(x);
                let rho = (1.0 + x.iter().map(|v| v * v).sum::<f64>()).sqrt();
                for (o, xi) in out.iter_mut().zip(x) {
                    *o = -v * xi / rho;
                }
            }
            Family::Constant(_) => out.fill(0.0),
            Family::Combination(parts) => {
                out.fill(0.0);
                let mut tmp = vec![0.0; self.dim];
                for (w, f) in parts {
                    f.grad_into(x, &mut tmp);
                    for (o, t) in out.iter_mut().zip(&tmp) {
                        *o += w * t;
                    }
                }
            }
            Family::Custom(f) => f.gradient(x, out),
        }
    }

    pub fn grad(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        self.grad_into(x, &mut out);
        out
    }

    /// `|grad phi(x)|^2`, the carre du champ of `phi`.
    pub fn grad_norm_sq(&self, x: &[f64]) -> f64 {
        match &self.family {
            Family::GaussianBump { center, width, .. } => {
                let v = self.eval(x);
                let s2 = width * width;
                v * v * dist_sq(x, center) / (s2 * s2)
            }
            Family::Constant(_) => 0.0,
            _ => {
                let mut g = vec![0.0; self.dim];
                self.grad_into(x, &mut g);
                g.iter().map(|v| v * v).sum()
            }
        }
    }

    pub fn laplacian(&self, x: &[f64]) -> f64 {
        let d = self.dim as f64;
        match &self.family {
            Family::GaussianBump { center, width, .. } => {
                let v = self.eval(x);
                let s2 = width * width;
                v * (dist_sq(x, center) / (s2 * s2) - d / s2)
            }
            Family::CompactBump { center, radius, .. } => {
                let v = self.eval(x);
                if v == 0.0 {
                    return 0.0;
                }
                let r2 = radius * radius;
                let dist2 = dist_sq(x, center);
                let q = r2 - dist2;
                let q2 = q * q;
                let grad_g_sq = 4.0 * r2 * r2 * dist2 / (q2 * q2);
                let lap_g = -2.0 * r2 * (d / q2 + 4.0 * dist2 / (q2 * q));
                v * (grad_g_sq + lap_g)
            }
            Family::Kappa { .. } => {
                let v = self.eval(x);
                let r2: f64 = x.iter().map(|v| v * v).sum();
                let rho = (1.0 + r2).sqrt();
                v * (r2 / (rho * rho) - d / rho + r2 / (rho * rho * rho))
            }
            Family::Constant(_) => 0.0,
            Family::Combination(parts) => parts.iter().map(|(w, f)| w * f.laplacian(x)).sum(),
            Family::Custom(f) => f.laplacian(x),
        }
    }

    /// Row-major Hessian.
    pub fn hessian_into(&self, x: &[f64], out: &mut [f64]) {
        let d = self.dim;
        match &self.family {
            Family::GaussianBump { center, width, .. } => {
                let v = self.eval(x);
                let s2 = width * width;
                for i in 0..d {
                    for j in 0..d {
                        let delta = if i == j { 1.0 } else { 0.0 };
                        out[i * d + j] =
                            v * ((x[i] - center[i]) * (x[j] - center[j]) / (s2 * s2) - delta / s2);
                    }
                }
            }
            Family::CompactBump { center, radius, .. } => {
                let v = self.eval(x);
                if v == 0.0 {
                    out.fill(0.0);
                    return;
                }
                let r2 = radius * radius;
                let q = r2 - dist_sq(x, center);
                let q2 = q * q;
                for i in 0..d {
                    for j in 0..d {
                        let (yi, yj) = (x[i] - center[i], x[j] - center[j]);
                        let delta = if i == j { 1.0 } else { 0.0 };
                        let gg = 4.0 * r2 * r2 * yi * yj / (q2 * q2);
                        let hg = -2.0 * r2 * (delta / q2 + 4.0 * yi * yj / (q2 * q));
                        out[i * d + j] = v * (gg + hg);
                    }
                }
            }
            Family::Kappa { .. } => {
                let v = self.eval(x);
                let rho = (1.0 + x.iter().map(|v| v * v).sum::<f64>()).sqrt();
                for i in 0..d {
                    for j in 0..d {
                        let delta = if i == j { 1.0 } else { 0.0 };
                        let xx = x[i] * x[j];
                        out[i * d + j] = v * (xx / (rho * rho) - delta / rho + xx / (rho * rho * rho));
                    }
                }
            }
            Family::Constant(_) => out.fill(0.0),
            Family::Combination(parts) => {
                out.fill(0.0);
                let mut tmp = vec![0.0; d * d];
                for (w, f) in parts {
                    f.hessian_into(x, &mut tmp);
                    for (o, t) in out.iter_mut().zip(&tmp) {
                        *o += w * t;
                    }
                }
            }
            Family::Custom(f) => f.hessian(x, out),
        }
    }

    /// Mixed partial derivative `D^beta phi(x)` for `|beta| <= 2`.
    pub fn derivative(&self, beta: &[u32], x: &[f64]) -> Result<f64> {
        check_dim(self.dim, beta.len())?;
        let order: u32 = beta.iter().sum();
        match order {
            0 => Ok(self.eval(x)),
            1 => {
                let j = beta.iter().position(|&b| b == 1).expect("order one index");
                Ok(self.grad(x)[j])
            }
            2 => {
                let idx: Vec<usize> = beta
                    .iter()
                    .enumerate()
                    .flat_map(|(k, &b)| std::iter::repeat_n(k, b as usize))
                    .collect();
                let d = self.dim;
                let mut h = vec![0.0; d * d];
                self.hessian_into(x, &mut h);
                Ok(h[idx[0] * d + idx[1]])
            }
            n => Err(Error::UnsupportedDerivative(n as usize)),
        }
    }
}

impl Smooth for TestFunction {
    fn dim(&self) -> usize {
        self.dim
    }
    fn value(&self, x: &[f64]) -> f64 {
        self.eval(x)
    }
    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        self.grad_into(x, out)
    }
    fn laplacian(&self, x: &[f64]) -> f64 {
        TestFunction::laplacian(self, x)
    }
    fn hessian(&self, x: &[f64], out: &mut [f64]) {
        self.hessian_into(x, out)
    }
    fn support(&self) -> Option<Rectangle> {
        self.support_box()
    }
    fn compact_parts(&self) -> Vec<Rectangle> {
        TestFunction::compact_parts(self)
    }
}

/// The seminorm `sup_x |x|^n |D^beta f(x)|`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Seminorm {
    pub multi_index: Vec<u32>,
    pub power: u32,
}

impl Seminorm {
    pub fn new(multi_index: Vec<u32>, power: u32) -> Self {
        Self { multi_index, power }
    }

    pub fn order(&self) -> u32 {
        self.multi_index.iter().sum()
    }
}

/// Points `i * step` (integer `i` per axis) that lie in the closed box.
///
/// The lattice is anchored at the origin, so enlarging the box only adds points.
pub fn lattice_points(bx: &Rectangle, step: f64) -> Result<Vec<Vec<f64>>> {
    if !(step > 0.0) || !step.is_finite() {
        return Err(param("grid step must be positive"));
    }
    if bx.is_empty() {
        return Err(param("grid box is degenerate"));
    }
    let axes: Vec<Vec<f64>> = bx
        .lower()
        .iter()
        .zip(bx.upper())
        .map(|(&a, &b)| {
            let lo = (a / step).ceil() as i64;
            let hi = (b / step).floor() as i64;
            (lo..=hi).map(|i| i as f64 * step).collect()
        })
        .collect();
    let mut points = vec![Vec::with_capacity(axes.len())];
    for axis in &axes {
        let mut next = Vec::with_capacity(points.len() * axis.len());
        for p in &points {
            for &v in axis {
                let mut q = p.clone();
                q.push(v);
                next.push(q);
            }
        }
        points = next;
    }
    Ok(points)
}

/// Grid lower bound on `||f||_{beta,n}` over a box.
pub fn seminorm_sup(f: &TestFunction, s: &Seminorm, bx: &Rectangle, grid_step: f64) -> Result<f64> {
    check_dim(f.dim(), s.multi_index.len())?;
    check_dim(f.dim(), bx.dim())?;
    if s.order() > 2 {
        return Err(Error::UnsupportedDerivative(s.order() as usize));
    }
    let mut best: f64 = 0.0;
    for x in lattice_points(bx, grid_step)? {
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        let v = norm.powi(s.power as i32) * f.derivative(&s.multi_index, &x)?.abs();
        best = best.max(v);
    }
    Ok(best)
}

/// Empirical constants `sup |grad k|^2 / k` and `sup |lap k| / k` over a grid.
pub fn kappa_bound_check(kappa: &TestFunction, bx: &Rectangle, grid_step: f64) -> Result<(f64, f64)> {
    check_dim(kappa.dim(), bx.dim())?;
    let mut c_grad: f64 = 0.0;
    let mut c_lap: f64 = 0.0;
    for x in lattice_points(bx, grid_step)? {
        let k = kappa.eval(&x);
        if !(k > 0.0) {
            return Err(Error::Invariant(format!("weight is not strictly positive at {x:?}")));
        }
        c_grad = c_grad.max(kappa.grad_norm_sq(&x) / k);
        c_lap = c_lap.max(kappa.laplacian(&x).abs() / k);
    }
    Ok((c_grad, c_lap))
}
