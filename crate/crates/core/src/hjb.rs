//! Cole-Hopf solution of `dv/dt = (alpha/2) Laplacian v - |grad v|^2 / 2`.
//!
//! `V_t phi = -alpha ln(1 + P_t(exp(-phi/alpha) - 1))`. The shifted integrand
//! vanishes wherever `phi` does, so it keeps the decay and the support of
//! `phi`. Spatial derivatives come from the quotient formulas applied to the
//! heat jet of the shifted function; finite differences of the scalar map are
//! kept as an independent cross-check.

use std::sync::Arc;

use crate::error::{check_dim, Error, Result};
use crate::heat::{HeatEvaluator, OwnedDomain};
use crate::measure::Rectangle;
use crate::testfn::{lattice_points, make_constant, make_custom, make_kappa, Family, Smooth, TestFunction};

/// Time step of the central difference in `t`.
pub const TIME_STEP: f64 = 1e-3;
/// Slack allowed in the comparison `V_t phi <= V_t psi`.
pub const MONOTONE_SLACK: f64 = 1e-10;

/// Spatial difference step at `x`.
pub fn space_step(x: &[f64]) -> f64 {
    1e-4 * (1.0 + x.iter().map(|v| v * v).sum::<f64>().sqrt())
}

/// `exp(-phi/alpha) - 1`.
struct Shifted {
    inner: TestFunction,
    alpha: f64,
}

impl Smooth for Shifted {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn value(&self, x: &[f64]) -> f64 {
        (-self.inner.eval(x) / self.alpha).exp_m1()
    }

    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        self.inner.grad_into(x, out);
        let s = -(-self.inner.eval(x) / self.alpha).exp() / self.alpha;
        out.iter_mut().for_each(|g| *g *= s);
    }

    fn laplacian(&self, x: &[f64]) -> f64 {
        let a = self.alpha;
        let e = (-self.inner.eval(x) / a).exp();
        e * (self.inner.grad_norm_sq(x) / (a * a) - self.inner.laplacian(x) / a)
    }

    fn support(&self) -> Option<Rectangle> {
        self.inner.support_box()
    }

    fn compact_parts(&self) -> Vec<Rectangle> {
        self.inner.compact_parts()
    }
}

/// `exp(-phi/alpha)`, the unshifted integrand of the direct form.
struct Exponential {
    inner: TestFunction,
    alpha: f64,
}

impl Smooth for Exponential {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn value(&self, x: &[f64]) -> f64 {
        (-self.inner.eval(x) / self.alpha).exp()
    }

    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        self.inner.grad_into(x, out);
        let s = -self.value(x) / self.alpha;
        out.iter_mut().for_each(|g| *g *= s);
    }

    fn laplacian(&self, x: &[f64]) -> f64 {
        let a = self.alpha;
        self.value(x) * (self.inner.grad_norm_sq(x) / (a * a) - self.inner.laplacian(x) / a)
    }

    fn compact_parts(&self) -> Vec<Rectangle> {
        self.inner.compact_parts()
    }
}

/// Empirical constant of the weighted bound
/// `|V| + |dV/dt| + |Laplacian V| + |grad V|^2 <= C kappa`.
#[derive(Debug, Clone, PartialEq)]
pub struct KappaDomination {
    pub constant: f64,
    pub argmax_t: f64,
    pub argmax_x: Vec<f64>,
    pub evaluations: usize,
}

/// Cole-Hopf transform driven by a heat evaluator with the same `alpha`.
#[derive(Debug, Clone)]
pub struct ColeHopf {
    heat: HeatEvaluator,
}

fn check_positive_time(t: f64) -> Result<()> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::Parameter(format!("time must be positive, got {t}")))
    }
}

fn log_argument(one_plus_u: f64, t: f64, x: &[f64]) -> Result<f64> {
    if one_plus_u > 0.0 && one_plus_u.is_finite() {
        Ok(one_plus_u)
    } else {
        Err(Error::Domain(format!(
            "1 + P_t(exp(-phi/alpha) - 1) = {one_plus_u} at t = {t}, x = {x:?}"
        )))
    }
}

impl ColeHopf {
    pub fn new(heat: HeatEvaluator) -> Self {
        Self { heat }
    }

    pub fn heat(&self) -> &HeatEvaluator {
        &self.heat
    }

    pub fn alpha(&self) -> f64 {
        self.heat.alpha()
    }

    pub fn dim(&self) -> usize {
        self.heat.dim()
    }

    /// The shifted function `exp(-phi/alpha) - 1`.
    pub fn shifted(&self, phi: &TestFunction) -> TestFunction {
        if let Family::Constant(c) = phi.family {
            return make_constant(phi.dim(), (-c / self.alpha()).exp_m1()).expect("positive dimension");
        }
        make_custom(Arc::new(Shifted {
            inner: phi.clone(),
            alpha: self.alpha(),
        }))
    }

    fn check(&self, phi: &TestFunction, x: &[f64]) -> Result<()> {
        check_dim(self.dim(), phi.dim())?;
        check_dim(self.dim(), x.len())
    }

    /// `V_t phi(x)`; exactly `phi(x)` at `t = 0`.
    pub fn apply(&self, phi: &TestFunction, t: f64, x: &[f64]) -> Result<f64> {
        self.check(phi, x)?;
        if t == 0.0 {
            return Ok(phi.eval(x));
        }
        if let Family::Constant(c) = phi.family {
            if t > 0.0 && t.is_finite() {
                return Ok(c);
            }
        }
        let u = self.heat.apply(&self.shifted(phi), t, x)?;
        Ok(-self.alpha() * log_argument(1.0 + u, t, x)?.ln())
    }

    /// `-alpha ln P_t exp(-phi/alpha)` evaluated without the shift.
    pub fn apply_direct(&self, phi: &TestFunction, t: f64, x: &[f64]) -> Result<f64> {
        self.check(phi, x)?;
        if t == 0.0 {
            return Ok(phi.eval(x));
        }
        let alpha = self.alpha();
        let parts = phi.compact_parts();
        let domain = if parts.is_empty() {
            OwnedDomain::Whole
        } else {
            OwnedDomain::Pieces(parts)
        };
        let integrand = Exponential {
            inner: phi.clone(),
            alpha,
        };
        let p = self.heat.expect_in(|y| integrand.value(y), &domain.as_ref(), t, x)?;
        Ok(-alpha * log_argument(p, t, x)?.ln())
    }

    /// Value, gradient and Laplacian of `V_t phi` at `x` by the quotient formulas.
    pub fn jet(&self, phi: &TestFunction, t: f64, x: &[f64]) -> Result<(f64, Vec<f64>, f64)> {
        self.check(phi, x)?;
        check_positive_time(t)?;
        let alpha = self.alpha();
        let (u, du, lap_u) = self.heat.apply_jet(&self.shifted(phi), t, x)?;
        let w = log_argument(1.0 + u, t, x)?;
        let value = -alpha * w.ln();
        let grad: Vec<f64> = du.iter().map(|g| -alpha * g / w).collect();
        let du_sq: f64 = du.iter().map(|g| g * g).sum();
        let lap = -alpha * (lap_u / w - du_sq / (w * w));
        Ok((value, grad, lap))
    }

    pub fn grad(&self, phi: &TestFunction, t: f64, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.jet(phi, t, x)?.1)
    }

    pub fn laplacian(&self, phi: &TestFunction, t: f64, x: &[f64]) -> Result<f64> {
        Ok(self.jet(phi, t, x)?.2)
    }

    /// Central differences of [`ColeHopf::apply`] in each coordinate.
    pub fn grad_fd(&self, phi: &TestFunction, t: f64, x: &[f64]) -> Result<Vec<f64>> {
        self.check(phi, x)?;
        check_positive_time(t)?;
        let h = space_step(x);
        let mut y = x.to_vec();
        let mut out = Vec::with_capacity(x.len());
        for j in 0..x.len() {
            y[j] = x[j] + h;
            let up = self.apply(phi, t, &y)?;
            y[j] = x[j] - h;
            let down = self.apply(phi, t, &y)?;
            y[j] = x[j];
            out.push((up - down) / (2.0 * h));
        }
        Ok(out)
    }

    /// Second central differences of [`ColeHopf::apply`] summed over coordinates.
    pub fn laplacian_fd(&self, phi: &TestFunction, t: f64, x: &[f64]) -> Result<f64> {
        self.check(phi, x)?;
        check_positive_time(t)?;
        let h = space_step(x);
        let centre = self.apply(phi, t, x)?;
        let mut y = x.to_vec();
        let mut total = 0.0;
        for j in 0..x.len() {
            y[j] = x[j] + h;
            let up = self.apply(phi, t, &y)?;
            y[j] = x[j] - h;
            let down = self.apply(phi, t, &y)?;
            y[j] = x[j];
            total += (up - 2.0 * centre + down) / (h * h);
        }
        Ok(total)
    }

    /// Central difference of `V_t phi(x)` in `t` with step [`TIME_STEP`];
    /// needs `t >= TIME_STEP`.
    pub fn time_derivative(&self, phi: &TestFunction, t: f64, x: &[f64]) -> Result<f64> {
        if !(t >= TIME_STEP) || !t.is_finite() {
            return Err(Error::Parameter(format!("time derivative needs t >= {TIME_STEP}, got {t}")));
        }
        let up = self.apply(phi, t + TIME_STEP, x)?;
        let down = self.apply(phi, t - TIME_STEP, x)?;
        Ok((up - down) / (2.0 * TIME_STEP))
    }

    /// `|dV/dt - (alpha/2) Laplacian V + |grad V|^2 / 2|` at `(t, x)`.
    pub fn hj_residual(&self, phi: &TestFunction, t: f64, x: &[f64]) -> Result<f64> {
        if !(t > TIME_STEP) {
            return Err(Error::Parameter(format!("residual needs t > {TIME_STEP}, got {t}")));
        }
        let dt = self.time_derivative(phi, t, x)?;
        let (_, grad, lap) = self.jet(phi, t, x)?;
        let grad_sq: f64 = grad.iter().map(|g| g * g).sum();
        Ok((dt - 0.5 * self.alpha() * lap + 0.5 * grad_sq).abs())
    }

    /// Whether `V_t phi <= V_t psi + MONOTONE_SLACK` at every probe, after
    /// checking `phi <= psi` on the lattice of `grid` with spacing `step`.
    pub fn monotonicity_check(
        &self,
        phi: &TestFunction,
        psi: &TestFunction,
        t: f64,
        probes: &[Vec<f64>],
        grid: &Rectangle,
        step: f64,
    ) -> Result<bool> {
        check_dim(self.dim(), psi.dim())?;
        check_dim(self.dim(), grid.dim())?;
        for p in lattice_points(grid, step)?.iter().chain(probes) {
            let (a, b) = (phi.eval(p), psi.eval(p));
            if a > b + 1e-12 {
                return Err(Error::Precondition(format!(
                    "inputs are not ordered: phi = {a} > psi = {b} at {p:?}"
                )));
            }
        }
        for p in probes {
            if self.apply(phi, t, p)? > self.apply(psi, t, p)? + MONOTONE_SLACK {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Supremum of `(|V| + |dV/dt| + |Laplacian V| + |grad V|^2) / kappa` over
    /// `time_steps` equally spaced times in `[TIME_STEP, t_end]` and the
    /// lattice of `grid` with spacing `step`.
    pub fn kappa_domination_check(
        &self,
        phi: &TestFunction,
        t_end: f64,
        grid: &Rectangle,
        step: f64,
        time_steps: usize,
    ) -> Result<KappaDomination> {
        let zero = matches!(phi.family, Family::Constant(c) if c == 0.0);
        if !zero && phi.support_box().is_none() {
            return Err(Error::Precondition("kappa domination needs a compactly supported phi".into()));
        }
        if !(t_end >= TIME_STEP) || !t_end.is_finite() {
            return Err(Error::Parameter(format!("horizon must be at least {TIME_STEP}, got {t_end}")));
        }
        if time_steps == 0 {
            return Err(Error::Parameter("need at least one time step".into()));
        }
        check_dim(self.dim(), grid.dim())?;
        let kappa = make_kappa(self.dim())?;
        let points = lattice_points(grid, step)?;
        let mut best = KappaDomination {
            constant: 0.0,
            argmax_t: TIME_STEP,
            argmax_x: points.first().cloned().unwrap_or_default(),
            evaluations: 0,
        };
        for k in 0..time_steps {
            let t = if time_steps == 1 {
                t_end
            } else {
                TIME_STEP + (t_end - TIME_STEP) * k as f64 / (time_steps - 1) as f64
            };
            for x in &points {
                let (v, g, lap) = self.jet(phi, t, x)?;
                let dt = self.time_derivative(phi, t, x)?;
                let g_sq: f64 = g.iter().map(|c| c * c).sum();
                let ratio = (v.abs() + dt.abs() + lap.abs() + g_sq) / kappa.eval(x);
                best.evaluations += 1;
                if ratio > best.constant {
                    best.constant = ratio;
                    best.argmax_t = t;
                    best.argmax_x = x.clone();
                }
            }
        }
        Ok(best)
    }
}
