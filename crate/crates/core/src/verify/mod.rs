//! Monte Carlo checks of the solution against deterministic oracles.
//!
//! Every reference value is computed from the heat semigroup, the Cole-Hopf
//! transform or closed-form distributions, never from the sampler. Replicas
//! run in parallel and are reduced in replica order, so a fixed seed gives
//! bitwise identical reports at any thread count.

mod report;

pub use report::{
    all_pass, reports_to_csv, z_max_for, Criterion, VerificationReport, MANY_CHECKS, REPORT_CSV_HEADER, Z_MAX,
    Z_MAX_MANY,
};

use std::fmt::Write as _;

use crate::dynamics::{init_ensemble, sample_traces, uniform_grid, walk_path, PhiTrace};
use crate::error::{check_dim, param, Error, Result};
use crate::heat::{Domain, HeatEvaluator};
use crate::hjb::ColeHopf;
use crate::measure::{sample_poisson, AtomicMeasure, Rectangle};
use crate::output::fmt_real;
use crate::par::try_map_replicas;
use crate::quadrature::GaussLegendre;
use crate::rng::{replica_stream, Purpose};
use crate::stats::{empirical_pmf, poisson_binomial_pmf, poisson_pmf, total_variation, MCEstimate};
use crate::testfn::{lattice_points, make_kappa, Family, TestFunction};

/// Total-variation bound for distributional checks.
pub const TV_LIMIT: f64 = 0.01;
/// Relative agreement required between the two deterministic duality oracles.
pub const ORACLE_RTOL: f64 = 1e-8;
/// Largest shift, in standard errors, a grid refinement may cause.
pub const REFINEMENT_SE: f64 = 0.5;
/// Minimum growth per decade of `K` in the divergent blow-up regime.
pub const BLOWUP_DECADE_RATIO: f64 = 1.5;
/// Relative change over two decades of `K` tolerated in the convergent regime.
pub const BLOWUP_RTOL: f64 = 1e-2;

/// Sampling and quadrature controls shared by all checks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McSettings {
    pub replicas: usize,
    pub seed: u64,
    pub quad_nodes: usize,
    pub z_max: f64,
}

impl Default for McSettings {
    fn default() -> Self {
        Self {
            replicas: 10_000,
            seed: 42,
            quad_nodes: crate::heat::DEFAULT_QUAD_NODES,
            z_max: Z_MAX,
        }
    }
}

impl McSettings {
    pub fn new(replicas: usize, seed: u64) -> Self {
        Self {
            replicas,
            seed,
            ..Self::default()
        }
    }

    fn check(&self) -> Result<()> {
        if self.replicas < 2 {
            return Err(param(format!("need at least 2 replicas, got {}", self.replicas)));
        }
        if !(self.z_max > 0.0) {
            return Err(param("z_max must be positive"));
        }
        Ok(())
    }

    fn z(&self) -> Criterion {
        Criterion::ZScore { z_max: self.z_max }
    }
}

fn check_time(t: f64) -> Result<()> {
    if t >= 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(param(format!("time must be non-negative, got {t}")))
    }
}

fn check_horizon(t: f64) -> Result<()> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(param(format!("horizon must be positive, got {t}")))
    }
}

/// Box around the atoms and the support of `phi`, grown by `reach`.
fn probe_box(nu: &AtomicMeasure, phi: &TestFunction, reach: f64) -> Result<Rectangle> {
    let d = nu.dim();
    let mut lo = vec![0.0; d];
    let mut hi = vec![0.0; d];
    for atom in nu.atoms() {
        for k in 0..d {
            lo[k] = f64::min(lo[k], atom[k]);
            hi[k] = f64::max(hi[k], atom[k]);
        }
    }
    if let Family::GaussianBump { center, .. } = &phi.family {
        for k in 0..d {
            lo[k] = lo[k].min(center[k]);
            hi[k] = hi[k].max(center[k]);
        }
    }
    if let Some(b) = phi.support_box() {
        for k in 0..d {
            lo[k] = lo[k].min(b.lower()[k]);
            hi[k] = hi[k].max(b.upper()[k]);
        }
    }
    Rectangle::new(lo, hi)?.padded(reach)
}

/// Fails unless `phi >= 0` on a lattice of about 20000 points covering `bx`.
fn check_nonnegative(phi: &TestFunction, bx: &Rectangle) -> Result<()> {
    let d = bx.dim();
    let per_axis = (20_000f64).powf(1.0 / d as f64).floor();
    let extent = bx
        .lower()
        .iter()
        .zip(bx.upper())
        .map(|(a, b)| b - a)
        .fold(0.0, f64::max);
    for p in lattice_points(bx, extent / per_axis)? {
        let v = phi.eval(&p);
        if v < 0.0 {
            return Err(Error::Precondition(format!("phi = {v} < 0 at {p:?}")));
        }
    }
    Ok(())
}

fn cole_hopf(nu: &AtomicMeasure, s: &McSettings) -> Result<ColeHopf> {
    Ok(ColeHopf::new(HeatEvaluator::new(nu.alpha(), nu.dim(), s.quad_nodes)?))
}

/// `E exp(-<mu_t, phi>)` against `exp(-<nu, V_t phi>)`, plus the agreement of
/// the shifted Cole-Hopf pairing with the product of single-particle
/// transforms `prod_i P_t exp(-phi/alpha)(x_i)`.
pub fn laplace_duality_test(
    nu: &AtomicMeasure,
    phi: &TestFunction,
    t: f64,
    s: &McSettings,
) -> Result<Vec<VerificationReport>> {
    s.check()?;
    check_time(t)?;
    check_dim(nu.dim(), phi.dim())?;
    let (alpha, d) = (nu.alpha(), nu.dim());
    check_nonnegative(phi, &probe_box(nu, phi, 8.0 * (alpha * t).sqrt() + 2.0)?)?;
    let ch = cole_hopf(nu, s)?;
    let mut exponent = 0.0;
    let mut log_product = 0.0;
    for atom in nu.atoms() {
        exponent += ch.apply(phi, t, atom)?;
        log_product -= ch.apply_direct(phi, t, atom)?;
    }
    let reference = (-exponent / alpha).exp();
    let product = (log_product / alpha).exp();
    let samples = try_map_replicas(s.replicas, |r| {
        let mut e = init_ensemble(nu, s.seed, r);
        e.evolve_to(t)?;
        Ok::<_, Error>((-e.pair_with(|x| phi.eval(x))).exp())
    })?;
    let est = MCEstimate::from_samples(&samples);
    let rel = if product == reference {
        0.0
    } else {
        (product - reference).abs() / reference.abs()
    };
    Ok(vec![
        VerificationReport::new(
            "laplace_duality",
            alpha,
            d,
            t,
            s.seed,
            est,
            reference,
            s.z(),
            format!("atoms={}", nu.len()),
        ),
        VerificationReport::exact_value(
            "laplace_duality_oracle",
            alpha,
            d,
            t,
            rel,
            0.0,
            Criterion::Below { limit: ORACLE_RTOL },
            format!("relative gap between product {} and pairing {}", fmt_real(product), fmt_real(reference)),
        ),
    ])
}

/// `M_T = <mu_T, phi> - <nu, phi> - (alpha/2) int_0^T <mu_s, Laplacian phi> ds`,
/// trapezoid in time over every `stride`-th grid point.
fn martingale_value(trace: &PhiTrace, grid: &[f64], alpha: f64, stride: usize) -> f64 {
    let idx: Vec<usize> = (0..grid.len()).step_by(stride).collect();
    let mut integral = 0.0;
    for w in idx.windows(2) {
        let (i, j) = (w[0], w[1]);
        integral += 0.5 * (grid[j] - grid[i]) * (trace.pair_lap[i] + trace.pair_lap[j]);
    }
    let last = *idx.last().expect("grid is non-empty");
    trace.pair[last] - trace.pair[0] - 0.5 * alpha * integral
}

/// `M_T` per replica on `steps` steps and, from the same paths, on `2 steps`.
fn martingale_samples(
    nu: &AtomicMeasure,
    phi: &TestFunction,
    t_end: f64,
    steps: usize,
    s: &McSettings,
) -> Result<(Vec<f64>, Vec<f64>)> {
    s.check()?;
    check_horizon(t_end)?;
    check_dim(nu.dim(), phi.dim())?;
    let fine = uniform_grid(t_end, 2 * steps)?;
    let phis = [phi.clone()];
    let pairs = try_map_replicas(s.replicas, |r| {
        let tr = &sample_traces(nu, &fine, &phis, s.seed, r)?[0];
        Ok::<_, Error>((
            martingale_value(tr, &fine, nu.alpha(), 2),
            martingale_value(tr, &fine, nu.alpha(), 1),
        ))
    })?;
    Ok(pairs.into_iter().unzip())
}

fn refinement_report(name: &str, nu: &AtomicMeasure, t: f64, s: &McSettings, coarse: &[f64], fine: &[f64]) -> VerificationReport {
    let fine_mean = MCEstimate::from_samples(fine).mean;
    VerificationReport::new(
        format!("{name}_refinement"),
        nu.alpha(),
        nu.dim(),
        t,
        s.seed,
        MCEstimate::from_samples(coarse),
        fine_mean,
        Criterion::ZScore { z_max: REFINEMENT_SE },
        "reference is the estimate on the doubled grid",
    )
}

/// `E M_T(phi) = 0`, with a grid-refinement check.
pub fn martingale_mean_test(
    nu: &AtomicMeasure,
    phi: &TestFunction,
    t_end: f64,
    steps: usize,
    s: &McSettings,
) -> Result<Vec<VerificationReport>> {
    let (coarse, fine) = martingale_samples(nu, phi, t_end, steps, s)?;
    Ok(vec![
        VerificationReport::new(
            "martingale_mean",
            nu.alpha(),
            nu.dim(),
            t_end,
            s.seed,
            MCEstimate::from_samples(&coarse),
            0.0,
            s.z(),
            format!("steps={steps}"),
        ),
        refinement_report("martingale_mean", nu, t_end, s, &coarse, &fine),
    ])
}

/// `int_0^T <nu, P_s |grad phi|^2> ds` by Gauss-Legendre in `s`.
pub fn quadratic_variation_reference(nu: &AtomicMeasure, phi: &TestFunction, t_end: f64, quad_nodes: usize) -> Result<f64> {
    check_horizon(t_end)?;
    check_dim(nu.dim(), phi.dim())?;
    let heat = HeatEvaluator::new(nu.alpha(), nu.dim(), quad_nodes)?;
    let rule = GaussLegendre::new(quad_nodes)?;
    let domain = Domain::of(phi);
    let mut total = 0.0;
    let half = 0.5 * t_end;
    for (z, w) in rule.nodes().iter().zip(rule.weights()) {
        let time = half * (1.0 + z);
        let mut inner = 0.0;
        for atom in nu.atoms() {
            inner += heat.expect_in(|y| phi.grad_norm_sq(y), &domain.as_ref(), time, atom)?;
        }
        total += w * inner;
    }
    Ok(half * total / nu.alpha())
}

/// `E M_T(phi)^2` against the integrated carré du champ, with a
/// grid-refinement check.
pub fn quadratic_variation_test(
    nu: &AtomicMeasure,
    phi: &TestFunction,
    t_end: f64,
    steps: usize,
    s: &McSettings,
) -> Result<Vec<VerificationReport>> {
    let reference = quadratic_variation_reference(nu, phi, t_end, s.quad_nodes)?;
    let (coarse, fine) = martingale_samples(nu, phi, t_end, steps, s)?;
    let sq = |v: Vec<f64>| v.into_iter().map(|m| m * m).collect::<Vec<f64>>();
    let (coarse, fine) = (sq(coarse), sq(fine));
    Ok(vec![
        VerificationReport::new(
            "quadratic_variation",
            nu.alpha(),
            nu.dim(),
            t_end,
            s.seed,
            MCEstimate::from_samples(&coarse),
            reference,
            s.z(),
            format!("steps={steps}"),
        ),
        refinement_report("quadratic_variation", nu, t_end, s, &coarse, &fine),
    ])
}

/// `E exp(-<mu_t, V_{T-t} phi>) = exp(-<nu, V_T phi>)` at every grid time.
pub fn duality_martingale_test(
    nu: &AtomicMeasure,
    phi: &TestFunction,
    t_end: f64,
    steps: usize,
    s: &McSettings,
) -> Result<Vec<VerificationReport>> {
    s.check()?;
    check_horizon(t_end)?;
    check_dim(nu.dim(), phi.dim())?;
    let zero = matches!(phi.family, Family::Constant(c) if c == 0.0);
    if !zero && phi.support_box().is_none() {
        return Err(Error::Precondition("duality martingale needs a compactly supported phi".into()));
    }
    let alpha = nu.alpha();
    check_nonnegative(phi, &probe_box(nu, phi, 1.0)?)?;
    let ch = cole_hopf(nu, s)?;
    let grid = uniform_grid(t_end, steps)?;
    let mut y0 = 0.0;
    for atom in nu.atoms() {
        y0 += ch.apply(phi, t_end, atom)?;
    }
    let reference = (-y0 / alpha).exp();
    let paths = try_map_replicas(s.replicas, |r| {
        let mut ys = vec![0.0; grid.len()];
        walk_path(nu, &grid, s.seed, r, |i, e| {
            let remaining = (t_end - grid[i]).max(0.0);
            let mut exponent = 0.0;
            for x in e.particles() {
                exponent += ch.apply(phi, remaining, x)?;
            }
            ys[i] = (-exponent / alpha).exp();
            Ok(())
        })?;
        Ok::<_, Error>(ys)
    })?;
    let z_max = z_max_for(grid.len(), s.z_max);
    Ok(grid
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            let column: Vec<f64> = paths.iter().map(|p| p[i]).collect();
            VerificationReport::new(
                "duality_martingale",
                alpha,
                nu.dim(),
                t,
                s.seed,
                MCEstimate::from_samples(&column),
                reference,
                Criterion::ZScore { z_max },
                format!("horizon={}", fmt_real(t_end)),
            )
        })
        .collect())
}

/// Integer mass, law and generating function of `alpha mu_t(A)`.
pub fn generating_function_test(
    nu: &AtomicMeasure,
    a: &Rectangle,
    t: f64,
    s_values: &[f64],
    s: &McSettings,
) -> Result<Vec<VerificationReport>> {
    s.check()?;
    check_time(t)?;
    check_dim(nu.dim(), a.dim())?;
    if let Some(bad) = s_values.iter().find(|v| !(**v > 0.0 && **v <= 1.0)) {
        return Err(Error::Precondition(format!("generating function argument {bad} not in (0, 1]")));
    }
    let (alpha, d) = (nu.alpha(), nu.dim());
    let heat = HeatEvaluator::new(alpha, d, s.quad_nodes)?;
    let hits: Vec<f64> = nu
        .atoms()
        .map(|x| {
            if t == 0.0 {
                Ok(if a.contains(x) { 1.0 } else { 0.0 })
            } else {
                heat.indicator(a, t, x)
            }
        })
        .collect::<Result<_>>()?;
    let samples = try_map_replicas(s.replicas, |r| {
        let mut e = init_ensemble(nu, s.seed, r);
        e.evolve_to(t)?;
        let mu = e.measure();
        let count = mu.count_atoms(a)?;
        let mass = crate::measure::count_in_rect(&mu, a)?;
        Ok::<_, Error>((count, (alpha * mass).round() == count as f64))
    })?;
    let counts: Vec<usize> = samples.iter().map(|c| c.0).collect();
    let integral = samples.iter().filter(|c| c.1).count() as f64 / samples.len() as f64;
    let oracle = poisson_binomial_pmf(&hits);
    let (empirical, overflow) = empirical_pmf(&counts, nu.len());
    let tv = total_variation(&empirical, &oracle);
    let mut reports = vec![
        VerificationReport::exact_value(
            "generating_function_integer_mass",
            alpha,
            d,
            t,
            integral,
            1.0,
            Criterion::Exact,
            "fraction of replicas with integer alpha mu_t(A)",
        ),
        VerificationReport::exact_value(
            "generating_function_pmf_tv",
            alpha,
            d,
            t,
            tv,
            0.0,
            Criterion::Below { limit: TV_LIMIT },
            format!("replicas={} overflow={}", s.replicas, fmt_real(overflow)),
        ),
    ];
    let z_max = z_max_for(s_values.len(), s.z_max);
    for &sv in s_values {
        let reference: f64 = hits.iter().map(|h| 1.0 + (sv - 1.0) * h).product();
        let values: Vec<f64> = counts.iter().map(|&c| sv.powi(c as i32)).collect();
        reports.push(VerificationReport::new(
            "generating_function",
            alpha,
            d,
            t,
            s.seed,
            MCEstimate::from_samples(&values),
            reference,
            Criterion::ZScore { z_max },
            format!("s={sv}"),
        ));
    }
    Ok(reports)
}

/// One entry of the blow-up table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlowupRow {
    pub count: usize,
    pub t: f64,
    pub partial_sum: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlowupScan {
    pub rows: Vec<BlowupRow>,
    pub reports: Vec<VerificationReport>,
}

pub const BLOWUP_CSV_HEADER: &str = "K,t,S_K";

impl BlowupScan {
    pub fn to_csv(&self) -> String {
        let mut s = String::from(BLOWUP_CSV_HEADER);
        s.push('\n');
        for r in &self.rows {
            let _ = writeln!(s, "{},{},{}", r.count, fmt_real(r.t), fmt_real(r.partial_sum));
        }
        s
    }

    pub fn value(&self, count: usize, t: f64) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.count == count && r.t == t)
            .map(|r| r.partial_sum)
    }
}

/// Exact partial sums `S_K(t) = sum_{k <= K} P(sqrt(ln k) e_1 + B_t in [0,1)^d)`
/// with unit speed, plus the convergent/divergent regime checks.
pub fn blowup_scan(k_values: &[usize], t_values: &[f64], d: usize) -> Result<BlowupScan> {
    if k_values.is_empty() || k_values[0] == 0 || k_values.windows(2).any(|w| w[1] <= w[0]) {
        return Err(param("K values must be positive and strictly increasing"));
    }
    if t_values.iter().any(|t| !(*t > 0.0 && t.is_finite())) {
        return Err(param("blow-up times must be positive"));
    }
    let heat = HeatEvaluator::new(1.0, d, 8)?;
    let unit = Rectangle::cube(d, 0.0, 1.0)?;
    let k_max = *k_values.last().expect("non-empty");
    let mut rows = Vec::new();
    let mut reports = Vec::new();
    let mut start = vec![0.0; d];
    for &t in t_values {
        let mut sums = Vec::with_capacity(k_values.len());
        let mut total = 0.0;
        let mut next = 0;
        for k in 1..=k_max {
            start[0] = (k as f64).ln().sqrt();
            total += heat.indicator(&unit, t, &start)?;
            if k == k_values[next] {
                sums.push(total);
                rows.push(BlowupRow {
                    count: k,
                    t,
                    partial_sum: total,
                });
                next += 1;
            }
        }
        if t < 0.5 {
            let last = *sums.last().expect("non-empty");
            if let Some(j) = k_values.iter().rposition(|&k| k * 100 <= k_max) {
                let base = sums[j];
                reports.push(VerificationReport::exact_value(
                    "blowup_convergent",
                    1.0,
                    d,
                    t,
                    (last - base).abs() / base,
                    0.0,
                    Criterion::Below { limit: BLOWUP_RTOL },
                    format!("relative change of S_K from K={} to K={k_max}", k_values[j]),
                ));
            }
        } else {
            let ratios: Vec<(usize, f64)> = k_values
                .windows(2)
                .zip(sums.windows(2))
                .filter(|(k, _)| k[1] == 10 * k[0])
                .map(|(k, s)| (k[0], s[1] / s[0]))
                .collect();
            if let Some(worst) = ratios.iter().map(|r| r.1).reduce(f64::min) {
                let listed: Vec<String> = ratios.iter().map(|(k, r)| format!("K={k}:{r:.4}")).collect();
                reports.push(VerificationReport::exact_value(
                    "blowup_divergent",
                    1.0,
                    d,
                    t,
                    worst,
                    BLOWUP_DECADE_RATIO,
                    Criterion::AtLeast,
                    format!("smallest S_10K/S_K; {}", listed.join(" ")),
                ));
            }
        }
    }
    Ok(BlowupScan { rows, reports })
}

/// `int (1 - exp(-phi/alpha)) dx` over the support of a compact `phi`.
fn laplace_exponent_integral(phi: &TestFunction, support: &Rectangle, alpha: f64, rule: &GaussLegendre) -> f64 {
    const PANELS: usize = 8;
    let d = support.dim();
    let axes: Vec<Vec<(f64, f64)>> = (0..d)
        .map(|k| {
            let (lo, hi) = (support.lower()[k], support.upper()[k]);
            let h = (hi - lo) / PANELS as f64;
            let mut pts = Vec::with_capacity(PANELS * rule.len());
            for p in 0..PANELS {
                let (mid, half) = (lo + (p as f64 + 0.5) * h, 0.5 * h);
                for (z, w) in rule.nodes().iter().zip(rule.weights()) {
                    pts.push((mid + half * z, half * w));
                }
            }
            pts
        })
        .collect();
    let mut idx = vec![0usize; d];
    let mut y = vec![0.0; d];
    let total: usize = axes.iter().map(Vec::len).product();
    let mut sum = 0.0;
    for _ in 0..total {
        let mut w = 1.0;
        for k in 0..d {
            y[k] = axes[k][idx[k]].0;
            w *= axes[k][idx[k]].1;
        }
        sum += w * -(-phi.eval(&y) / alpha).exp_m1();
        for k in 0..d {
            idx[k] += 1;
            if idx[k] < axes[k].len() {
                break;
            }
            idx[k] = 0;
        }
    }
    sum
}

/// Parameters of the Poisson invariance check.
#[derive(Debug, Clone)]
pub struct PoissonSetup {
    pub intensity: f64,
    pub alpha: f64,
    pub bx: Rectangle,
    pub pad: f64,
    pub sub_boxes: Vec<Rectangle>,
    /// Compact, non-negative function for the Laplace functional check.
    pub phi: Option<TestFunction>,
}

/// Counts of the evolved Poisson configuration are Poisson(`lambda vol`) and
/// its Laplace functional is stationary.
pub fn poisson_invariance_test(p: &PoissonSetup, t: f64, s: &McSettings) -> Result<Vec<VerificationReport>> {
    s.check()?;
    check_time(t)?;
    let (alpha, d, lambda) = (p.alpha, p.bx.dim(), p.intensity);
    if !(alpha > 0.0) {
        return Err(param("alpha must be positive"));
    }
    let needed = 6.0 * (alpha * t).sqrt();
    if p.pad < needed * (1.0 - 1e-12) {
        return Err(Error::Precondition(format!("pad {} below 6 sqrt(alpha t) = {needed}", p.pad)));
    }
    for b in &p.sub_boxes {
        if !p.bx.encloses(b) {
            return Err(Error::Precondition(format!("sub-box {b:?} is not inside the box")));
        }
    }
    let laplace = match &p.phi {
        Some(phi) => {
            check_dim(d, phi.dim())?;
            let support = phi
                .support_box()
                .filter(|b| p.bx.encloses(b))
                .ok_or_else(|| Error::Precondition("Laplace functional needs phi supported inside the box".into()))?;
            check_nonnegative(phi, &support)?;
            let rule = GaussLegendre::new(s.quad_nodes)?;
            Some((phi, (-lambda * laplace_exponent_integral(phi, &support, alpha, &rule)).exp()))
        }
        None => None,
    };
    let samples = try_map_replicas(s.replicas, |r| {
        let mut rng = replica_stream(s.seed, Purpose::InitialCondition, r);
        let xi = sample_poisson(lambda, &p.bx, p.pad, &mut rng)?.with_alpha(alpha)?;
        let mut e = init_ensemble(&xi, s.seed, r);
        let pair = |e: &crate::dynamics::ParticleEnsemble| match laplace {
            Some((phi, _)) => (-e.pair_with(|x| phi.eval(x))).exp(),
            None => 0.0,
        };
        let before = pair(&e);
        e.evolve_to(t)?;
        let after = pair(&e);
        let counts: Vec<usize> = p
            .sub_boxes
            .iter()
            .map(|b| e.particles().filter(|x| b.contains(x)).count())
            .collect();
        Ok::<_, Error>((counts, before, after))
    })?;
    let checks = 2 * p.sub_boxes.len() + if laplace.is_some() { 2 } else { 0 };
    let z = Criterion::ZScore {
        z_max: z_max_for(checks, s.z_max),
    };
    let mut reports = Vec::with_capacity(checks);
    for (i, b) in p.sub_boxes.iter().enumerate() {
        let counts: Vec<usize> = samples.iter().map(|c| c.0[i]).collect();
        let mean = lambda * b.volume();
        let values: Vec<f64> = counts.iter().map(|&c| c as f64).collect();
        reports.push(VerificationReport::new(
            "poisson_count_mean",
            alpha,
            d,
            t,
            s.seed,
            MCEstimate::from_samples(&values),
            mean,
            z,
            format!("sub_box={i}"),
        ));
        let n_max = (mean + 10.0 * mean.sqrt() + 10.0).ceil() as usize;
        let (empirical, overflow) = empirical_pmf(&counts, n_max);
        reports.push(VerificationReport::exact_value(
            "poisson_count_tv",
            alpha,
            d,
            t,
            total_variation(&empirical, &poisson_pmf(mean, n_max)),
            0.0,
            Criterion::Below { limit: TV_LIMIT },
            format!("sub_box={i} replicas={} overflow={}", s.replicas, fmt_real(overflow)),
        ));
    }
    if let Some((_, reference)) = laplace {
        let after: Vec<f64> = samples.iter().map(|c| c.2).collect();
        let drift: Vec<f64> = samples.iter().map(|c| c.2 - c.1).collect();
        reports.push(VerificationReport::new(
            "poisson_laplace_functional",
            alpha,
            d,
            t,
            s.seed,
            MCEstimate::from_samples(&after),
            reference,
            z,
            "",
        ));
        reports.push(VerificationReport::new(
            "poisson_stationarity",
            alpha,
            d,
            t,
            s.seed,
            MCEstimate::from_samples(&drift),
            0.0,
            z,
            "paired difference of the Laplace functional at t and at 0",
        ));
    }
    Ok(reports)
}

/// First and second moments of `<mu_t, kappa>` against heat-semigroup oracles.
pub fn moment_bound_test(nu: &AtomicMeasure, t: f64, s: &McSettings) -> Result<Vec<VerificationReport>> {
    s.check()?;
    check_time(t)?;
    let (alpha, d) = (nu.alpha(), nu.dim());
    let kappa = make_kappa(d)?;
    let heat = HeatEvaluator::new(alpha, d, s.quad_nodes)?;
    let mut first = 0.0;
    let mut spread = 0.0;
    for atom in nu.atoms() {
        let m = heat.apply(&kappa, t, atom)?;
        let sq = heat.expect(|y| kappa.eval(y).powi(2), t, atom)?;
        first += m;
        spread += sq - m * m;
    }
    first /= alpha;
    let second = first * first + spread / (alpha * alpha);
    let samples = try_map_replicas(s.replicas, |r| {
        let mut e = init_ensemble(nu, s.seed, r);
        e.evolve_to(t)?;
        Ok::<_, Error>(e.pair_with(|x| kappa.eval(x)))
    })?;
    let squares: Vec<f64> = samples.iter().map(|v| v * v).collect();
    let second_est = MCEstimate::from_samples(&squares);
    Ok(vec![
        VerificationReport::new(
            "moment_first",
            alpha,
            d,
            t,
            s.seed,
            MCEstimate::from_samples(&samples),
            first,
            s.z(),
            format!("atoms={}", nu.len()),
        ),
        VerificationReport::new(
            "moment_second",
            alpha,
            d,
            t,
            s.seed,
            second_est,
            second,
            s.z(),
            format!("second moment finite: {}", fmt_real(second_est.mean)),
        ),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::normal_cdf;
    use crate::testfn::{make_compact_bump, make_constant, make_gaussian_bump};

    fn one_atom(alpha: f64, x: &[f64]) -> AtomicMeasure {
        AtomicMeasure::new(alpha, x.len(), x.to_vec()).unwrap()
    }

    #[test]
    fn zero_test_function_gives_exact_agreement() {
        let nu = AtomicMeasure::new(1.0, 1, vec![-1.0, 1.0]).unwrap();
        let zero = make_constant(1, 0.0).unwrap();
        let r = laplace_duality_test(&nu, &zero, 1.0, &McSettings::new(100, 1)).unwrap();
        assert_eq!(r[0].estimate.mean, 1.0);
        assert_eq!(r[0].reference, 1.0);
        assert_eq!(r[0].z_score, 0.0);
        assert!(all_pass(&r));
        let dm = duality_martingale_test(&nu, &zero, 1.0, 4, &McSettings::new(50, 1)).unwrap();
        assert!(dm.iter().all(|r| r.pass && r.z_score == 0.0));
    }

    #[test]
    fn negative_phi_is_rejected() {
        let nu = one_atom(1.0, &[0.0]);
        let neg = make_gaussian_bump(1, &[0.0], 1.0, -1.0).unwrap();
        assert!(matches!(
            laplace_duality_test(&nu, &neg, 1.0, &McSettings::new(10, 1)),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn two_atom_duality() {
        let nu = AtomicMeasure::new(1.0, 1, vec![-1.0, 1.0]).unwrap();
        let phi = make_gaussian_bump(1, &[0.0], 1.0, 1.0).unwrap();
        let r = laplace_duality_test(&nu, &phi, 1.0, &McSettings::new(20_000, 5)).unwrap();
        assert!(all_pass(&r), "{r:?}");
    }

    #[test]
    fn short_horizon_martingale() {
        let nu = one_atom(1.0, &[0.0]);
        let phi = make_gaussian_bump(1, &[0.0], 1.0, 1.0).unwrap();
        let r = martingale_mean_test(&nu, &phi, 1e-6, 1, &McSettings::new(1000, 3)).unwrap();
        assert!(r[0].estimate.mean.abs() < 1e-5 && r[0].estimate.stderr < 1e-5);
    }

    #[test]
    fn quadratic_variation_scales_quadratically() {
        let nu = AtomicMeasure::new(1.0, 1, vec![0.0, 0.4]).unwrap();
        let phi = make_gaussian_bump(1, &[0.0], 1.0, 1.0).unwrap();
        let a = quadratic_variation_reference(&nu, &phi, 1.0, 64).unwrap();
        let b = quadratic_variation_reference(&nu, &phi.scaled(2.0), 1.0, 64).unwrap();
        assert!((b - 4.0 * a).abs() <= 1e-14 * b);
        let c = make_constant(1, 3.0).unwrap();
        assert_eq!(quadratic_variation_reference(&nu, &c, 1.0, 64).unwrap(), 0.0);
        let r = quadratic_variation_test(&nu, &c, 1.0, 10, &McSettings::new(100, 1)).unwrap();
        assert!(r.iter().all(|r| r.pass && r.estimate.mean == 0.0));
    }

    #[test]
    fn quadratic_variation_matches_direct_integration() {
        // For phi = exp(-x^2/2) and alpha = 1, P_s (phi')^2 (0) = int y^2 e^{-y^2} N(0, s)(dy)
        // = s / (1 + 2s)^{3/2}.
        let nu = one_atom(1.0, &[0.0]);
        let phi = make_gaussian_bump(1, &[0.0], 1.0, 1.0).unwrap();
        let got = quadratic_variation_reference(&nu, &phi, 1.0, 64).unwrap();
        let n = 200_000;
        let h = 1.0 / n as f64;
        let f = |s: f64| s / (1.0 + 2.0 * s).powf(1.5);
        let simpson: f64 = (0..n)
            .map(|i| {
                let a = i as f64 * h;
                h / 6.0 * (f(a) + 4.0 * f(a + h / 2.0) + f(a + h))
            })
            .sum();
        assert!((got - simpson).abs() < 1e-10, "{got} vs {simpson}");
    }

    #[test]
    fn generating_function_single_particle() {
        let nu = one_atom(1.0, &[0.0]);
        let a = Rectangle::cube(1, -1.0, 1.0).unwrap();
        let r = generating_function_test(&nu, &a, 1.0, &[0.5, 1.0], &McSettings::new(20_000, 2)).unwrap();
        let h = normal_cdf(1.0) - normal_cdf(-1.0);
        assert!((h - 0.6826895).abs() < 1e-7);
        assert!((r[2].reference - (1.0 - 0.5 * h)).abs() < 1e-14);
        assert_eq!(r[3].reference, 1.0);
        assert_eq!(r[3].estimate.mean, 1.0);
        assert!(all_pass(&r), "{r:?}");
        assert!(generating_function_test(&nu, &a, 1.0, &[0.0], &McSettings::new(10, 2)).is_err());
    }

    #[test]
    fn blowup_single_term_and_regimes() {
        for d in [1, 2] {
            for t in [0.3, 1.0, 2.0] {
                let scan = blowup_scan(&[1], &[t], d).unwrap();
                let expect = (normal_cdf(1.0 / t.sqrt()) - 0.5).powi(d as i32);
                assert!((scan.value(1, t).unwrap() - expect).abs() < 1e-15);
            }
        }
        let ks = [100, 1000, 10_000, 100_000];
        let scan = blowup_scan(&ks, &[0.25, 1.0], 1).unwrap();
        assert_eq!(scan.rows.len(), 8);
        // 30-digit evaluations of the same partial sums.
        let oracle = [
            (0.25, [6.112659796750041, 7.990022641496027, 8.867772667310831, 9.211165419302437]),
            (1.0, [15.920900293581864, 73.50776374813285, 316.1626451013315, 1309.7462667073717]),
        ];
        for (t, values) in oracle {
            for (k, v) in ks.iter().zip(values) {
                let got = scan.value(*k, t).unwrap();
                assert!((got - v).abs() < 1e-12 * v, "K={k} t={t}: {got} vs {v}");
            }
        }
        assert_eq!(scan.reports.len(), 2);
        let convergent = &scan.reports[0];
        assert!((convergent.estimate.mean - 0.15283345649916302).abs() < 1e-11);
        assert!(!convergent.pass);
        assert!(scan.reports[1].pass);
        assert!((scan.reports[1].estimate.mean - 1309.7462667073717 / 316.1626451013315).abs() < 1e-11);
        assert!(scan.to_csv().starts_with("K,t,S_K\n100,2.5000000000000000e-1,"));
        assert!(blowup_scan(&[10, 10], &[1.0], 1).is_err());
    }

    #[test]
    fn poisson_preconditions() {
        let setup = PoissonSetup {
            intensity: 2.0,
            alpha: 1.0,
            bx: Rectangle::cube(1, 0.0, 1.0).unwrap(),
            pad: 1.0,
            sub_boxes: vec![Rectangle::cube(1, 0.0, 1.0).unwrap()],
            phi: None,
        };
        let s = McSettings::new(10, 1);
        assert!(matches!(poisson_invariance_test(&setup, 0.5, &s), Err(Error::Precondition(_))));
        let outside = PoissonSetup {
            sub_boxes: vec![Rectangle::cube(1, 0.5, 1.5).unwrap()],
            pad: 6.0,
            ..setup.clone()
        };
        assert!(matches!(poisson_invariance_test(&outside, 0.5, &s), Err(Error::Precondition(_))));
    }

    #[test]
    fn laplace_exponent_of_bump() {
        let phi = make_compact_bump(1, &[0.5], 0.5, 1.0).unwrap();
        let support = phi.support_box().unwrap();
        let got = laplace_exponent_integral(&phi, &support, 1.0, &GaussLegendre::new(64).unwrap());
        let n = 400_000;
        let h = 1.0 / n as f64;
        let mid: f64 = (0..n).map(|i| 1.0 - (-phi.eval(&[(i as f64 + 0.5) * h])).exp()).sum::<f64>() * h;
        assert!((got - mid).abs() < 1e-9, "{got} {mid}");
    }

    #[test]
    fn empty_measure_moments() {
        let nu = AtomicMeasure::empty(1.0, 1).unwrap();
        let r = moment_bound_test(&nu, 1.0, &McSettings::new(10, 1)).unwrap();
        assert!(r.iter().all(|r| r.pass && r.estimate.mean == 0.0 && r.reference == 0.0));
    }

    #[test]
    fn single_particle_second_moment() {
        let nu = one_atom(1.0, &[0.3]);
        let heat = HeatEvaluator::with_default_nodes(1.0, 1).unwrap();
        let kappa = make_kappa(1).unwrap();
        let r = moment_bound_test(&nu, 0.5, &McSettings::new(20_000, 9)).unwrap();
        let direct = heat.expect(|y| kappa.eval(y).powi(2), 0.5, &[0.3]).unwrap();
        assert!((r[1].reference - direct).abs() < 1e-14);
        assert!(all_pass(&r), "{r:?}");
    }

    #[test]
    fn reports_are_reproducible() {
        let nu = AtomicMeasure::new(1.0, 1, vec![0.0, 0.5]).unwrap();
        let phi = make_compact_bump(1, &[0.0], 1.0, 1.0).unwrap();
        let s = McSettings::new(500, 11);
        let a = laplace_duality_test(&nu, &phi, 0.5, &s).unwrap();
        let b = laplace_duality_test(&nu, &phi, 0.5, &s).unwrap();
        assert_eq!(reports_to_csv(&a), reports_to_csv(&b));
    }
}
