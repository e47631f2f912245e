//! Exact simulation of `mu_t = (1/alpha) sum_i delta_{B^i_{alpha t}}`.
//!
//! Particles are independent Brownian motions run at speed `alpha`; every step
//! uses the exact Gaussian transition, so there is no time discretization error.

use std::fmt::Write as _;

use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{check_dim, param, Result};
use crate::measure::{AtomicMeasure, InitialFamily};
use crate::output::fmt_real;
use crate::rng::{replica_stream, Purpose};
use crate::testfn::TestFunction;

/// Positions of `N` independent particles and the stream that moves them.
#[derive(Debug, Clone)]
pub struct ParticleEnsemble {
    alpha: f64,
    dim: usize,
    positions: Vec<f64>,
    time: f64,
    master_seed: u64,
    replica_id: u64,
    rng: ChaCha8Rng,
}

impl PartialEq for ParticleEnsemble {
    fn eq(&self, other: &Self) -> bool {
        self.alpha.to_bits() == other.alpha.to_bits()
            && self.dim == other.dim
            && self.time.to_bits() == other.time.to_bits()
            && self.master_seed == other.master_seed
            && self.replica_id == other.replica_id
            && self.positions.len() == other.positions.len()
            && self
                .positions
                .iter()
                .zip(&other.positions)
                .all(|(a, b)| a.to_bits() == b.to_bits())
            && self.rng == other.rng
    }
}

/// Particles at the atoms of `nu`, time 0, stream derived from `(master_seed, replica_id)`.
pub fn init_ensemble(nu: &AtomicMeasure, master_seed: u64, replica_id: u64) -> ParticleEnsemble {
    ParticleEnsemble {
        alpha: nu.alpha(),
        dim: nu.dim(),
        positions: nu.coords().to_vec(),
        time: 0.0,
        master_seed,
        replica_id,
        rng: replica_stream(master_seed, Purpose::Dynamics, replica_id),
    }
}

pub fn init_from_family(
    family: &InitialFamily,
    alpha: f64,
    master_seed: u64,
    replica_id: u64,
) -> Result<ParticleEnsemble> {
    Ok(init_ensemble(&family.to_measure(alpha)?, master_seed, replica_id))
}

impl ParticleEnsemble {
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.positions.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn replica_id(&self) -> u64 {
        self.replica_id
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn particles(&self) -> std::slice::ChunksExact<'_, f64> {
        self.positions.chunks_exact(self.dim)
    }

    /// Advance by `dt`: every coordinate gets an independent `N(0, alpha dt)` increment.
    pub fn evolve(&mut self, dt: f64) -> Result<()> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(param(format!("time step must be positive, got {dt}")));
        }
        let sd = (self.alpha * dt).sqrt();
        for p in self.positions.iter_mut() {
            let xi: f64 = StandardNormal.sample(&mut self.rng);
            *p += sd * xi;
        }
        self.time += dt;
        Ok(())
    }

    /// Move to absolute time `t >= self.time()`; a no-op when already there.
    pub fn evolve_to(&mut self, t: f64) -> Result<()> {
        if t == self.time {
            return Ok(());
        }
        if t < self.time {
            return Err(param(format!("cannot evolve backwards from {} to {t}", self.time)));
        }
        self.evolve(t - self.time)?;
        self.time = t;
        Ok(())
    }

    /// Current empirical measure `(1/alpha) sum_i delta_{X_i}`.
    pub fn measure(&self) -> AtomicMeasure {
        AtomicMeasure::new(self.alpha, self.dim, self.positions.clone()).expect("ensemble state is a valid measure")
    }

    /// `<mu_t, f>` for an arbitrary integrand.
    pub fn pair_with(&self, f: impl Fn(&[f64]) -> f64) -> f64 {
        self.particles().map(f).sum::<f64>() / self.alpha
    }
}

/// Consumes an ensemble, returning it advanced by `dt`.
pub fn evolve(mut e: ParticleEnsemble, dt: f64) -> Result<ParticleEnsemble> {
    e.evolve(dt)?;
    Ok(e)
}

/// `<mu_t, phi>`, `<mu_t, Laplacian phi>` and `<mu_t, |grad phi|^2>` along a grid.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PhiTrace {
    pub pair: Vec<f64>,
    pub pair_lap: Vec<f64>,
    pub pair_gradsq: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathRecord {
    pub replica_id: u64,
    pub time_grid: Vec<f64>,
    pub snapshots: Vec<AtomicMeasure>,
    pub traces: Vec<PhiTrace>,
}

pub fn check_grid(time_grid: &[f64]) -> Result<()> {
    if time_grid.first() != Some(&0.0) {
        return Err(param("time grid must start at 0"));
    }
    if time_grid.windows(2).any(|w| !(w[1] > w[0]) || !w[1].is_finite()) {
        return Err(param("time grid must be strictly increasing"));
    }
    Ok(())
}

/// `n` equal steps on `[0, t_end]`.
pub fn uniform_grid(t_end: f64, steps: usize) -> Result<Vec<f64>> {
    if !(t_end > 0.0) || steps == 0 {
        return Err(param("uniform grid needs t_end > 0 and at least one step"));
    }
    Ok((0..=steps).map(|i| t_end * i as f64 / steps as f64).collect())
}

fn record_traces(e: &ParticleEnsemble, phis: &[TestFunction], traces: &mut [PhiTrace], grad: &mut [f64]) {
    for (phi, tr) in phis.iter().zip(traces.iter_mut()) {
        let (mut s0, mut s1, mut s2) = (0.0, 0.0, 0.0);
        for x in e.particles() {
            s0 += phi.eval(x);
            s1 += phi.laplacian(x);
            phi.grad_into(x, grad);
            s2 += grad.iter().map(|g| g * g).sum::<f64>();
        }
        tr.pair.push(s0 / e.alpha);
        tr.pair_lap.push(s1 / e.alpha);
        tr.pair_gradsq.push(s2 / e.alpha);
    }
}

/// Walks one replica across `time_grid`, calling `visit` at every grid time
/// (including 0) before moving on.
pub fn walk_path(
    nu: &AtomicMeasure,
    time_grid: &[f64],
    master_seed: u64,
    replica_id: u64,
    mut visit: impl FnMut(usize, &ParticleEnsemble) -> Result<()>,
) -> Result<()> {
    check_grid(time_grid)?;
    let mut e = init_ensemble(nu, master_seed, replica_id);
    for (i, &t) in time_grid.iter().enumerate() {
        e.evolve_to(t)?;
        visit(i, &e)?;
    }
    Ok(())
}

/// Traces only; the same draws as [`sample_path`] without storing snapshots.
pub fn sample_traces(
    nu: &AtomicMeasure,
    time_grid: &[f64],
    phis: &[TestFunction],
    master_seed: u64,
    replica_id: u64,
) -> Result<Vec<PhiTrace>> {
    for phi in phis {
        check_dim(nu.dim(), phi.dim())?;
    }
    let mut traces = vec![PhiTrace::default(); phis.len()];
    let mut grad = vec![0.0; nu.dim()];
    walk_path(nu, time_grid, master_seed, replica_id, |_, e| {
        record_traces(e, phis, &mut traces, &mut grad);
        Ok(())
    })?;
    Ok(traces)
}

pub fn sample_path(
    nu: &AtomicMeasure,
    time_grid: &[f64],
    phis: &[TestFunction],
    master_seed: u64,
    replica_id: u64,
) -> Result<PathRecord> {
    for phi in phis {
        check_dim(nu.dim(), phi.dim())?;
    }
    let mut traces = vec![PhiTrace::default(); phis.len()];
    let mut snapshots = Vec::with_capacity(time_grid.len());
    let mut grad = vec![0.0; nu.dim()];
    walk_path(nu, time_grid, master_seed, replica_id, |_, e| {
        snapshots.push(e.measure());
        record_traces(e, phis, &mut traces, &mut grad);
        Ok(())
    })?;
    Ok(PathRecord {
        replica_id,
        time_grid: time_grid.to_vec(),
        snapshots,
        traces,
    })
}

pub const PATH_CSV_HEADER: &str = "replica_id,t,phi_id,pair,pair_lap,pair_gradsq";

impl PathRecord {
    /// Data rows (no header), ordered by time then test function.
    pub fn csv_rows(&self) -> String {
        let mut s = String::new();
        for (i, t) in self.time_grid.iter().enumerate() {
            for (k, tr) in self.traces.iter().enumerate() {
                let _ = writeln!(
                    s,
                    "{},{},{},{},{},{}",
                    self.replica_id,
                    fmt_real(*t),
                    k,
                    fmt_real(tr.pair[i]),
                    fmt_real(tr.pair_lap[i]),
                    fmt_real(tr.pair_gradsq[i])
                );
            }
        }
        s
    }
}

/// Header plus the rows of every record, in the given order.
pub fn paths_to_csv(records: &[PathRecord]) -> String {
    let mut s = String::from(PATH_CSV_HEADER);
    s.push('\n');
    for r in records {
        s.push_str(&r.csv_rows());
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::heat::HeatEvaluator;
    use crate::measure::{pair, Rectangle};
    use crate::par::map_replicas;
    use crate::stats::{correlation, MCEstimate};
    use crate::testfn::make_gaussian_bump;

    fn delta(alpha: f64, x: &[f64]) -> AtomicMeasure {
        AtomicMeasure::new(alpha, x.len(), x.to_vec()).unwrap()
    }

    #[test]
    fn init_and_determinism() {
        let nu = delta(1.0, &[0.0]);
        let e = init_ensemble(&nu, 9, 2);
        assert_eq!(e.len(), 1);
        assert_eq!(e.positions(), &[0.0]);
        assert_eq!(e.time(), 0.0);
        let mut a = init_ensemble(&nu, 9, 2);
        let mut b = init_ensemble(&nu, 9, 2);
        assert_eq!(a, b);
        a.evolve(0.3).unwrap();
        b.evolve(0.3).unwrap();
        assert_eq!(a, b);
        assert!(a.evolve(0.0).is_err());
        assert!(a.evolve(-1.0).is_err());
    }

    #[test]
    fn replicas_are_uncorrelated() {
        let nu = delta(1.0, &[0.0]);
        let pairs: Vec<(f64, f64)> = (0..10_000u64)
            .map(|i| {
                let mut a = init_ensemble(&nu, 5, 2 * i);
                let mut b = init_ensemble(&nu, 5, 2 * i + 1);
                a.evolve(1.0).unwrap();
                b.evolve(1.0).unwrap();
                (a.positions()[0], b.positions()[0])
            })
            .collect();
        assert!(correlation(&pairs).abs() < 0.05);
    }

    fn displacement_moments(alpha: f64, steps: &[f64], seed: u64) -> (MCEstimate, MCEstimate, f64) {
        let nu = delta(alpha, &[0.0]);
        let n = 100_000;
        let x: Vec<f64> = map_replicas(n, |r| {
            let mut e = init_ensemble(&nu, seed, r);
            for &dt in steps {
                e.evolve(dt).unwrap();
            }
            e.positions()[0]
        });
        let mean = MCEstimate::from_samples(&x);
        let sq: Vec<f64> = x.iter().map(|v| v * v).collect();
        let second = MCEstimate::from_samples(&sq);
        (mean, second, alpha * steps.iter().sum::<f64>())
    }

    #[test]
    fn exact_gaussian_marginals() {
        for (alpha, steps) in [(1.0, vec![1.0]), (4.0, vec![0.25]), (2.0, vec![0.35, 0.35])] {
            let (mean, second, var) = displacement_moments(alpha, &steps, 17);
            assert!(mean.mean.abs() < 3.0 * (var / 1e5).sqrt(), "{mean:?}");
            // E X^2 = var, SE of the second moment is var * sqrt(2 / n)
            assert!((second.mean - var).abs() < 3.0 * second.stderr, "{second:?} vs {var}");
        }
    }

    #[test]
    fn path_record_shape() {
        let nu = delta(1.0, &[0.2]);
        let phi = make_gaussian_bump(1, &[0.0], 1.0, 1.0).unwrap();
        let rec = sample_path(&nu, &[0.0], std::slice::from_ref(&phi), 1, 0).unwrap();
        assert_eq!(rec.snapshots.len(), 1);
        assert_eq!(rec.snapshots[0], nu);
        assert_eq!(rec.traces[0].pair, vec![phi.eval(&[0.2])]);

        let grid = uniform_grid(1.0, 10).unwrap();
        let rec = sample_path(&nu, &grid, std::slice::from_ref(&phi), 1, 0).unwrap();
        assert_eq!(rec.snapshots.len(), grid.len());
        for (snap, v) in rec.snapshots.iter().zip(&rec.traces[0].pair) {
            assert_eq!(pair(snap, &phi).unwrap(), *v);
            assert_eq!(snap.len(), 1);
        }
        let traces = sample_traces(&nu, &grid, &[phi], 1, 0).unwrap();
        assert_eq!(traces, rec.traces);
        assert!(sample_path(&nu, &[0.0, 0.5, 0.5], &[], 1, 0).is_err());
        assert!(sample_path(&nu, &[0.1, 0.5], &[], 1, 0).is_err());
    }

    #[test]
    fn mass_is_integer_on_snapshots() {
        let nu = AtomicMeasure::new(3.0, 2, vec![0.0, 0.0, 0.5, 0.5, -1.0, 0.2, 2.0, 2.0]).unwrap();
        let a = Rectangle::cube(2, -0.5, 1.0).unwrap();
        let rec = sample_path(&nu, &uniform_grid(2.0, 20).unwrap(), &[], 4, 1).unwrap();
        for snap in &rec.snapshots {
            let c = snap.count_atoms(&a).unwrap();
            assert!(c <= 4);
            assert_eq!(snap.total_mass(), 4.0 / 3.0);
        }
    }

    #[test]
    fn first_moment_matches_heat_semigroup() {
        let nu = AtomicMeasure::new(1.0, 1, vec![-0.5, 0.7]).unwrap();
        let phi = make_gaussian_bump(1, &[0.0], 0.8, 1.0).unwrap();
        let grid = uniform_grid(1.0, 4).unwrap();
        let h = HeatEvaluator::with_default_nodes(1.0, 1).unwrap();
        let traces: Vec<Vec<PhiTrace>> =
            map_replicas(10_000, |r| sample_traces(&nu, &grid, std::slice::from_ref(&phi), 23, r).unwrap());
        for (i, &t) in grid.iter().enumerate() {
            let vals: Vec<f64> = traces.iter().map(|tr| tr[0].pair[i]).collect();
            let est = MCEstimate::from_samples(&vals);
            let reference = h.pair(&nu, &phi, t).unwrap();
            if t == 0.0 {
                assert!((est.mean - reference).abs() < 1e-12);
                continue;
            }
            assert!(est.z_score(reference).abs() <= 3.0, "t={t}: {est:?} vs {reference}");
        }
    }

    #[test]
    fn csv_export() {
        let nu = delta(1.0, &[0.0]);
        let phi = make_gaussian_bump(1, &[0.0], 1.0, 1.0).unwrap();
        let rec = sample_path(&nu, &[0.0, 0.5], &[phi.clone(), phi], 3, 7).unwrap();
        let csv = paths_to_csv(&[rec]);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], PATH_CSV_HEADER);
        assert_eq!(lines.len(), 5);
        assert!(lines[1].starts_with("7,0.0000000000000000e0,0,1.0000000000000000e0,"));
    }
}
