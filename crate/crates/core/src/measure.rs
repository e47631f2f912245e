//! Atomic tempered measures `(1/alpha) sum_i delta_{x_i}` and Poisson sampling.

use std::fmt::Write as _;

use rand::Rng;
use rand_distr::{Distribution, Poisson};

use crate::error::{check_dim, param, Error, Result};
use crate::output::fmt_real;
use crate::testfn::TestFunction;

/// Half-open box `prod_k [a_k, b_k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Rectangle {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl Rectangle {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.is_empty() {
            return Err(param("rectangle must have positive dimension"));
        }
        check_dim(lower.len(), upper.len())?;
        for (a, b) in lower.iter().zip(&upper) {
            if !a.is_finite() || !b.is_finite() || a > b {
                return Err(param(format!("rectangle side [{a}, {b}) is invalid")));
            }
        }
        Ok(Self { lower, upper })
    }

    /// `[lo, hi)^d`.
    pub fn cube(d: usize, lo: f64, hi: f64) -> Result<Self> {
        Self::new(vec![lo; d], vec![hi; d])
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    /// True when some side has zero length.
    pub fn is_empty(&self) -> bool {
        self.lower.iter().zip(&self.upper).any(|(a, b)| a >= b)
    }

    pub fn volume(&self) -> f64 {
        self.lower.iter().zip(&self.upper).map(|(a, b)| b - a).product()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.lower
            .iter()
            .zip(&self.upper)
            .zip(x)
            .all(|((a, b), v)| *a <= *v && *v < *b)
    }

    /// The box grown by `pad` in every coordinate direction.
    pub fn padded(&self, pad: f64) -> Result<Self> {
        if !(pad >= 0.0) {
            return Err(param("pad must be non-negative"));
        }
        Self::new(
            self.lower.iter().map(|a| a - pad).collect(),
            self.upper.iter().map(|b| b + pad).collect(),
        )
    }

    /// True when `other` lies inside `self` (closed inclusion).
    pub fn encloses(&self, other: &Rectangle) -> bool {
        self.dim() == other.dim()
            && self
                .lower
                .iter()
                .zip(&other.lower)
                .all(|(a, c)| a <= c)
            && self.upper.iter().zip(&other.upper).all(|(b, c)| c <= b)
    }
}

/// `(1/alpha) sum_i delta_{x_i}` with atoms stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomicMeasure {
    alpha: f64,
    dim: usize,
    coords: Vec<f64>,
}

impl AtomicMeasure {
    pub fn new(alpha: f64, dim: usize, coords: Vec<f64>) -> Result<Self> {
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(param(format!("alpha must be positive, got {alpha}")));
        }
        if dim == 0 {
            return Err(param("dimension must be positive"));
        }
        if !coords.len().is_multiple_of(dim) {
            return Err(param(format!(
                "{} coordinates do not split into points of dimension {dim}",
                coords.len()
            )));
        }
        if coords.iter().any(|v| !v.is_finite()) {
            return Err(param("atom coordinates must be finite"));
        }
        Ok(Self { alpha, dim, coords })
    }

    pub fn from_points(alpha: f64, dim: usize, points: &[Vec<f64>]) -> Result<Self> {
        let mut coords = Vec::with_capacity(points.len() * dim);
        for p in points {
            check_dim(dim, p.len())?;
            coords.extend_from_slice(p);
        }
        Self::new(alpha, dim, coords)
    }

    pub fn empty(alpha: f64, dim: usize) -> Result<Self> {
        Self::new(alpha, dim, Vec::new())
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn atoms(&self) -> std::slice::ChunksExact<'_, f64> {
        self.coords.chunks_exact(self.dim)
    }

    pub fn with_alpha(&self, alpha: f64) -> Result<Self> {
        Self::new(alpha, self.dim, self.coords.clone())
    }

    pub fn total_mass(&self) -> f64 {
        self.len() as f64 / self.alpha
    }

    /// Sum of `f` over atoms, divided by alpha once.
    pub fn pair_with(&self, f: impl Fn(&[f64]) -> f64) -> f64 {
        self.atoms().map(f).sum::<f64>() / self.alpha
    }

    /// Number of atoms in `a`; this is `alpha * mu(A)` exactly.
    pub fn count_atoms(&self, a: &Rectangle) -> Result<usize> {
        check_dim(self.dim, a.dim())?;
        Ok(self.atoms().filter(|x| a.contains(x)).count())
    }

    pub fn to_csv(&self) -> String {
        let mut s = format!("alpha={},d={}\n", fmt_real(self.alpha), self.dim);
        let header: Vec<String> = (1..=self.dim).map(|k| format!("x_{k}")).collect();
        s.push_str(&header.join(","));
        s.push('\n');
        for atom in self.atoms() {
            let row: Vec<String> = atom.iter().map(|v| fmt_real(*v)).collect();
            let _ = writeln!(s, "{}", row.join(","));
        }
        s
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let meta = lines.next().ok_or_else(|| param("missing alpha/d header"))?;
        let mut alpha = None;
        let mut dim = None;
        for field in meta.split(',') {
            let (k, v) = field
                .split_once('=')
                .ok_or_else(|| param(format!("bad header field '{field}'")))?;
            match k.trim() {
                "alpha" => alpha = v.trim().parse::<f64>().ok(),
                "d" => dim = v.trim().parse::<usize>().ok(),
                other => return Err(param(format!("unknown header field '{other}'"))),
            }
        }
        let alpha = alpha.ok_or_else(|| param("header lacks alpha"))?;
        let dim = dim.ok_or_else(|| param("header lacks d"))?;
        let columns = lines.next().ok_or_else(|| param("missing column header"))?;
        check_dim(dim, columns.split(',').count())?;
        let mut coords = Vec::new();
        for line in lines {
            let row: Vec<&str> = line.split(',').collect();
            check_dim(dim, row.len())?;
            for v in row {
                coords.push(
                    v.trim()
                        .parse::<f64>()
                        .map_err(|_| param(format!("bad coordinate '{v}'")))?,
                );
            }
        }
        Self::new(alpha, dim, coords)
    }
}

/// `<mu, phi> = (1/alpha) sum_i phi(x_i)`.
pub fn pair(mu: &AtomicMeasure, phi: &TestFunction) -> Result<f64> {
    check_dim(mu.dim(), phi.dim())?;
    Ok(mu.pair_with(|x| phi.eval(x)))
}

/// `mu(A)`; the atom count is taken first and divided by alpha once.
pub fn count_in_rect(mu: &AtomicMeasure, a: &Rectangle) -> Result<f64> {
    Ok(mu.count_atoms(a)? as f64 / mu.alpha())
}

/// Homogeneous Poisson process of intensity `lambda` on `bx` grown by `pad`,
/// returned with unit atom weight.
pub fn sample_poisson<R: Rng + ?Sized>(
    lambda: f64,
    bx: &Rectangle,
    pad: f64,
    rng: &mut R,
) -> Result<AtomicMeasure> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(param(format!("intensity must be positive, got {lambda}")));
    }
    let region = bx.padded(pad)?;
    let mean = lambda * region.volume();
    let n = if mean > 0.0 {
        let dist = Poisson::new(mean).map_err(|e| param(format!("poisson mean {mean}: {e}")))?;
        dist.sample(rng) as usize
    } else {
        0
    };
    let d = region.dim();
    let mut coords = Vec::with_capacity(n * d);
    for _ in 0..n {
        for k in 0..d {
            let (a, b) = (region.lower[k], region.upper[k]);
            coords.push(a + (b - a) * rng.random::<f64>());
        }
    }
    AtomicMeasure::new(1.0, d, coords)
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitialKind {
    ExplicitList,
    SqrtLogLattice { count: usize },
    PoissonOnBox { intensity: f64, bx: Rectangle, pad: f64 },
}

/// A (possibly truncated) initial configuration together with its realized atoms.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialFamily {
    pub kind: InitialKind,
    pub dim: usize,
    pub atoms: Vec<f64>,
}

impl InitialFamily {
    pub fn explicit(dim: usize, atoms: Vec<f64>) -> Result<Self> {
        if dim == 0 || !atoms.len().is_multiple_of(dim) {
            return Err(param("atom list does not match dimension"));
        }
        Ok(Self {
            kind: InitialKind::ExplicitList,
            dim,
            atoms,
        })
    }

    pub fn poisson<R: Rng + ?Sized>(intensity: f64, bx: &Rectangle, pad: f64, rng: &mut R) -> Result<Self> {
        let sample = sample_poisson(intensity, bx, pad, rng)?;
        Ok(Self {
            kind: InitialKind::PoissonOnBox {
                intensity,
                bx: bx.clone(),
                pad,
            },
            dim: sample.dim(),
            atoms: sample.coords().to_vec(),
        })
    }

    /// Number of realized atoms (the truncation level for infinite families).
    pub fn len(&self) -> usize {
        self.atoms.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn to_measure(&self, alpha: f64) -> Result<AtomicMeasure> {
        AtomicMeasure::new(alpha, self.dim, self.atoms.clone())
    }
}

/// Atoms `sqrt(ln k) e_1` for `k = 1..=K`.
pub fn make_sqrt_log_family(count: usize, d: usize) -> Result<InitialFamily> {
    if count == 0 {
        return Err(param("family size must be at least 1"));
    }
    if d == 0 {
        return Err(Error::Parameter("dimension must be positive".into()));
    }
    let mut atoms = vec![0.0; count * d];
    for k in 1..=count {
        atoms[(k - 1) * d] = (k as f64).ln().sqrt();
    }
    Ok(InitialFamily {
        kind: InitialKind::SqrtLogLattice { count },
        dim: d,
        atoms,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testfn::{make_compact_bump, make_gaussian_bump};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn pairing_examples() {
        let phi = make_gaussian_bump(1, &[0.0], 1.0, 1.0).unwrap();
        assert_eq!(pair(&AtomicMeasure::empty(1.0, 1).unwrap(), &phi).unwrap(), 0.0);
        let one = AtomicMeasure::new(1.0, 1, vec![0.0]).unwrap();
        assert_eq!(pair(&one, &phi).unwrap(), 1.0);
        let two = AtomicMeasure::new(2.0, 1, vec![0.0, 0.0]).unwrap();
        assert_eq!(pair(&two, &phi).unwrap(), 1.0);
        let phi2 = make_gaussian_bump(2, &[0.0, 0.0], 1.0, 1.0).unwrap();
        assert!(matches!(pair(&one, &phi2), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn counting_is_half_open() {
        let a = Rectangle::new(vec![0.0], vec![2.0]).unwrap();
        let empty = AtomicMeasure::empty(1.0, 1).unwrap();
        assert_eq!(count_in_rect(&empty, &a).unwrap(), 0.0);
        let mu = AtomicMeasure::new(1.0, 1, vec![0.5, 1.5, 2.5]).unwrap();
        assert_eq!(count_in_rect(&mu, &a).unwrap(), 2.0);
        let edges = AtomicMeasure::new(1.0, 1, vec![0.0, 2.0]).unwrap();
        assert_eq!(edges.count_atoms(&a).unwrap(), 1);
        let heavy = AtomicMeasure::new(3.0, 1, vec![0.5, 1.5, 2.5]).unwrap();
        assert_eq!(count_in_rect(&heavy, &a).unwrap() * 3.0, 2.0);
    }

    #[test]
    fn measure_validation() {
        assert!(AtomicMeasure::new(0.0, 1, vec![]).is_err());
        assert!(AtomicMeasure::new(-1.0, 1, vec![]).is_err());
        assert!(AtomicMeasure::new(1.0, 2, vec![1.0]).is_err());
        assert!(AtomicMeasure::new(1.0, 1, vec![f64::NAN]).is_err());
        let mu = AtomicMeasure::new(4.0, 2, vec![0.0; 6]).unwrap();
        assert_eq!(mu.total_mass(), 0.75);
    }

    #[test]
    fn sqrt_log_family() {
        let f = make_sqrt_log_family(1, 2).unwrap();
        assert_eq!(f.atoms, vec![0.0, 0.0]);
        let f = make_sqrt_log_family(3, 1).unwrap();
        assert_eq!(f.atoms[0], 0.0);
        assert!((f.atoms[1] - 0.832_554_611_157_697_8).abs() < 1e-12);
        assert!((f.atoms[2] - 1.048_147_073_968_205).abs() < 1e-12);
        let big = make_sqrt_log_family(1000, 2).unwrap();
        assert!(big.atoms.chunks(2).zip(big.atoms.chunks(2).skip(1)).all(|(a, b)| a[0] <= b[0]));
        assert!(make_sqrt_log_family(0, 1).is_err());
    }

    #[test]
    fn poisson_counts_have_the_right_mean() {
        let bx = Rectangle::new(vec![0.0], vec![1.0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 100_000;
        let total: usize = (0..n)
            .map(|_| sample_poisson(2.0, &bx, 0.0, &mut rng).unwrap().len())
            .sum();
        let mean = total as f64 / n as f64;
        assert!((mean - 2.0).abs() < 3.0 * (2.0f64 / n as f64).sqrt(), "{mean}");
        assert!(sample_poisson(0.0, &bx, 0.0, &mut rng).is_err());
    }

    #[test]
    fn degenerate_box_has_no_atoms() {
        let bx = Rectangle::new(vec![1.0, 0.0], vec![1.0, 5.0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            assert!(sample_poisson(50.0, &bx, 0.0, &mut rng).unwrap().is_empty());
        }
    }

    #[test]
    fn campbell_formula() {
        // E<Xi, phi> = lambda * int phi; the integral comes from a fine
        // midpoint rule on the support.
        let phi = make_compact_bump(1, &[0.5], 0.4, 1.0).unwrap();
        let m = 200_000;
        let h = 0.8 / m as f64;
        let integral: f64 = (0..m).map(|i| phi.eval(&[0.1 + (i as f64 + 0.5) * h])).sum::<f64>() * h;
        let lambda = 3.0;
        let bx = Rectangle::new(vec![0.0], vec![1.0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 100_000;
        let vals: Vec<f64> = (0..n)
            .map(|_| pair(&sample_poisson(lambda, &bx, 0.0, &mut rng).unwrap(), &phi).unwrap())
            .collect();
        let mean = vals.iter().sum::<f64>() / n as f64;
        let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let se = (var / n as f64).sqrt();
        assert!((mean - lambda * integral).abs() < 3.0 * se, "{mean} vs {}", lambda * integral);
    }

    #[test]
    fn disjoint_counts_are_uncorrelated() {
        let bx = Rectangle::new(vec![0.0], vec![2.0]).unwrap();
        let left = Rectangle::new(vec![0.0], vec![1.0]).unwrap();
        let right = Rectangle::new(vec![1.0], vec![2.0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 10_000;
        let pairs: Vec<(f64, f64)> = (0..n)
            .map(|_| {
                let s = sample_poisson(1.5, &bx, 0.0, &mut rng).unwrap();
                (
                    s.count_atoms(&left).unwrap() as f64,
                    s.count_atoms(&right).unwrap() as f64,
                )
            })
            .collect();
        let corr = crate::stats::correlation(&pairs);
        assert!(corr.abs() < 0.05, "{corr}");
    }

    #[test]
    fn csv_round_trip() {
        let mu = AtomicMeasure::new(2.5, 2, vec![0.1, -3.0, 1.0 / 3.0, 7.25]).unwrap();
        let text = mu.to_csv();
        assert!(text.starts_with("alpha=2.5000000000000000e0,d=2\nx_1,x_2\n"));
        assert_eq!(AtomicMeasure::from_csv(&text).unwrap(), mu);
    }
}
