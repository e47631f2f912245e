//! Normal distribution function, discrete pmfs and Monte Carlo summaries.

use std::f64::consts::SQRT_2;

/// Standard normal CDF through the complementary error function.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / SQRT_2)
}

/// Upper tail `1 - Phi(x)`.
pub fn normal_sf(x: f64) -> f64 {
    0.5 * libm::erfc(x / SQRT_2)
}

/// `Phi(b) - Phi(a)` for `a <= b`, evaluated in whichever tail avoids cancellation.
pub fn normal_interval(a: f64, b: f64) -> f64 {
    if a >= b {
        0.0
    } else if a >= 0.0 {
        normal_sf(a) - normal_sf(b)
    } else {
        normal_cdf(b) - normal_cdf(a)
    }
}

/// Monte Carlo mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MCEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub replicas: usize,
}

impl MCEstimate {
    /// Sample mean and `s / sqrt(n)`; values are summed in the given order.
    pub fn from_samples(values: &[f64]) -> Self {
        let n = values.len();
        if n == 0 {
            return Self {
                mean: f64::NAN,
                stderr: f64::NAN,
                replicas: 0,
            };
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let stderr = if n > 1 {
            let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
            (var / n as f64).sqrt()
        } else {
            0.0
        };
        Self {
            mean,
            stderr,
            replicas: n,
        }
    }

    /// `(mean - reference) / stderr`, taken as 0 when both the spread and the
    /// discrepancy vanish.
    pub fn z_score(&self, reference: f64) -> f64 {
        let diff = self.mean - reference;
        if self.stderr > 0.0 {
            diff / self.stderr
        } else if diff == 0.0 {
            0.0
        } else {
            diff.signum() * f64::INFINITY
        }
    }
}

/// Pearson correlation of paired samples.
pub fn correlation(pairs: &[(f64, f64)]) -> f64 {
    let n = pairs.len() as f64;
    let mx = pairs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pairs.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in pairs {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    sxy / (sxx * syy).sqrt()
}

/// Poisson pmf on `0..=n_max`, computed by the stable recurrence.
pub fn poisson_pmf(mean: f64, n_max: usize) -> Vec<f64> {
    let mut p = Vec::with_capacity(n_max + 1);
    let mut cur = (-mean).exp();
    for k in 0..=n_max {
        p.push(cur);
        cur *= mean / (k + 1) as f64;
    }
    p
}

/// Distribution of a sum of independent Bernoulli(`p_i`) variables.
pub fn poisson_binomial_pmf(probs: &[f64]) -> Vec<f64> {
    let mut pmf = vec![1.0];
    for &p in probs {
        let mut next = vec![0.0; pmf.len() + 1];
        for (k, &q) in pmf.iter().enumerate() {
            next[k] += q * (1.0 - p);
            next[k + 1] += q * p;
        }
        pmf = next;
    }
    pmf
}

/// Empirical pmf of counts on `0..=n_max`; mass above `n_max` is returned separately.
pub fn empirical_pmf(counts: &[usize], n_max: usize) -> (Vec<f64>, f64) {
    let n = counts.len() as f64;
    let mut pmf = vec![0.0; n_max + 1];
    let mut overflow = 0.0;
    for &c in counts {
        if c <= n_max {
            pmf[c] += 1.0;
        } else {
            overflow += 1.0;
        }
    }
    pmf.iter_mut().for_each(|v| *v /= n);
    (pmf, overflow / n)
}

/// Total variation distance between two pmfs on `0..`; missing entries count as 0.
pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    let n = p.len().max(q.len());
    let get = |v: &[f64], k: usize| v.get(k).copied().unwrap_or(0.0);
    let inside: f64 = (0..n).map(|k| (get(p, k) - get(q, k)).abs()).sum();
    let tail_p = 1.0 - p.iter().sum::<f64>();
    let tail_q = 1.0 - q.iter().sum::<f64>();
    0.5 * (inside + (tail_p - tail_q).abs().max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normal_cdf_reference_values() {
        // reference values from mpmath at 30 digits
        let cases = [
            (0.0, 0.5),
            (1.0, 0.841_344_746_068_542_9),
            (-1.0, 0.158_655_253_931_457_05),
            (-5.0, 2.866_515_718_791_939e-7),
            (-10.0, 7.619_853_024_160_527e-24),
            (2.5, 0.993_790_334_674_223_9),
        ];
        for (x, want) in cases {
            let got = normal_cdf(x);
            assert!(((got - want) / want).abs() < 1e-12, "{x}: {got} vs {want}");
        }
        let v = normal_interval(-1.0, 1.0);
        assert!((v - 0.682_689_492_137_085_9).abs() < 1e-15);
        let tail = normal_interval(8.0, 9.0);
        let want = 6.219_831_985_865_830_4e-16;
        assert!(((tail - want) / want).abs() < 1e-10, "{tail}");
        assert_eq!(normal_interval(1.0, 1.0), 0.0);
    }

    #[test]
    fn estimate_and_z() {
        let e = MCEstimate::from_samples(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(e.mean, 2.5);
        assert!((e.stderr - (5.0f64 / 3.0 / 4.0).sqrt()).abs() < 1e-15);
        let c = MCEstimate::from_samples(&[1.0; 10]);
        assert_eq!(c.stderr, 0.0);
        assert_eq!(c.z_score(1.0), 0.0);
        assert_eq!(c.z_score(0.5), f64::INFINITY);
    }

    #[test]
    fn pmfs_are_normalized() {
        let p = poisson_pmf(2.0, 60);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-14);
        assert!((p[2] - 2.0 * (-2.0f64).exp()).abs() < 1e-16);
        let b = poisson_binomial_pmf(&[0.5, 0.5]);
        assert_eq!(b, vec![0.25, 0.5, 0.25]);
        assert!(total_variation(&p, &p) < 1e-16);
        assert!((total_variation(&[1.0], &[0.0, 1.0]) - 1.0).abs() < 1e-15);
    }
}
