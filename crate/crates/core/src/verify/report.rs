//! Verification reports and their CSV form.

use std::fmt::Write as _;

use crate::output::{csv_text, fmt_real};
use crate::stats::MCEstimate;

pub const REPORT_CSV_HEADER: &str =
    "test_name,alpha,d,t,replicas,seed,estimate,stderr,reference,z_score,pass,notes";

/// Default bound on `|z|` for a single check.
pub const Z_MAX: f64 = 3.0;
/// Bound on `|z|` when more than [`MANY_CHECKS`] checks run together.
pub const Z_MAX_MANY: f64 = 3.5;
pub const MANY_CHECKS: usize = 10;

/// `z_max` for a batch of `checks` simultaneous comparisons.
pub fn z_max_for(checks: usize, base: f64) -> f64 {
    if checks > MANY_CHECKS {
        base.max(Z_MAX_MANY)
    } else {
        base
    }
}

/// How `pass` is decided from the estimate and the reference.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Criterion {
    /// `|z| <= z_max`.
    ZScore { z_max: f64 },
    /// `|estimate - reference| < limit`.
    Below { limit: f64 },
    /// `estimate >= reference`.
    AtLeast,
    /// `estimate == reference`.
    Exact,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerificationReport {
    pub test_name: String,
    pub alpha: f64,
    pub dim: usize,
    pub t: f64,
    pub seed: u64,
    pub estimate: MCEstimate,
    pub reference: f64,
    pub z_score: f64,
    pub pass: bool,
    pub criterion: Criterion,
    pub notes: String,
}

impl VerificationReport {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        test_name: impl Into<String>,
        alpha: f64,
        dim: usize,
        t: f64,
        seed: u64,
        estimate: MCEstimate,
        reference: f64,
        criterion: Criterion,
        notes: impl Into<String>,
    ) -> Self {
        let mut r = Self {
            test_name: test_name.into(),
            alpha,
            dim,
            t,
            seed,
            estimate,
            reference,
            z_score: f64::NAN,
            pass: false,
            criterion,
            notes: notes.into(),
        };
        r.judge();
        r
    }

    /// A deterministic comparison (no sampling).
    #[allow(clippy::too_many_arguments)]
    pub fn exact_value(
        test_name: impl Into<String>,
        alpha: f64,
        dim: usize,
        t: f64,
        value: f64,
        reference: f64,
        criterion: Criterion,
        notes: impl Into<String>,
    ) -> Self {
        let estimate = MCEstimate {
            mean: value,
            stderr: 0.0,
            replicas: 0,
        };
        Self::new(test_name, alpha, dim, t, 0, estimate, reference, criterion, notes)
    }

    fn judge(&mut self) {
        let est = self.estimate.mean;
        self.z_score = self.estimate.z_score(self.reference);
        self.pass = match self.criterion {
            Criterion::ZScore { z_max } => self.z_score.abs() <= z_max,
            Criterion::Below { limit } => (est - self.reference).abs() < limit,
            Criterion::AtLeast => est >= self.reference,
            Criterion::Exact => est == self.reference,
        };
    }

    /// Shifts the reference and re-decides `pass`; a harness self-test hook.
    pub fn offset_reference(&mut self, offset: f64) {
        if offset != 0.0 {
            self.reference += offset;
            self.notes = if self.notes.is_empty() {
                format!("reference offset {offset}")
            } else {
                format!("{}; reference offset {offset}", self.notes)
            };
            self.judge();
        }
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            csv_text(&self.test_name),
            fmt_real(self.alpha),
            self.dim,
            fmt_real(self.t),
            self.estimate.replicas,
            self.seed,
            fmt_real(self.estimate.mean),
            fmt_real(self.estimate.stderr),
            fmt_real(self.reference),
            fmt_real(self.z_score),
            self.pass,
            csv_text(&self.notes)
        )
    }

    /// One human-readable line.
    pub fn summary(&self) -> String {
        format!(
            "[{}] {} t={} estimate={:.6e} (se {:.2e}) reference={:.6e} z={:.3}{}",
            if self.pass { "PASS" } else { "FAIL" },
            self.test_name,
            self.t,
            self.estimate.mean,
            self.estimate.stderr,
            self.reference,
            self.z_score,
            if self.notes.is_empty() {
                String::new()
            } else {
                format!(" ({})", self.notes)
            }
        )
    }
}

pub fn reports_to_csv(reports: &[VerificationReport]) -> String {
    let mut s = String::from(REPORT_CSV_HEADER);
    s.push('\n');
    for r in reports {
        let _ = writeln!(s, "{}", r.csv_row());
    }
    s
}

pub fn all_pass(reports: &[VerificationReport]) -> bool {
    reports.iter().all(|r| r.pass)
}
