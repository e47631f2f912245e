//! Executes a parsed configuration and writes its CSV files.

use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::config::{ExperimentConfig, Experiment, InitialSpec, PhiSpec};
use crate::measure::{make_sqrt_log_family, sample_poisson, AtomicMeasure};
use crate::rng::{replica_stream, Purpose};
use crate::testfn::{make_compact_bump, make_constant, make_gaussian_bump, make_kappa, TestFunction};
use crate::verify::{self, all_pass, reports_to_csv, McSettings, PoissonSetup, VerificationReport};

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] crate::config::ConfigError),

    #[error("{experiment}: {source}")]
    Verify {
        experiment: Experiment,
        #[source]
        source: crate::Error,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Reports and files produced by one run.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub reports: Vec<VerificationReport>,
    pub files: Vec<PathBuf>,
}

impl RunOutcome {
    pub fn all_pass(&self) -> bool {
        all_pass(&self.reports)
    }

    /// 0 when every report passes, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.all_pass() {
            0
        } else {
            1
        }
    }
}

/// Stream id of the one-off Poisson draw used as an initial condition.
const INITIAL_SAMPLE_STREAM: u64 = u64::MAX;

pub fn build_phi(spec: &PhiSpec, d: usize) -> crate::Result<TestFunction> {
    match spec {
        PhiSpec::Gaussian {
            center,
            width,
            amplitude,
        } => make_gaussian_bump(d, center, *width, *amplitude),
        PhiSpec::Compact {
            center,
            radius,
            amplitude,
        } => make_compact_bump(d, center, *radius, *amplitude),
        PhiSpec::Kappa => make_kappa(d),
        PhiSpec::Constant(c) => make_constant(d, *c),
    }
}

pub fn build_nu(cfg: &ExperimentConfig) -> crate::Result<AtomicMeasure> {
    let d = cfg.dimension;
    match cfg.nu.as_ref() {
        Some(InitialSpec::Atoms(coords)) => AtomicMeasure::new(cfg.alpha, d, coords.clone()),
        Some(InitialSpec::SqrtLog(k)) => make_sqrt_log_family(*k, d)?.to_measure(cfg.alpha),
        Some(InitialSpec::Poisson(lambda)) => {
            let bx = cfg
                .bx
                .as_ref()
                .ok_or_else(|| crate::Error::Parameter("poisson initial condition needs a box".into()))?;
            let mut rng = replica_stream(cfg.seed, Purpose::InitialCondition, INITIAL_SAMPLE_STREAM);
            sample_poisson(*lambda, bx, cfg.pad, &mut rng)?.with_alpha(cfg.alpha)
        }
        None => Err(crate::Error::Parameter("no initial condition configured".into())),
    }
}

fn settings(cfg: &ExperimentConfig) -> McSettings {
    McSettings {
        replicas: cfg.replicas,
        seed: cfg.seed,
        quad_nodes: cfg.quad_nodes,
        z_max: cfg.z_max,
    }
}

/// Reports for the configured experiment plus, for the blow-up scan, its table.
pub fn compute_reports(cfg: &ExperimentConfig) -> crate::Result<(Vec<VerificationReport>, Option<String>)> {
    let s = settings(cfg);
    let d = cfg.dimension;
    let phi = cfg.phi.as_ref().map(|p| build_phi(p, d)).transpose()?;
    let need_phi = || phi.clone().ok_or_else(|| crate::Error::Parameter("no test function configured".into()));
    let mut reports = Vec::new();
    let mut table = None;
    match cfg.experiment {
        Experiment::BlowupScan => {
            let scan = verify::blowup_scan(&cfg.k_values, &cfg.times, d)?;
            table = Some(scan.to_csv());
            reports = scan.reports;
        }
        Experiment::PoissonInvariance => {
            let setup = PoissonSetup {
                intensity: cfg.lambda.unwrap_or(0.0),
                alpha: cfg.alpha,
                bx: cfg
                    .bx
                    .clone()
                    .ok_or_else(|| crate::Error::Parameter("poisson invariance needs a box".into()))?,
                pad: cfg.pad,
                sub_boxes: cfg.sub_boxes.clone(),
                phi: phi.clone(),
            };
            for &t in &cfg.times {
                reports.extend(verify::poisson_invariance_test(&setup, t, &s)?);
            }
        }
        experiment => {
            let nu = build_nu(cfg)?;
            for &t in &cfg.times {
                let batch = match experiment {
                    Experiment::LaplaceDuality => verify::laplace_duality_test(&nu, &need_phi()?, t, &s)?,
                    Experiment::MartingaleMean => {
                        verify::martingale_mean_test(&nu, &need_phi()?, t, cfg.grid_steps, &s)?
                    }
                    Experiment::QuadraticVariation => {
                        verify::quadratic_variation_test(&nu, &need_phi()?, t, cfg.grid_steps, &s)?
                    }
                    Experiment::DualityMartingale => {
                        verify::duality_martingale_test(&nu, &need_phi()?, t, cfg.grid_steps, &s)?
                    }
                    Experiment::GeneratingFunction => {
                        let a = cfg
                            .rect
                            .as_ref()
                            .ok_or_else(|| crate::Error::Parameter("generating function needs 'rect'".into()))?;
                        verify::generating_function_test(&nu, a, t, &cfg.s_values, &s)?
                    }
                    Experiment::MomentBound => verify::moment_bound_test(&nu, t, &s)?,
                    Experiment::BlowupScan | Experiment::PoissonInvariance => unreachable!("handled above"),
                };
                reports.extend(batch);
            }
        }
    }
    for r in &mut reports {
        r.offset_reference(cfg.reference_offset);
    }
    Ok((reports, table))
}

fn resolve(out_dir: Option<&Path>, path: &str) -> PathBuf {
    match out_dir {
        Some(dir) => dir.join(path),
        None => PathBuf::from(path),
    }
}

fn write(path: &Path, contents: &str) -> Result<(), RunError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|source| RunError::Io {
            path: parent.to_path_buf(),
            source,
        })?;
    }
    fs::write(path, contents).map_err(|source| RunError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Runs the experiment and writes the report CSV to `output_path` (inside
/// `out_dir` when given). The blow-up scan also writes its `K,t,S_K` table
/// next to it with a `_table` suffix.
pub fn run_experiment(cfg: &ExperimentConfig, out_dir: Option<&Path>) -> Result<RunOutcome, RunError> {
    let (reports, table) = compute_reports(cfg).map_err(|source| RunError::Verify {
        experiment: cfg.experiment,
        source,
    })?;
    let report_path = resolve(out_dir, &cfg.output_path);
    write(&report_path, &reports_to_csv(&reports))?;
    let mut files = vec![report_path.clone()];
    if let Some(table) = table {
        let stem = report_path.file_stem().and_then(|s| s.to_str()).unwrap_or("blowup_scan");
        let table_path = report_path.with_file_name(format!("{stem}_table.csv"));
        write(&table_path, &table)?;
        files.push(table_path);
    }
    Ok(RunOutcome { reports, files })
}
