//! Built-in suite of exact sanity checks, one per elementary identity.

use crate::config::{parse_config, ConfigError};
use crate::dynamics::{init_ensemble, sample_path};
use crate::heat::HeatEvaluator;
use crate::hjb::ColeHopf;
use crate::measure::{count_in_rect, make_sqrt_log_family, pair, sample_poisson, AtomicMeasure, Rectangle};
use crate::rng::{replica_stream, Purpose};
use crate::runner::run_experiment;
use crate::testfn::{
    kappa_bound_check, make_compact_bump, make_constant, make_gaussian_bump, make_kappa, seminorm_sup, Seminorm,
    TestFunction,
};
use crate::verify::{self, McSettings, PoissonSetup};

type Check = fn() -> Result<(), String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn ok<T>(r: crate::Result<T>) -> Result<T, String> {
    r.map_err(|e| e.to_string())
}

fn bump() -> TestFunction {
    make_gaussian_bump(1, &[0.0], 1.0, 1.0).expect("valid parameters")
}

fn zero(d: usize) -> TestFunction {
    make_constant(d, 0.0).expect("valid parameters")
}

fn atoms(alpha: f64, d: usize, coords: &[f64]) -> AtomicMeasure {
    AtomicMeasure::new(alpha, d, coords.to_vec()).expect("valid measure")
}

const PROBES: [f64; 5] = [-2.0, -0.5, 0.0, 0.7, 3.0];

fn gaussian_at_center() -> Result<(), String> {
    let f = bump();
    ensure(f.eval(&[0.0]) == 1.0 && f.grad(&[0.0]) == vec![0.0] && f.laplacian(&[0.0]) == -1.0, || {
        format!("{} {:?} {}", f.eval(&[0.0]), f.grad(&[0.0]), f.laplacian(&[0.0]))
    })
}

fn gaussian_zero_amplitude() -> Result<(), String> {
    let f = ok(make_gaussian_bump(1, &[0.0], 1.0, 0.0))?;
    ensure(PROBES.iter().all(|&x| f.eval(&[x]) == 0.0 && f.grad(&[x]) == vec![0.0]), || "non-zero".into())
}

fn compact_at_center() -> Result<(), String> {
    let e = std::f64::consts::E;
    let f = ok(make_compact_bump(1, &[0.0], 1.0, e))?;
    ensure((f.eval(&[0.0]) - 1.0).abs() < 1e-15, || format!("{}", f.eval(&[0.0])))
}

fn compact_support() -> Result<(), String> {
    let f = ok(make_compact_bump(2, &[0.5, -0.5], 1.0, 2.0))?;
    let outside = [[1.5, -0.5], [0.5, 0.5], [3.0, 3.0], [-0.3, -1.2]];
    ensure(outside.iter().all(|x| f.eval(x) == 0.0), || "non-zero outside the support".into())
}

fn kappa_at_origin() -> Result<(), String> {
    let k = ok(make_kappa(1))?;
    ensure((k.eval(&[0.0]) - (-1.0f64).exp()).abs() < 1e-16, || format!("{}", k.eval(&[0.0])))
}

fn kappa_exponential_bound() -> Result<(), String> {
    let k = ok(make_kappa(1))?;
    let e = std::f64::consts::E;
    ensure(
        (-400..=400).all(|i| {
            let x = i as f64 * 0.05;
            k.eval(&[x]) <= e * (-x.abs()).exp()
        }),
        || "bound violated".into(),
    )
}

fn seminorm_of_zero() -> Result<(), String> {
    let bx = ok(Rectangle::cube(1, -5.0, 5.0))?;
    for (beta, n) in [(0, 0), (1, 2), (2, 1)] {
        let v = ok(seminorm_sup(&zero(1), &Seminorm::new(vec![beta], n), &bx, 0.1))?;
        ensure(v == 0.0, || format!("beta={beta} n={n}: {v}"))?;
    }
    Ok(())
}

fn seminorm_of_gaussian() -> Result<(), String> {
    let bx = ok(Rectangle::cube(1, -10.0, 10.0))?;
    let f = ok(make_gaussian_bump(1, &[0.0], 1.0, 2.5))?;
    let v = ok(seminorm_sup(&f, &Seminorm::new(vec![0], 0), &bx, 0.01))?;
    ensure(v == 2.5, || format!("{v}"))
}

fn kappa_constants_scale() -> Result<(), String> {
    let bx = ok(Rectangle::cube(1, -20.0, 20.0))?;
    let k = ok(make_kappa(1))?;
    let (g1, l1) = ok(kappa_bound_check(&k, &bx, 0.01))?;
    let (g2, l2) = ok(kappa_bound_check(&k.scaled(2.0), &bx, 0.01))?;
    ensure((g2 - 2.0 * g1).abs() <= 1e-12 * g2 && (l2 - l1).abs() <= 1e-12 * l1, || {
        format!("{g1} {g2} {l1} {l2}")
    })
}

fn kappa_constants_for_gaussian() -> Result<(), String> {
    let bx = ok(Rectangle::cube(1, -5.0, 5.0))?;
    let (g, l) = ok(kappa_bound_check(&bump(), &bx, 0.01))?;
    ensure(g.is_finite() && l.is_finite(), || format!("{g} {l}"))
}

fn pair_empty() -> Result<(), String> {
    let v = ok(pair(&ok(AtomicMeasure::empty(1.0, 1))?, &bump()))?;
    ensure(v == 0.0, || format!("{v}"))
}

fn pair_single_atom() -> Result<(), String> {
    let v = ok(pair(&atoms(1.0, 1, &[0.0]), &bump()))?;
    ensure(v == 1.0, || format!("{v}"))
}

fn pair_two_half_atoms() -> Result<(), String> {
    let v = ok(pair(&atoms(2.0, 1, &[0.0, 0.0]), &bump()))?;
    ensure(v == 1.0, || format!("{v}"))
}

fn count_empty() -> Result<(), String> {
    let a = ok(Rectangle::cube(1, 0.0, 2.0))?;
    let v = ok(count_in_rect(&ok(AtomicMeasure::empty(1.0, 1))?, &a))?;
    ensure(v == 0.0, || format!("{v}"))
}

fn count_direct() -> Result<(), String> {
    let a = ok(Rectangle::cube(1, 0.0, 2.0))?;
    let v = ok(count_in_rect(&atoms(1.0, 1, &[0.5, 1.5, 2.5]), &a))?;
    ensure(v == 2.0, || format!("{v}"))
}

fn count_half_open() -> Result<(), String> {
    let a = ok(Rectangle::cube(1, 0.0, 2.0))?;
    let v = ok(count_in_rect(&atoms(1.0, 1, &[0.0, 2.0]), &a))?;
    ensure(v == 1.0, || format!("{v}"))
}

fn poisson_empty_box() -> Result<(), String> {
    let a = ok(Rectangle::cube(1, 1.0, 1.0))?;
    for r in 0..100 {
        let mut rng = replica_stream(1, Purpose::InitialCondition, r);
        let xi = ok(sample_poisson(5.0, &a, 0.0, &mut rng))?;
        ensure(xi.is_empty(), || format!("{} atoms", xi.len()))?;
    }
    Ok(())
}

fn sqrt_log_single() -> Result<(), String> {
    let f = ok(make_sqrt_log_family(1, 2))?;
    ensure(f.atoms == vec![0.0, 0.0], || format!("{:?}", f.atoms))
}

fn sqrt_log_monotone() -> Result<(), String> {
    let f = ok(make_sqrt_log_family(1000, 1))?;
    ensure(f.atoms.windows(2).all(|w| w[0] <= w[1]), || "not monotone".into())
}

fn heat_constants() -> Result<(), String> {
    let h = ok(HeatEvaluator::with_default_nodes(1.5, 2))?;
    let c = ok(make_constant(2, 3.25))?;
    for t in [0.0, 0.1, 4.0] {
        let v = ok(h.apply(&c, t, &[0.3, -2.0]))?;
        ensure(v == 3.25, || format!("t={t}: {v}"))?;
    }
    Ok(())
}

fn heat_time_zero() -> Result<(), String> {
    let h = ok(HeatEvaluator::with_default_nodes(1.0, 1))?;
    for f in [bump(), ok(make_compact_bump(1, &[0.2], 1.0, 1.0))?, ok(make_kappa(1))?] {
        for x in PROBES {
            let v = ok(h.apply(&f, 0.0, &[x]))?;
            ensure(v.to_bits() == f.eval(&[x]).to_bits(), || format!("{f:?} at {x}"))?;
        }
    }
    Ok(())
}

fn indicator_empty() -> Result<(), String> {
    let h = ok(HeatEvaluator::with_default_nodes(1.0, 1))?;
    let v = ok(h.indicator(&ok(Rectangle::cube(1, 0.5, 0.5))?, 1.0, &[0.5]))?;
    ensure(v == 0.0, || format!("{v}"))
}

fn indicator_small_time() -> Result<(), String> {
    let h = ok(HeatEvaluator::with_default_nodes(1.0, 2))?;
    let v = ok(h.indicator(&ok(Rectangle::cube(2, -1.0, 1.0))?, 1e-6, &[0.0, 0.1]))?;
    ensure((v - 1.0).abs() < 1e-9, || format!("{v}"))
}

fn heat_pair_empty() -> Result<(), String> {
    let h = ok(HeatEvaluator::with_default_nodes(1.0, 1))?;
    let v = ok(h.pair(&ok(AtomicMeasure::empty(1.0, 1))?, &bump(), 1.0))?;
    ensure(v == 0.0, || format!("{v}"))
}

fn heat_pair_linear() -> Result<(), String> {
    let h = ok(HeatEvaluator::with_default_nodes(1.0, 1))?;
    let nu = atoms(1.0, 1, &[-0.4, 0.9]);
    let g = ok(make_compact_bump(1, &[0.3], 0.8, 2.0))?;
    let sum = ok(bump().combine(1.0, &g, 1.0))?;
    let lhs = ok(h.pair(&nu, &sum, 0.7))?;
    let rhs = ok(h.pair(&nu, &bump(), 0.7))? + ok(h.pair(&nu, &g, 0.7))?;
    ensure((lhs - rhs).abs() < 1e-12, || format!("{lhs} {rhs}"))
}

fn colehopf_zero_and_constant() -> Result<(), String> {
    let ch = ColeHopf::new(ok(HeatEvaluator::with_default_nodes(1.0, 1))?);
    for c in [0.0, 2.0] {
        let f = ok(make_constant(1, c))?;
        for t in [0.0, 0.5, 2.0] {
            for x in PROBES {
                let v = ok(ch.apply(&f, t, &[x]))?;
                ensure(v == c, || format!("c={c} t={t} x={x}: {v}"))?;
            }
        }
    }
    Ok(())
}

fn colehopf_zero_derivatives() -> Result<(), String> {
    let ch = ColeHopf::new(ok(HeatEvaluator::with_default_nodes(1.0, 1))?);
    let (_, g, l) = ok(ch.jet(&zero(1), 1.0, &[0.4]))?;
    ensure(g == vec![0.0] && l == 0.0, || format!("{g:?} {l}"))
}

fn colehopf_symmetric_gradient() -> Result<(), String> {
    let ch = ColeHopf::new(ok(HeatEvaluator::with_default_nodes(1.0, 1))?);
    let g = ok(ch.grad(&bump(), 1.0, &[0.0]))?[0];
    let gf = ok(ch.grad_fd(&bump(), 1.0, &[0.0]))?[0];
    ensure(g.abs() < 1e-6 && gf.abs() < 1e-6, || format!("{g} {gf}"))
}

fn residual_of_constants() -> Result<(), String> {
    let ch = ColeHopf::new(ok(HeatEvaluator::with_default_nodes(1.0, 1))?);
    for c in [0.0, 1.5] {
        let r = ok(ch.hj_residual(&ok(make_constant(1, c))?, 0.5, &[0.2]))?;
        ensure(r < 1e-10, || format!("c={c}: {r}"))?;
    }
    Ok(())
}

fn monotone_zero_below_bump() -> Result<(), String> {
    let ch = ColeHopf::new(ok(HeatEvaluator::with_default_nodes(1.0, 1))?);
    let grid = ok(Rectangle::cube(1, -8.0, 8.0))?;
    let probes: Vec<Vec<f64>> = PROBES.iter().map(|x| vec![*x]).collect();
    ensure(ok(ch.monotonicity_check(&zero(1), &bump(), 1.0, &probes, &grid, 0.01))?, || "violated".into())?;
    for p in &probes {
        ensure(ok(ch.apply(&zero(1), 1.0, p))? == 0.0 && ok(ch.apply(&bump(), 1.0, p))? >= 0.0, || {
            format!("{p:?}")
        })?;
    }
    Ok(())
}

fn monotone_equal_functions() -> Result<(), String> {
    let ch = ColeHopf::new(ok(HeatEvaluator::with_default_nodes(1.0, 1))?);
    for x in PROBES {
        let (a, b) = (ok(ch.apply(&bump(), 1.0, &[x]))?, ok(ch.apply(&bump(), 1.0, &[x]))?);
        ensure((a - b).abs() <= 1e-12, || format!("{a} {b}"))?;
    }
    Ok(())
}

fn kappa_domination_of_zero() -> Result<(), String> {
    let ch = ColeHopf::new(ok(HeatEvaluator::with_default_nodes(1.0, 1))?);
    let grid = ok(Rectangle::cube(1, -5.0, 5.0))?;
    let c = ok(ch.kappa_domination_check(&zero(1), 1.0, &grid, 0.5, 4))?.constant;
    ensure(c == 0.0, || format!("{c}"))
}

fn ensemble_from_delta() -> Result<(), String> {
    let e = init_ensemble(&atoms(3.0, 2, &[0.0, 0.0]), 5, 0);
    ensure(e.len() == 1 && e.positions() == [0.0, 0.0] && e.time() == 0.0, || format!("{e:?}"))
}

fn ensemble_determinism() -> Result<(), String> {
    let nu = atoms(1.0, 2, &[0.0, 1.0, -1.0, 0.5]);
    let mut a = init_ensemble(&nu, 99, 7);
    let mut b = init_ensemble(&nu, 99, 7);
    ok(a.evolve(0.3))?;
    ok(b.evolve(0.3))?;
    ensure(a == b, || "ensembles differ".into())
}

fn path_on_trivial_grid() -> Result<(), String> {
    let nu = atoms(1.0, 1, &[0.3]);
    let rec = ok(sample_path(&nu, &[0.0], &[bump()], 1, 0))?;
    let tr = &rec.traces[0];
    ensure(rec.snapshots == vec![nu.clone()] && tr.pair[0] == bump().eval(&[0.3]), || format!("{rec:?}"))
}

fn path_single_particle_trace() -> Result<(), String> {
    let nu = atoms(1.0, 1, &[0.0]);
    let rec = ok(sample_path(&nu, &[0.0, 0.25, 0.5, 1.0], &[bump()], 4, 2))?;
    for (snap, v) in rec.snapshots.iter().zip(&rec.traces[0].pair) {
        ensure(bump().eval(&snap.coords()[..1]) == *v, || format!("{v}"))?;
    }
    Ok(())
}

fn duality_with_zero() -> Result<(), String> {
    let r = ok(verify::laplace_duality_test(&atoms(1.0, 1, &[-1.0, 1.0]), &zero(1), 1.0, &McSettings::new(200, 1)))?;
    ensure(r[0].estimate.mean == 1.0 && r[0].reference == 1.0 && r[0].z_score == 0.0 && r[0].pass, || {
        format!("{:?}", r[0])
    })
}

fn martingale_short_horizon() -> Result<(), String> {
    let r = ok(verify::martingale_mean_test(&atoms(1.0, 1, &[0.0]), &bump(), 1e-8, 1, &McSettings::new(500, 1)))?;
    ensure(r[0].estimate.mean.abs() < 1e-6 && r[0].estimate.stderr < 1e-6, || format!("{:?}", r[0]))
}

fn quadratic_variation_of_constant() -> Result<(), String> {
    let c = ok(make_constant(1, 2.0))?;
    let r = ok(verify::quadratic_variation_test(&atoms(1.0, 1, &[0.0]), &c, 1.0, 10, &McSettings::new(200, 1)))?;
    ensure(r[0].estimate.mean == 0.0 && r[0].reference == 0.0, || format!("{:?}", r[0]))
}

fn quadratic_variation_scaling() -> Result<(), String> {
    let nu = atoms(1.0, 1, &[0.2]);
    let a = ok(verify::quadratic_variation_reference(&nu, &bump(), 1.0, 64))?;
    let b = ok(verify::quadratic_variation_reference(&nu, &bump().scaled(2.0), 1.0, 64))?;
    ensure(b == 4.0 * a, || format!("{a} {b}"))
}

fn duality_martingale_with_zero() -> Result<(), String> {
    let r = ok(verify::duality_martingale_test(&atoms(1.0, 1, &[0.0]), &zero(1), 1.0, 5, &McSettings::new(100, 1)))?;
    ensure(r.iter().all(|r| r.estimate.mean == 1.0 && r.z_score == 0.0), || "Y is not 1".into())
}

fn duality_martingale_endpoint() -> Result<(), String> {
    let nu = atoms(1.0, 1, &[0.0]);
    let phi = ok(make_compact_bump(1, &[0.0], 1.0, 1.0))?;
    let s = McSettings::new(300, 3);
    let dm = ok(verify::duality_martingale_test(&nu, &phi, 1.0, 1, &s))?;
    let ld = ok(verify::laplace_duality_test(&nu, &phi, 1.0, &s))?;
    let end = dm.last().ok_or("no reports")?;
    ensure(end.estimate == ld[0].estimate && (end.reference - ld[0].reference).abs() < 1e-12, || format!("{:?} vs {:?}", end.estimate, ld[0].estimate))
}

fn generating_function_at_one() -> Result<(), String> {
    let a = ok(Rectangle::cube(1, -1.0, 1.0))?;
    let r = ok(verify::generating_function_test(&atoms(1.0, 1, &[0.0, 2.0]), &a, 1.0, &[1.0], &McSettings::new(200, 1)))?;
    let g = &r[2];
    ensure(g.estimate.mean == 1.0 && g.reference == 1.0, || format!("{g:?}"))
}

fn poisson_at_time_zero() -> Result<(), String> {
    let setup = PoissonSetup {
        intensity: 2.0,
        alpha: 1.0,
        bx: ok(Rectangle::cube(1, 0.0, 1.0))?,
        pad: 0.0,
        sub_boxes: vec![ok(Rectangle::cube(1, 0.0, 1.0))?],
        phi: Some(ok(make_compact_bump(1, &[0.5], 0.4, 1.0))?),
    };
    let r = ok(verify::poisson_invariance_test(&setup, 0.0, &McSettings::new(20_000, 1)))?;
    ensure(verify::all_pass(&r), || format!("{r:?}"))
}

fn moments_of_empty_measure() -> Result<(), String> {
    let r = ok(verify::moment_bound_test(&ok(AtomicMeasure::empty(1.0, 1))?, 1.0, &McSettings::new(50, 1)))?;
    ensure(r.iter().all(|r| r.estimate.mean == 0.0 && r.reference == 0.0), || format!("{r:?}"))
}

fn single_particle_second_moment() -> Result<(), String> {
    let h = ok(HeatEvaluator::with_default_nodes(1.0, 1))?;
    let k = ok(make_kappa(1))?;
    let r = ok(verify::moment_bound_test(&atoms(1.0, 1, &[0.4]), 0.5, &McSettings::new(50, 1)))?;
    let direct = ok(h.expect(|y| k.eval(y).powi(2), 0.5, &[0.4]))?;
    ensure((r[1].reference - direct).abs() < 1e-14, || format!("{} {direct}", r[1].reference))
}

fn config_defaults() -> Result<(), String> {
    let cfg = parse_config("experiment=laplace_duality, alpha=1, dimension=1, t=1, phi=gaussian(0,1,1), nu=atoms[0]")
        .map_err(|e| e.to_string())?;
    ensure(cfg.replicas == 10_000 && cfg.seed == 42 && cfg.quad_nodes == 64 && cfg.grid_steps == 200, || {
        format!("{cfg:?}")
    })
}

fn config_rejects_negative_alpha() -> Result<(), String> {
    match parse_config("experiment = moment_bound\nalpha = -1\ndimension = 1\nt = 1\nnu = atoms[0]") {
        Err(ConfigError::Validation(m)) if m.contains("alpha > 0") => Ok(()),
        other => Err(format!("{other:?}")),
    }
}

fn config_lists() -> Result<(), String> {
    let cfg = parse_config("experiment = blowup_scan, dimension = 1, K = 100,1000,10000, t = 0.25,1.0")
        .map_err(|e| e.to_string())?;
    ensure(cfg.times == vec![0.25, 1.0] && cfg.k_values == vec![100, 1000, 10_000], || format!("{cfg:?}"))
}

fn run_exit_codes() -> Result<(), String> {
    let dir = std::env::temp_dir().join(format!("dk-lab-selftest-{}", std::process::id()));
    let text = "experiment=laplace_duality, alpha=1, dimension=1, t=1, phi=zero, nu=atoms[0], replicas=100";
    let pass = run_experiment(&parse_config(text).map_err(|e| e.to_string())?, Some(&dir)).map_err(|e| e.to_string())?;
    let forced = parse_config(&format!("{text}, reference_offset=0.1")).map_err(|e| e.to_string())?;
    let fail = run_experiment(&forced, Some(&dir)).map_err(|e| e.to_string())?;
    let _ = std::fs::remove_dir_all(&dir);
    ensure(pass.exit_code() == 0 && fail.exit_code() == 1, || {
        format!("exit codes {} and {}", pass.exit_code(), fail.exit_code())
    })
}

pub const CHECKS: &[(&str, Check)] = &[
    ("testfn: gaussian bump at its center", gaussian_at_center),
    ("testfn: zero-amplitude gaussian", gaussian_zero_amplitude),
    ("testfn: compact bump at its center", compact_at_center),
    ("testfn: compact bump outside its support", compact_support),
    ("testfn: kappa at the origin", kappa_at_origin),
    ("testfn: kappa below e exp(-|x|)", kappa_exponential_bound),
    ("testfn: seminorms of zero", seminorm_of_zero),
    ("testfn: sup of a gaussian", seminorm_of_gaussian),
    ("testfn: kappa constants under scaling", kappa_constants_scale),
    ("testfn: kappa constants for a gaussian", kappa_constants_for_gaussian),
    ("measure: pairing with no atoms", pair_empty),
    ("measure: pairing with one atom", pair_single_atom),
    ("measure: pairing with two half atoms", pair_two_half_atoms),
    ("measure: count in empty measure", count_empty),
    ("measure: direct count", count_direct),
    ("measure: half-open boundaries", count_half_open),
    ("measure: poisson on an empty box", poisson_empty_box),
    ("measure: sqrt-log family of one", sqrt_log_single),
    ("measure: sqrt-log family is monotone", sqrt_log_monotone),
    ("heat: constants are preserved", heat_constants),
    ("heat: identity at time zero", heat_time_zero),
    ("heat: empty rectangle", indicator_empty),
    ("heat: small-time indicator", indicator_small_time),
    ("heat: pairing with no atoms", heat_pair_empty),
    ("heat: pairing is linear", heat_pair_linear),
    ("hjb: zero and constants are fixed", colehopf_zero_and_constant),
    ("hjb: zero has zero derivatives", colehopf_zero_derivatives),
    ("hjb: symmetric gradient vanishes", colehopf_symmetric_gradient),
    ("hjb: residual of constants", residual_of_constants),
    ("hjb: zero below a bump", monotone_zero_below_bump),
    ("hjb: equal functions", monotone_equal_functions),
    ("hjb: kappa domination of zero", kappa_domination_of_zero),
    ("dynamics: ensemble from a delta", ensemble_from_delta),
    ("dynamics: same seed and replica", ensemble_determinism),
    ("dynamics: path on the grid {0}", path_on_trivial_grid),
    ("dynamics: single-particle trace", path_single_particle_trace),
    ("verify: duality with zero", duality_with_zero),
    ("verify: martingale on a short horizon", martingale_short_horizon),
    ("verify: quadratic variation of a constant", quadratic_variation_of_constant),
    ("verify: quadratic variation scaling", quadratic_variation_scaling),
    ("verify: duality martingale with zero", duality_martingale_with_zero),
    ("verify: duality martingale endpoint", duality_martingale_endpoint),
    ("verify: generating function at s = 1", generating_function_at_one),
    ("verify: poisson counts at time zero", poisson_at_time_zero),
    ("verify: moments of an empty measure", moments_of_empty_measure),
    ("verify: one-atom second moment", single_particle_second_moment),
    ("cli: minimal config defaults", config_defaults),
    ("cli: negative alpha", config_rejects_negative_alpha),
    ("cli: list values", config_lists),
    ("cli: exit codes", run_exit_codes),
];

/// Runs every check, returning `(name, outcome)` in order.
pub fn run_all() -> Vec<(&'static str, Result<(), String>)> {
    CHECKS.iter().map(|(name, check)| (*name, check())).collect()
}
