use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use dk_lab::dynamics::init_ensemble;
use dk_lab::measure::AtomicMeasure;
use dk_lab::par::{map_replicas, map_replicas_sequential};
use dk_lab::testfn::{make_gaussian_bump, TestFunction};

fn sample(nu: &AtomicMeasure, phi: &TestFunction, r: u64) -> f64 {
    let mut e = init_ensemble(nu, 7, r);
    e.evolve_to(1.0).expect("valid time");
    (-e.pair_with(|x| phi.eval(x))).exp()
}

fn duality_samples(c: &mut Criterion) {
    let coords: Vec<f64> = (0..64).flat_map(|i| [i as f64 * 0.1 - 3.2, 0.5]).collect();
    let nu = AtomicMeasure::new(2.0, 2, coords).expect("valid measure");
    let phi = make_gaussian_bump(2, &[0.0, 0.0], 1.0, 1.0).expect("valid bump");
    let mut group = c.benchmark_group("laplace_duality_samples");
    for n in [1_000usize, 10_000] {
        group.bench_with_input(BenchmarkId::new("parallel", n), &n, |b, &n| {
            b.iter(|| black_box(map_replicas(n, |r| sample(&nu, &phi, r))))
        });
        group.bench_with_input(BenchmarkId::new("sequential", n), &n, |b, &n| {
            b.iter(|| black_box(map_replicas_sequential(n, |r| sample(&nu, &phi, r))))
        });
    }
    group.finish();
}

criterion_group!(benches, duality_samples);
criterion_main!(benches);
