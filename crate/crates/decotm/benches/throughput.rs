use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use decotm::noise::{quadrature, NoiseDistribution};
use decotm::oracles::monte_carlo_white;
use decotm::transfer::{
    build_transfer_matrix, compute_integrals, relaxation_report, spectral_decompose,
};
use decotm::BlochVector;
use std::hint::black_box;

fn mc_ensemble(c: &mut Criterion) {
    let dist = NoiseDistribution::PlanarRing { b0: 0.05 };
    let s0 = BlochVector::new(0.6, 0.0, 0.8);
    let run = || monte_carlo_white(black_box(&dist), 0.1, 1.0, 100, s0, 20_000, 42);

    let mut group = c.benchmark_group("mc_ensemble");
    group.sample_size(10);
    group.bench_function("default_pool", |b| b.iter(run));
    let single = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap();
    group.bench_function("one_thread", |b| b.iter(|| single.install(run)));
    group.finish();
}

fn rate_sweep(c: &mut Criterion) {
    // one figure row: quadrature, integrals, spectrum, rates
    let row = |ratio: f64| {
        let b_ext = 1.0;
        let dist = NoiseDistribution::SphereShell { b0: ratio * b_ext };
        let quad = quadrature(&dist, 64).unwrap();
        let ints = compute_integrals(&quad, b_ext, 1.0).unwrap();
        let spec = spectral_decompose(&build_transfer_matrix(&ints)).unwrap();
        relaxation_report(&spec, 1.0)
    };

    let mut group = c.benchmark_group("rate_sweep");
    group.sample_size(10);
    for n in [16usize, 64] {
        group.bench_with_input(BenchmarkId::new("rows", n), &n, |b, &n| {
            b.iter(|| {
                for i in 0..n {
                    let ratio = 0.05 * (1.0 + i as f64);
                    black_box(row(black_box(ratio)));
                }
            })
        });
    }
    group.finish();
}

criterion_group!(benches, mc_ensemble, rate_sweep);
criterion_main!(benches);
