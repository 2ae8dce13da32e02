use std::hint::black_box;

use bessel_exit::mc::{simulate_batch, SimConfig};
use bessel_exit::Index;
use criterion::{criterion_group, criterion_main, Criterion};

fn bench_simulate(c: &mut Criterion) {
    let index = Index::reflecting(0.5).unwrap();
    let cfg = SimConfig {
        step: 1e-3,
        max_time: 20.0,
        seed: 7,
        n_paths: 200,
        bridge_correction: true,
    };
    let mut group = c.benchmark_group("simulate");
    group.sample_size(10);
    group.bench_function("200_paths_step_1e-3", |b| {
        b.iter(|| simulate_batch(index, black_box(0.5), &cfg).unwrap())
    });
    group.finish();
}

criterion_group!(benches, bench_simulate);
criterion_main!(benches);
