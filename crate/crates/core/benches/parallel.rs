use std::hint::black_box;
use std::time::Duration;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use natmap_core::natural_map::{evaluate_many, random_context};
use natmap_core::sampling::random_point;
use natmap_core::spectrum::{maximize_phi, LabConfig};
use natmap_core::{Execution, Space};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const MODES: [Execution; 2] = [Execution::Sequential, Execution::Parallel];

fn natural_map_batch(c: &mut Criterion) {
    let (s, t) = (Space::quaternionic(2), Space::quaternionic(3));
    let ctx = random_context(&s, &t, 3).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let xs: Vec<_> = (0..128).map(|_| random_point(&mut rng, &s, 0.3)).collect();
    let mut group = c.benchmark_group("evaluate_many");
    for exec in MODES {
        group.bench_with_input(BenchmarkId::from_parameter(format!("{exec:?}")), &exec, |b, &exec| {
            b.iter(|| evaluate_many(black_box(&ctx), black_box(&xs), exec))
        });
    }
    group.finish();
}

fn phi_restarts(c: &mut Criterion) {
    let mut group = c.benchmark_group("maximize_phi_8_4");
    group.sample_size(10).measurement_time(Duration::from_secs(10));
    for exec in MODES {
        let cfg = LabConfig::new(8, 4).unwrap().with_restarts(16).with_exec(exec);
        group.bench_with_input(BenchmarkId::from_parameter(format!("{exec:?}")), &cfg, |b, cfg| {
            b.iter(|| maximize_phi(black_box(cfg)).unwrap().value)
        });
    }
    group.finish();
}

criterion_group!(benches, natural_map_batch, phi_restarts);
criterion_main!(benches);
