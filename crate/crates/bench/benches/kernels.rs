//! Benchmarks for the three hot kernels: quadrature-backed potential
//! inversion, episode simulation, and classifier training.

use criterion::{black_box, criterion_group, criterion_main, Criterion};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use slb_core::ds::{adaptive_simpson, ErrorFactors, Method};
use slb_core::learners::train_classifier;
use slb_core::sim::simulate_episode;
use slb_core::{CoupledSystem, MlpConfig, SimConfig};

fn bench_quadrature(c: &mut Criterion) {
    c.bench_function("adaptive_simpson ln-kernel", |b| {
        b.iter(|| {
            adaptive_simpson(&|x| 1.0 / x, black_box(1.0), black_box(80.0), 1e-9, 60).unwrap()
        })
    });

    let sys = CoupledSystem::identity_example();
    c.bench_function("y2_learned slb", |b| {
        b.iter(|| {
            sys.y2_learned(
                Method::Slb,
                black_box(80.0),
                black_box(100.0),
                black_box(10.0),
                ErrorFactors::IDENTITY,
            )
            .unwrap()
        })
    });
}

fn bench_episode(c: &mut Criterion) {
    let config = SimConfig { wind_magnitude: 0.5, ..SimConfig::default() };
    c.bench_function("simulate_episode", |b| {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        b.iter(|| {
            let seed: u64 = rng.gen();
            let mut episode_rng = ChaCha8Rng::seed_from_u64(seed);
            simulate_episode(&config, &mut episode_rng, 25.0).unwrap()
        })
    });
}

fn bench_training(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let inputs: Vec<Vec<f64>> =
        (0..256).map(|_| (0..6).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
    let labels: Vec<usize> = inputs
        .iter()
        .map(|x| (x[0] >= 0.0) as usize * 4 + (x[1] >= 0.0) as usize * 2 + (x[2] >= 0.0) as usize)
        .collect();
    let config = MlpConfig { epochs: 10, ..MlpConfig::desk_scale() };
    c.bench_function("train_classifier 256x10-epochs", |b| {
        b.iter(|| train_classifier(&config, &inputs, &labels, 8).unwrap())
    });
}

criterion_group!(benches, bench_quadrature, bench_episode, bench_training);
criterion_main!(benches);
