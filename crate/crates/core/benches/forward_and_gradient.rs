use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use dqgan::data::{sample_uniform_latent, LinearDataset};
use dqgan::network::{CouplingWeights, NetworkConfig};
use dqgan::par::Execution;
use dqgan::training::{discriminator_loss, generate, generate_batch, grad_fd, Algorithm};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn batch_forward(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let net = NetworkConfig::default();
    let generator = CouplingWeights::random(2, 2, 0.5, &mut rng);
    let mut group = c.benchmark_group("generator_batch");
    for n in [256, 4096] {
        let latent = sample_uniform_latent(n, 2, &mut rng);
        for (name, exec) in MODES {
            group.bench_with_input(BenchmarkId::new(name, n), &latent, |b, z| b.iter(|| generate_batch(exec, black_box(&generator), z, &net).unwrap()));
        }
    }
    group.finish();
}

fn discriminator_gradient(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let net = NetworkConfig::default();
    let generator = CouplingWeights::random(2, 2, 0.5, &mut rng);
    let discriminator = CouplingWeights::random(2, 1, 0.5, &mut rng);
    let mut group = c.benchmark_group("discriminator_gradient");
    for batch in [16, 64] {
        let real: Vec<Vec<f64>> = LinearDataset::default()
            .sample(batch, &mut rng)
            .unwrap()
            .iter()
            .map(|s| s.as_array().to_vec())
            .collect();
        let fake = generate(&generator, &sample_uniform_latent(batch, 2, &mut rng), &net).unwrap();
        let loss = |w: &CouplingWeights| discriminator_loss(Algorithm::Sigmoid, w, &real, &fake, &net);
        for (name, exec) in MODES {
            group.bench_function(BenchmarkId::new(name, batch), |b| b.iter(|| grad_fd(loss, black_box(&discriminator), 1e-3, exec).unwrap()));
        }
    }
    group.finish();
}

criterion_group!(benches, batch_forward, discriminator_gradient);
criterion_main!(benches);
