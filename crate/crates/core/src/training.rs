//! Adversarial training: losses for both readouts, finite-difference
//! gradients, cosine-annealed gradient ascent.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::{sample_uniform_latent, AngleSample};
use crate::error::{Error, Result};
use crate::network::{discriminator_forward_sigmoid, discriminator_projective_pair, generator_forward, CouplingWeights, NetworkConfig};
use crate::par::{self, Execution};

/// Lower bound applied to probabilities inside logarithms.
pub const PROBABILITY_FLOOR: f64 = 1e-12;

/// Data dimension of the shipped experiment.
pub const SAMPLE_DIM: usize = 2;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    /// Projective readout with linear expectation losses.
    Expectation,
    /// Sigmoid readout with log-likelihood losses.
    #[default]
    Sigmoid,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub algorithm: Algorithm,
    pub iterations: usize,
    pub batch: usize,
    pub eta_max: f64,
    pub eta_min: f64,
    pub fd_step: f64,
    pub seed: u64,
    pub init_scale: f64,
    /// Number of random input angles fed to the generator.
    pub latent_dim: usize,
    #[serde(skip)]
    pub execution: Execution,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            algorithm: Algorithm::Sigmoid,
            iterations: 1000,
            batch: 16,
            eta_max: 0.005,
            eta_min: 0.0001,
            fd_step: 1e-3,
            seed: 0,
            init_scale: 0.5,
            latent_dim: 2,
            execution: Execution::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: &str| Err(Error::Config(msg.into()));
        if self.iterations == 0 {
            return fail("iterations must be at least 1");
        }
        if self.batch == 0 {
            return fail("batch must be at least 1");
        }
        if !(self.eta_min > 0.0 && self.eta_max >= self.eta_min && self.eta_max.is_finite()) {
            return fail("learning rates must satisfy eta_max >= eta_min > 0");
        }
        if !(self.fd_step > 0.0 && self.fd_step.is_finite()) {
            return fail("fd_step must be positive");
        }
        if !(self.init_scale >= 0.0 && self.init_scale.is_finite()) {
            return fail("init_scale must be non-negative");
        }
        if self.latent_dim == 0 {
            return fail("latent_dim must be at least 1");
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    pub loss_d: f64,
    pub loss_g: f64,
    pub eta: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RunTrace {
    pub records: Vec<StepRecord>,
}

impl RunTrace {
    /// Mean `(L_D, L_G)` over the last `fraction` of steps (at least one).
    pub fn final_window_means(&self, fraction: f64) -> Option<(f64, f64)> {
        let n = self.records.len();
        if n == 0 {
            return None;
        }
        let k = ((n as f64 * fraction).ceil() as usize).clamp(1, n);
        let tail = &self.records[n - k..];
        let d = tail.iter().map(|r| r.loss_d).sum::<f64>() / k as f64;
        let g = tail.iter().map(|r| r.loss_g).sum::<f64>() / k as f64;
        Some((d, g))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainOutcome {
    pub generator: CouplingWeights,
    pub discriminator: CouplingWeights,
    pub trace: RunTrace,
}

/// `η_min + ½(η_max − η_min)(1 + cos(tπ/T))`.
pub fn cosine_lr(t: usize, total: usize, eta_min: f64, eta_max: f64) -> f64 {
    debug_assert!(t <= total && total > 0);
    eta_min + 0.5 * (eta_max - eta_min) * (1.0 + (t as f64 * PI / total as f64).cos())
}

fn ln_floor(p: f64) -> f64 {
    p.max(PROBABILITY_FLOOR).ln()
}

fn mean(xs: impl ExactSizeIterator<Item = f64>) -> f64 {
    let n = xs.len();
    xs.sum::<f64>() / n as f64
}

/// `mean p_real(real) + mean p_fake(fake)` from projective populations.
pub fn expectation_d_loss(real_pops: &[f64], fake_pops: &[f64]) -> f64 {
    mean(real_pops.iter().copied()) + mean(fake_pops.iter().copied())
}

/// `mean ln D(real) + mean ln(1 − D(fake))`, floored.
pub fn sigmoid_d_loss(d_real: &[f64], d_fake: &[f64]) -> f64 {
    mean(d_real.iter().map(|&d| ln_floor(d))) + mean(d_fake.iter().map(|&d| ln_floor(1.0 - d)))
}

/// `mean ln D(fake)`, floored.
pub fn sigmoid_g_loss(d_fake: &[f64]) -> f64 {
    mean(d_fake.iter().map(|&d| ln_floor(d)))
}

fn check_batches(real: usize, fake: usize) -> Result<()> {
    if real == 0 || fake == 0 {
        return Err(Error::Empty("mini-batch"));
    }
    if real != fake {
        return Err(Error::DimensionMismatch {
            expected: format!("{real} random inputs"),
            found: format!("{fake}"),
        });
    }
    Ok(())
}

pub fn generate(generator: &CouplingWeights, inputs: &[Vec<f64>], cfg: &NetworkConfig) -> Result<Vec<Vec<f64>>> {
    inputs.iter().map(|x| generator_forward(generator, x, cfg)).collect()
}

/// [`generate`] over a large batch, split across threads.
pub fn generate_batch(exec: Execution, generator: &CouplingWeights, inputs: &[Vec<f64>], cfg: &NetworkConfig) -> Result<Vec<Vec<f64>>> {
    par::map(exec, inputs, |x| generator_forward(generator, x, cfg)).into_iter().collect()
}

/// Discriminator loss on already generated samples.
pub fn discriminator_loss(algorithm: Algorithm, discriminator: &CouplingWeights, real: &[Vec<f64>], fake: &[Vec<f64>], cfg: &NetworkConfig) -> Result<f64> {
    check_batches(real.len(), fake.len())?;
    match algorithm {
        Algorithm::Expectation => {
            let r = real
                .iter()
                .map(|x| Ok(discriminator_projective_pair(discriminator, x, cfg)?.0))
                .collect::<Result<Vec<_>>>()?;
            let f = fake
                .iter()
                .map(|x| Ok(discriminator_projective_pair(discriminator, x, cfg)?.1))
                .collect::<Result<Vec<_>>>()?;
            Ok(expectation_d_loss(&r, &f))
        }
        Algorithm::Sigmoid => {
            let r = real.iter().map(|x| discriminator_forward_sigmoid(discriminator, x, cfg)).collect::<Result<Vec<_>>>()?;
            let f = fake.iter().map(|x| discriminator_forward_sigmoid(discriminator, x, cfg)).collect::<Result<Vec<_>>>()?;
            Ok(sigmoid_d_loss(&r, &f))
        }
    }
}

/// Generator loss on already generated samples.
pub fn generator_loss_on(algorithm: Algorithm, discriminator: &CouplingWeights, fake: &[Vec<f64>], cfg: &NetworkConfig) -> Result<f64> {
    if fake.is_empty() {
        return Err(Error::Empty("mini-batch"));
    }
    match algorithm {
        Algorithm::Expectation => {
            let r = fake
                .iter()
                .map(|x| Ok(discriminator_projective_pair(discriminator, x, cfg)?.0))
                .collect::<Result<Vec<_>>>()?;
            Ok(mean(r.into_iter()))
        }
        Algorithm::Sigmoid => {
            let d = fake.iter().map(|x| discriminator_forward_sigmoid(discriminator, x, cfg)).collect::<Result<Vec<_>>>()?;
            Ok(sigmoid_g_loss(&d))
        }
    }
}

fn real_inputs(batch: &[AngleSample]) -> Vec<Vec<f64>> {
    batch.iter().map(|s| s.as_array().to_vec()).collect()
}

/// `mean ⟨R|ρ(real)|R⟩ + mean ⟨F|ρ(G(z))|F⟩`, in `[0, 2]`.
pub fn loss_d_alg1(discriminator: &CouplingWeights, generator: &CouplingWeights, real: &[AngleSample], latent: &[Vec<f64>], cfg: &NetworkConfig) -> Result<f64> {
    let fake = generate(generator, latent, cfg)?;
    discriminator_loss(Algorithm::Expectation, discriminator, &real_inputs(real), &fake, cfg)
}

/// `mean ⟨R|ρ(G(z))|R⟩`, in `[0, 1]`.
pub fn loss_g_alg1(discriminator: &CouplingWeights, generator: &CouplingWeights, latent: &[Vec<f64>], cfg: &NetworkConfig) -> Result<f64> {
    generator_loss_on(Algorithm::Expectation, discriminator, &generate(generator, latent, cfg)?, cfg)
}

/// `mean ln D(real) + mean ln(1 − D(G(z)))`.
pub fn loss_d_alg2(discriminator: &CouplingWeights, generator: &CouplingWeights, real: &[AngleSample], latent: &[Vec<f64>], cfg: &NetworkConfig) -> Result<f64> {
    let fake = generate(generator, latent, cfg)?;
    discriminator_loss(Algorithm::Sigmoid, discriminator, &real_inputs(real), &fake, cfg)
}

/// `mean ln D(G(z))`.
pub fn loss_g_alg2(discriminator: &CouplingWeights, generator: &CouplingWeights, latent: &[Vec<f64>], cfg: &NetworkConfig) -> Result<f64> {
    generator_loss_on(Algorithm::Sigmoid, discriminator, &generate(generator, latent, cfg)?, cfg)
}

fn probe(at: &CouplingWeights, index: usize, delta: f64) -> CouplingWeights {
    let mut w = at.clone();
    *w.param_mut(index) += delta;
    w
}

fn assemble(at: &CouplingWeights, entries: Vec<Result<f64>>) -> Result<CouplingWeights> {
    let mut grad = CouplingWeights::zeros(at.n_inputs(), at.n_outputs());
    for (i, g) in entries.into_iter().enumerate() {
        *grad.param_mut(i) = g?;
    }
    Ok(grad)
}

/// Central differences over every coupling entry.
pub fn grad_fd<F>(loss: F, at: &CouplingWeights, eps: f64, exec: Execution) -> Result<CouplingWeights>
where
    F: Fn(&CouplingWeights) -> Result<f64> + Sync + Send,
{
    if eps.is_nan() || eps <= 0.0 {
        return Err(Error::Domain {
            what: "finite-difference step",
            value: eps,
            domain: "(0, inf)",
        });
    }
    let entries = par::map_range(exec, at.n_params(), |i| Ok((loss(&probe(at, i, eps))? - loss(&probe(at, i, -eps))?) / (2.0 * eps)));
    assemble(at, entries)
}

/// One-sided differences, `O(eps)` accurate; used to cross-check [`grad_fd`].
pub fn grad_forward<F>(loss: F, at: &CouplingWeights, eps: f64, exec: Execution) -> Result<CouplingWeights>
where
    F: Fn(&CouplingWeights) -> Result<f64> + Sync + Send,
{
    let base = loss(at)?;
    let entries = par::map_range(exec, at.n_params(), |i| Ok((loss(&probe(at, i, eps))? - base) / eps));
    assemble(at, entries)
}

/// Independent RNG streams per purpose, derived from one seed.
#[derive(Clone, Copy, Debug)]
#[repr(u64)]
enum Stream {
    GeneratorInit = 1,
    DiscriminatorInit = 2,
    RealBatch = 3,
    DiscriminatorLatent = 4,
    GeneratorLatent = 5,
}

fn stream(seed: u64, s: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(s as u64);
    rng
}

fn finite(value: f64, step: usize) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::NonFinite { step })
    }
}

/// Initial `(generator, discriminator)` weights for a seed.
pub fn initial_weights(cfg: &TrainConfig) -> (CouplingWeights, CouplingWeights) {
    let g = CouplingWeights::random(cfg.latent_dim, SAMPLE_DIM, cfg.init_scale, &mut stream(cfg.seed, Stream::GeneratorInit));
    let d = CouplingWeights::random(SAMPLE_DIM, 1, cfg.init_scale, &mut stream(cfg.seed, Stream::DiscriminatorInit));
    (g, d)
}

/// Alternating gradient ascent: one discriminator step then one generator
/// step per iteration.
pub fn train(dataset: &[AngleSample], cfg: &TrainConfig, net: &NetworkConfig) -> Result<TrainOutcome> {
    let (generator, discriminator) = initial_weights(cfg);
    train_from(dataset, cfg, net, generator, discriminator)
}

pub fn train_from(
    dataset: &[AngleSample],
    cfg: &TrainConfig,
    net: &NetworkConfig,
    mut generator: CouplingWeights,
    mut discriminator: CouplingWeights,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    net.validate()?;
    if dataset.is_empty() {
        return Err(Error::Empty("dataset"));
    }
    for s in dataset {
        AngleSample::new(s.theta1, s.theta2)?;
    }
    if generator.n_outputs() != SAMPLE_DIM || discriminator.n_inputs() != SAMPLE_DIM || discriminator.n_outputs() != 1 {
        return Err(Error::DimensionMismatch {
            expected: format!("generator {}->{SAMPLE_DIM}, discriminator {SAMPLE_DIM}->1", cfg.latent_dim),
            found: format!(
                "generator {}->{}, discriminator {}->{}",
                generator.n_inputs(),
                generator.n_outputs(),
                discriminator.n_inputs(),
                discriminator.n_outputs()
            ),
        });
    }

    let mut real_rng = stream(cfg.seed, Stream::RealBatch);
    let mut d_latent_rng = stream(cfg.seed, Stream::DiscriminatorLatent);
    let mut g_latent_rng = stream(cfg.seed, Stream::GeneratorLatent);
    let alg = cfg.algorithm;
    let mut trace = RunTrace::default();

    for step in 1..=cfg.iterations {
        let wrap = |e: Error| match e {
            Error::NonFinite { .. } | Error::Training { .. } => e,
            other => Error::Training {
                step,
                source: Box::new(other),
            },
        };
        let eta = cosine_lr(step, cfg.iterations, cfg.eta_min, cfg.eta_max);

        let real: Vec<Vec<f64>> = (0..cfg.batch)
            .map(|_| dataset[real_rng.random_range(0..dataset.len())].as_array().to_vec())
            .collect();
        let latent = sample_uniform_latent(cfg.batch, cfg.latent_dim, &mut d_latent_rng);
        let fake = generate(&generator, &latent, net).map_err(wrap)?;
        let d_loss = |w: &CouplingWeights| discriminator_loss(alg, w, &real, &fake, net);
        let loss_d = finite(d_loss(&discriminator).map_err(wrap)?, step)?;
        let grad_d = grad_fd(d_loss, &discriminator, cfg.fd_step, cfg.execution).map_err(wrap)?;
        discriminator.add_scaled(&grad_d, eta);

        let latent = sample_uniform_latent(cfg.batch, cfg.latent_dim, &mut g_latent_rng);
        let g_loss = |w: &CouplingWeights| generator_loss_on(alg, &discriminator, &generate(w, &latent, net)?, net);
        let loss_g = finite(g_loss(&generator).map_err(wrap)?, step)?;
        let grad_g = grad_fd(g_loss, &generator, cfg.fd_step, cfg.execution).map_err(wrap)?;
        generator.add_scaled(&grad_g, eta);

        if !discriminator.is_finite() || !generator.is_finite() {
            return Err(Error::NonFinite { step });
        }
        trace.records.push(StepRecord { step, loss_d, loss_g, eta });
    }

    Ok(TrainOutcome {
        generator,
        discriminator,
        trace,
    })
}
