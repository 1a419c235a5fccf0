//! Subcommand implementations. Each returns a printable report or a
//! classified [`Failure`].

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use dqgan::data::{hellinger, histogram2d, sample_uniform_latent, AngleSample, Histogram};
use dqgan::effective::{compare_generator_with_full, EffectiveGenerator, Excitation, GenericReduction};
use dqgan::lindblad::{dissipator_eigenbasis, encoding_model, liouvillian};
use dqgan::network::{CouplingWeights, NetworkConfig};
use dqgan::operators::{coupling_hamiltonian, CouplingMatrix};
use dqgan::par::Execution;
use dqgan::training::{generate_batch, train, TrainConfig, TrainOutcome};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{RunConfig, ValidationConfig};
use crate::exit::{Failure, Outcome};
use crate::files::{self, DatasetProvenance, RunManifest, RunResults, WeightsFile};

/// Fraction of trailing steps averaged for the reported final losses.
pub const FINAL_WINDOW: f64 = 0.1;

/// RNG stream reserved for post-training evaluation samples.
const EVAL_STREAM: u64 = 100;

pub fn sidecar_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".manifest.json");
    PathBuf::from(name)
}

pub fn cmd_synth(cfg: &RunConfig, out: &Path) -> Outcome<String> {
    let d = &cfg.dataset;
    if d.n == 0 {
        return Err(Failure::config("dataset.n must be at least 1"));
    }
    let samples = d.model().sample(d.n, &mut ChaCha8Rng::seed_from_u64(d.seed))?;
    files::write_samples(out, &samples)?;
    let mut manifest = RunManifest::new("synth", d.seed);
    manifest.dataset_model = Some(*d);
    let bytes = fs::read(out).map_err(|e| Failure::io(format!("reading back {}", out.display()), e))?;
    manifest.dataset = Some(DatasetProvenance {
        path: out.to_path_buf(),
        sha256: files::sha256_hex(&bytes),
        rows: samples.len(),
    });
    files::write_text(&sidecar_path(out), &manifest.to_json())?;
    Ok(format!("wrote {} samples to {}", samples.len(), out.display()))
}

/// Joint and per-axis Hellinger distances.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Distances {
    pub joint: f64,
    pub theta1: f64,
    pub theta2: f64,
}

pub fn distances(real: &Histogram, generated: &Histogram) -> Outcome<Distances> {
    Ok(Distances {
        joint: hellinger(real, generated)?,
        theta1: hellinger(&real.marginal(0), &generated.marginal(0))?,
        theta2: hellinger(&real.marginal(1), &generated.marginal(1))?,
    })
}

/// `n` generator samples from uniform latent inputs.
pub fn sample_generator(generator: &CouplingWeights, net: &NetworkConfig, n: usize, rng: &mut impl Rng, exec: Execution) -> Outcome<Vec<AngleSample>> {
    let latent = sample_uniform_latent(n, generator.n_inputs(), rng);
    let out = generate_batch(exec, generator, &latent, net)?;
    out.into_iter()
        .map(|v| match v.as_slice() {
            &[a, b] => Ok(AngleSample::new(a, b)?),
            _ => Err(Failure::config(format!("generator emits {} angles, expected 2", v.len()))),
        })
        .collect()
}

pub struct TrainRun {
    pub outcome: TrainOutcome,
    pub manifest: RunManifest,
}

pub fn run_training(net: &NetworkConfig, training: &TrainConfig, data_path: &Path, bins: usize, eval_samples: usize, out_dir: &Path) -> Outcome<TrainRun> {
    let bytes = fs::read(data_path).map_err(|e| Failure::io(format!("reading {}", data_path.display()), e))?;
    let text = String::from_utf8(bytes.clone()).map_err(|e| Failure::config(format!("{}: {e}", data_path.display())))?;
    let dataset = files::parse_samples(&text, data_path)?;
    if dataset.is_empty() {
        return Err(Failure::config(format!("{}: dataset is empty", data_path.display())));
    }
    fs::create_dir_all(out_dir).map_err(|e| Failure::io(format!("creating {}", out_dir.display()), e))?;

    let outcome = train(&dataset, training, net)?;

    let mut eval_rng = ChaCha8Rng::seed_from_u64(training.seed);
    eval_rng.set_stream(EVAL_STREAM);
    let generated = sample_generator(&outcome.generator, net, eval_samples.max(1), &mut eval_rng, training.execution)?;
    let dist = distances(&histogram2d(&dataset, bins)?, &histogram2d(&generated, bins)?)?;
    let last = outcome.trace.records.last().expect("at least one iteration");
    let (window_d, window_g) = outcome.trace.final_window_means(FINAL_WINDOW).expect("non-empty trace");

    let mut manifest = RunManifest::new("train", training.seed);
    manifest.network = Some(*net);
    manifest.training = Some(*training);
    manifest.dataset = Some(DatasetProvenance {
        path: data_path.to_path_buf(),
        sha256: files::sha256_hex(&bytes),
        rows: dataset.len(),
    });
    manifest.results = Some(RunResults {
        final_loss_d: last.loss_d,
        final_loss_g: last.loss_g,
        window_loss_d: window_d,
        window_loss_g: window_g,
        hellinger_joint: dist.joint,
        hellinger_theta1: dist.theta1,
        hellinger_theta2: dist.theta2,
        eval_samples: eval_samples.max(1),
        bins,
    });

    let weights = WeightsFile::new(*net, outcome.generator.clone(), outcome.discriminator.clone());
    files::write_text(&out_dir.join("weights.json"), &weights.to_json())?;
    files::write_text(&out_dir.join("trace.csv"), &files::trace_csv(&outcome.trace))?;
    files::write_text(&out_dir.join("manifest.json"), &manifest.to_json())?;
    Ok(TrainRun { outcome, manifest })
}

fn train_report(run: &TrainRun, out_dir: &Path) -> String {
    let r = run.manifest.results.as_ref().expect("training always records results");
    format!(
        "steps: {}\nfinal-window L_D: {:.6}\nfinal-window L_G: {:.6}\nD_H joint: {:.4} (theta1 {:.4}, theta2 {:.4})\noutputs: {}",
        run.outcome.trace.records.len(),
        r.window_loss_d,
        r.window_loss_g,
        r.hellinger_joint,
        r.hellinger_theta1,
        r.hellinger_theta2,
        out_dir.display()
    )
}

pub fn cmd_train(cfg: &RunConfig, data_path: &Path, out_dir: &Path) -> Outcome<String> {
    let run = run_training(&cfg.network, &cfg.training, data_path, cfg.dataset.bins, cfg.dataset.eval_samples, out_dir)?;
    Ok(train_report(&run, out_dir))
}

/// Re-runs the training recorded in a manifest; the dataset must still
/// hash to the recorded value.
pub fn cmd_train_from_manifest(manifest_path: &Path, seed: Option<u64>, out_dir: &Path) -> Outcome<String> {
    let m = RunManifest::read(manifest_path)?;
    let missing = |what: &str| Failure::config(format!("{}: manifest lacks {what}", manifest_path.display()));
    let net = m.network.ok_or_else(|| missing("network"))?;
    let mut training = m.training.ok_or_else(|| missing("training"))?;
    let provenance = m.dataset.ok_or_else(|| missing("dataset"))?;
    let results = m.results.ok_or_else(|| missing("results"))?;
    if let Some(s) = seed {
        training.seed = s;
    }
    let bytes = fs::read(&provenance.path).map_err(|e| Failure::io(format!("reading {}", provenance.path.display()), e))?;
    if files::sha256_hex(&bytes) != provenance.sha256 {
        return Err(Failure::config(format!("{}: dataset hash differs from manifest", provenance.path.display())));
    }
    let run = run_training(&net, &training, &provenance.path, results.bins, results.eval_samples, out_dir)?;
    Ok(train_report(&run, out_dir))
}

pub fn cmd_sample(weights_path: &Path, n: usize, seed: u64, out: &Path) -> Outcome<String> {
    let w = WeightsFile::read(weights_path)?;
    let samples = sample_generator(&w.generator, &w.network, n, &mut ChaCha8Rng::seed_from_u64(seed), Execution::default())?;
    files::write_samples(out, &samples)?;
    Ok(format!("wrote {} generated samples to {}", samples.len(), out.display()))
}

pub fn cmd_eval(real_path: &Path, generated_path: &Path, bins: usize, out_dir: Option<&Path>) -> Outcome<(Distances, String)> {
    let real = files::read_samples(real_path)?;
    let generated = files::read_samples(generated_path)?;
    let hr = histogram2d(&real, bins)?;
    let hg = histogram2d(&generated, bins)?;
    let d = distances(&hr, &hg)?;
    if let Some(dir) = out_dir {
        fs::create_dir_all(dir).map_err(|e| Failure::io(format!("creating {}", dir.display()), e))?;
        files::write_text(&dir.join("histogram_real.csv"), &files::histogram_csv(&hr))?;
        files::write_text(&dir.join("histogram_generated.csv"), &files::histogram_csv(&hg))?;
    }
    let report = format!(
        "bins per axis: {bins}\nD_H joint: {:.6}\nD_H theta1: {:.6}\nD_H theta2: {:.6}",
        d.joint, d.theta1, d.theta2
    );
    Ok((d, report))
}

/// Outcome of the effective-model validation suite.
#[derive(Clone, Debug, Default)]
pub struct ValidationReport {
    pub text: String,
    /// Names of failed properties.
    pub failures: Vec<String>,
    /// `distances[instance][gamma]`.
    pub distances: Vec<Vec<f64>>,
    pub eigen_error: f64,
    pub biorthogonality_error: f64,
    pub reconstruction_error: f64,
    pub multi_excitation_max: f64,
    pub residual_hamiltonian_max: f64,
}

pub const EIGEN_TOLERANCE: f64 = 1e-10;
pub const BIORTHOGONALITY_TOLERANCE: f64 = 1e-12;
pub const RECONSTRUCTION_TOLERANCE: f64 = 1e-12;
/// Below this every distance counts as converged (μ = 0 and similar).
pub const CONVERGED_DISTANCE: f64 = 1e-9;

fn random_coupling(rng: &mut impl Rng, scale: f64) -> CouplingMatrix {
    CouplingMatrix(std::array::from_fn(|_| std::array::from_fn(|_| rng.random_range(-scale..=scale))))
}

/// Every multi-index over `{0..3}^n` with two or more excited sites.
fn multi_excitations(n: usize) -> Vec<Vec<usize>> {
    (0..4usize.pow(n as u32))
        .map(|mut code| {
            (0..n)
                .map(|_| {
                    let k = code % 4;
                    code /= 4;
                    k
                })
                .collect::<Vec<_>>()
        })
        .filter(|idx| idx.iter().filter(|&&k| k != 0).count() >= 2)
        .collect()
}

pub fn run_validation(v: &ValidationConfig) -> Outcome<ValidationReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(v.seed);
    let mut rep = ValidationReport::default();

    for _ in 0..v.eigen_instances {
        let theta = rng.random_range(0.0..=std::f64::consts::PI);
        let mu = rng.random_range(-0.95..0.95);
        let basis = dissipator_eigenbasis(theta, mu)?;
        let superop = liouvillian(&encoding_model(theta, mu)?);
        for k in 0..4 {
            let err = superop.apply(&basis.psi[k]).max_abs_diff(&basis.psi[k].scale_real(basis.xi[k]));
            rep.eigen_error = rep.eigen_error.max(err);
        }
        rep.biorthogonality_error = rep.biorthogonality_error.max(basis.biorthogonality_error());
    }

    let instances: Vec<(Vec<CouplingMatrix>, Vec<f64>)> = (0..v.instances)
        .map(|_| {
            let j = (0..v.n_inputs).map(|_| random_coupling(&mut rng, v.coupling_scale)).collect();
            let t = (0..v.n_inputs).map(|_| rng.random_range(0.0..=std::f64::consts::PI)).collect();
            (j, t)
        })
        .collect();

    for (j, t) in &instances {
        let reduction = GenericReduction::new(j, t, v.mu)?;
        let rebuilt = reduction.reconstruct_hamiltonian(t, v.mu)?;
        rep.reconstruction_error = rep.reconstruction_error.max(rebuilt.max_abs_diff(&coupling_hamiltonian(j)?));
        rep.residual_hamiltonian_max = rep.residual_hamiltonian_max.max(reduction.h_a.max_abs());
        for idx in multi_excitations(v.n_inputs) {
            let g = dqgan::effective::g_from_trace_numeric(j, t, v.mu, &idx)?;
            rep.multi_excitation_max = rep.multi_excitation_max.max(g.max_abs());
        }
        debug_assert_eq!(reduction.coefficients.indices[0], Excitation::Ground);
    }

    let mut table = String::new();
    let _ = write!(table, "{:>8}", "instance");
    for g in &v.gammas {
        let _ = write!(table, " {:>12}", format!("d(G={g})"));
    }
    for g in &v.gammas {
        let _ = write!(table, " {:>12}", format!("G*d(G={g})"));
    }
    let _ = writeln!(table, " {:>20}", "ratios");

    let mut monotone_ok = true;
    let mut reference_ok = true;
    let reference = v.gammas.iter().position(|&g| g == v.reference_gamma);
    for (i, (j, t)) in instances.iter().enumerate() {
        let mut row = Vec::with_capacity(v.gammas.len());
        for &gamma in &v.gammas {
            let mut gen = EffectiveGenerator::closed_form(j, t, v.mu, gamma)?;
            if let Some(scale) = v.corrupt_rate_scale {
                if let Some(first) = gen.jump_terms.first_mut() {
                    first.1 *= scale;
                }
            }
            row.push(compare_generator_with_full(&gen, j, t, v.mu)?);
        }
        let converged = row.iter().all(|&d| d <= CONVERGED_DISTANCE);
        if !converged && row.windows(2).any(|w| w[1] >= w[0]) {
            monotone_ok = false;
        }
        let at_ref = match reference {
            Some(k) => row[k],
            None => {
                let gen = EffectiveGenerator::closed_form(j, t, v.mu, v.reference_gamma)?;
                compare_generator_with_full(&gen, j, t, v.mu)?
            }
        };
        if at_ref > v.max_distance {
            reference_ok = false;
        }
        let _ = write!(table, "{i:>8}");
        for d in &row {
            let _ = write!(table, " {d:>12.4e}");
        }
        for (d, g) in row.iter().zip(&v.gammas) {
            let _ = write!(table, " {:>12.4e}", d * g);
        }
        let ratios: Vec<String> = row.windows(2).map(|w| format!("{:.3}", w[1] / w[0])).collect();
        let _ = writeln!(table, " {:>20}", ratios.join(" "));
        rep.distances.push(row);
    }

    let checks = [
        ("eigenbasis", rep.eigen_error <= EIGEN_TOLERANCE && rep.biorthogonality_error <= BIORTHOGONALITY_TOLERANCE),
        (
            "reconstruction",
            rep.reconstruction_error <= RECONSTRUCTION_TOLERANCE && rep.multi_excitation_max <= RECONSTRUCTION_TOLERANCE,
        ),
        ("residual-hamiltonian", rep.residual_hamiltonian_max <= RECONSTRUCTION_TOLERANCE),
        ("monotone-convergence", monotone_ok),
        ("reference-distance", reference_ok),
    ];
    let mut text = String::new();
    let _ = writeln!(text, "eigenbasis: max eigen error {:.3e}, biorthogonality {:.3e}", rep.eigen_error, rep.biorthogonality_error);
    let _ = writeln!(
        text,
        "reconstruction: max error {:.3e}, multi-excitation max {:.3e}",
        rep.reconstruction_error, rep.multi_excitation_max
    );
    let _ = writeln!(text, "residual hamiltonian: max {:.3e}", rep.residual_hamiltonian_max);
    let _ = writeln!(text, "effective vs full (mu = {}, N = {}):", v.mu, v.n_inputs);
    text.push_str(&table);
    for (name, ok) in checks {
        let _ = writeln!(text, "{name}: {}", if ok { "pass" } else { "FAIL" });
        if !ok {
            rep.failures.push(name.to_string());
        }
    }
    rep.text = text;
    Ok(rep)
}

pub fn cmd_validate(cfg: &RunConfig) -> Outcome<String> {
    let rep = run_validation(&cfg.validation)?;
    if rep.failures.is_empty() {
        Ok(rep.text)
    } else {
        Err(Failure::validation(format!("{}failed properties: {}", rep.text, rep.failures.join(", "))))
    }
}
