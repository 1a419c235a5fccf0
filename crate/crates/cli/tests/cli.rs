use std::f64::consts::FRAC_PI_2;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use dqgan::network::{CouplingWeights, NetworkConfig};
use dqgan::operators::CouplingMatrix;
use dqgan_cli::files::{self, RunManifest, WeightsFile};
use tempfile::TempDir;

fn dqgan(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dqgan")).args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn path(dir: &TempDir, name: &str) -> String {
    dir.path().join(name).to_string_lossy().into_owned()
}

fn write(dir: &TempDir, name: &str, text: &str) -> String {
    let p = path(dir, name);
    fs::write(&p, text).unwrap();
    p
}

const SMOKE: &str = "[training]\niterations = 3\nbatch = 2\n[dataset]\nn = 50\neval_samples = 200\n";

#[test]
fn synth_default_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let (a, b) = (path(&dir, "a.csv"), path(&dir, "b.csv"));
    assert_eq!(code(&dqgan(&["synth", "--out", &a])), 0);
    assert_eq!(code(&dqgan(&["synth", "--out", &b])), 0);
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    assert_eq!(files::read_samples(Path::new(&a)).unwrap().len(), 1000);
    let m = RunManifest::read(Path::new(&format!("{a}.manifest.json"))).unwrap();
    assert_eq!(m.dataset.unwrap().sha256, files::sha256_hex(&fs::read(&a).unwrap()));

    let c = path(&dir, "c.csv");
    assert_eq!(code(&dqgan(&["synth", "--seed", "9", "--out", &c])), 0);
    assert_ne!(fs::read(&a).unwrap(), fs::read(&c).unwrap());
}

#[test]
fn synth_without_noise_is_constant() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "c.toml", "[dataset]\nnoise_var = 0.0\ntheta1_var = 0.0\nn = 20\n");
    let out = path(&dir, "d.csv");
    assert_eq!(code(&dqgan(&["synth", "--config", &cfg, "--out", &out])), 0);
    for s in files::read_samples(Path::new(&out)).unwrap() {
        assert_eq!(s.theta1, FRAC_PI_2);
        assert!((s.theta2 - FRAC_PI_2).abs() < 1e-15);
    }
}

#[test]
fn exit_codes_for_config_and_io() {
    let dir = TempDir::new().unwrap();
    let missing = path(&dir, "no/such/dir/d.csv");
    assert_eq!(code(&dqgan(&["synth", "--out", &missing])), 2);
    let bad = write(&dir, "bad.toml", "[network]\nmu = 2.0\n");
    assert_eq!(code(&dqgan(&["synth", "--config", &bad, "--out", &path(&dir, "x.csv")])), 1);
    let typo = write(&dir, "typo.toml", "[trainig]\niterations = 1\n");
    assert_eq!(code(&dqgan(&["validate", "--config", &typo])), 1);
    assert_eq!(code(&dqgan(&["validate", "--config", &path(&dir, "absent.toml")])), 2);
}

#[test]
fn train_smoke_and_manifest_rerun() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "c.toml", &SMOKE.replace("iterations = 3", "iterations = 1"));
    let data = path(&dir, "d.csv");
    assert_eq!(code(&dqgan(&["synth", "--config", &cfg, "--out", &data])), 0);
    let run = path(&dir, "run");
    let out = dqgan(&["train", "--config", &cfg, "--data", &data, "--out", &run]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let trace = fs::read_to_string(format!("{run}/trace.csv")).unwrap();
    assert_eq!(trace.lines().count(), 3, "{trace}");
    assert!(trace.lines().nth(1) == Some("step,L_D,L_G,eta"));

    let manifest = RunManifest::read(Path::new(&format!("{run}/manifest.json"))).unwrap();
    assert_eq!(RunManifest::parse(&manifest.to_json(), Path::new("m")).unwrap(), manifest);
    assert_eq!(manifest.training.unwrap().iterations, 1);
    let weights = WeightsFile::read(Path::new(&format!("{run}/weights.json"))).unwrap();
    assert_eq!((weights.generator.n_outputs(), weights.discriminator.n_outputs()), (2, 1));

    let rerun = path(&dir, "rerun");
    let out = dqgan(&["train", "--manifest", &format!("{run}/manifest.json"), "--out", &rerun]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(fs::read(format!("{run}/trace.csv")).unwrap(), fs::read(format!("{rerun}/trace.csv")).unwrap());
    assert_eq!(fs::read(format!("{run}/weights.json")).unwrap(), fs::read(format!("{rerun}/weights.json")).unwrap());

    fs::write(&data, "theta1,theta2\n1.0,1.0\n").unwrap();
    let out = dqgan(&["train", "--manifest", &format!("{run}/manifest.json"), "--out", &rerun]);
    assert_eq!(code(&out), 1);
}

#[test]
fn train_rejects_bad_data() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "c.toml", SMOKE);
    let data = write(&dir, "d.csv", "theta1,theta2\n1.0,9.0\n");
    assert_eq!(code(&dqgan(&["train", "--config", &cfg, "--data", &data, "--out", &path(&dir, "r")])), 1);
    let absent = path(&dir, "absent.csv");
    assert_eq!(code(&dqgan(&["train", "--config", &cfg, "--data", &absent, "--out", &path(&dir, "r")])), 2);
}

fn weights_file(dir: &TempDir, net: NetworkConfig, generator: CouplingWeights) -> String {
    let disc = CouplingWeights::from_row(&[CouplingMatrix::identity(); 2], 1);
    write(dir, "w.json", &WeightsFile::new(net, generator, disc).to_json())
}

#[test]
fn sample_symmetric_and_edge_cases() {
    let dir = TempDir::new().unwrap();
    let net = NetworkConfig { mu: 0.0, ..Default::default() };
    let g = CouplingWeights::from_row(&[CouplingMatrix::identity(), CouplingMatrix::diagonal([0.3, -0.2, 0.5])], 2);
    let w = weights_file(&dir, net, g);
    let out = path(&dir, "g.csv");
    assert_eq!(code(&dqgan(&["sample", "--weights", &w, "--n", "50", "--seed", "3", "--out", &out])), 0);
    for s in files::read_samples(Path::new(&out)).unwrap() {
        assert!((s.theta1 - FRAC_PI_2).abs() < 1e-12 && (s.theta2 - FRAC_PI_2).abs() < 1e-12);
    }

    let empty = path(&dir, "e.csv");
    assert_eq!(code(&dqgan(&["sample", "--weights", &w, "--n", "0", "--out", &empty])), 0);
    let text = fs::read_to_string(&empty).unwrap();
    assert_eq!(text.lines().last(), Some("theta1,theta2"));
    assert!(files::read_samples(Path::new(&empty)).unwrap().is_empty());
}

#[test]
fn sample_is_seeded() {
    let dir = TempDir::new().unwrap();
    let g = CouplingWeights::random(2, 2, 1.0, &mut <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(1));
    let w = weights_file(&dir, NetworkConfig::default(), g);
    let (a, b, c) = (path(&dir, "a.csv"), path(&dir, "b.csv"), path(&dir, "c.csv"));
    for (p, seed) in [(&a, "5"), (&b, "5"), (&c, "6")] {
        assert_eq!(code(&dqgan(&["sample", "--weights", &w, "--n", "20", "--seed", seed, "--out", p])), 0);
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    assert_ne!(fs::read(&a).unwrap(), fs::read(&c).unwrap());
}

#[test]
fn sample_failures() {
    let dir = TempDir::new().unwrap();
    let out = path(&dir, "g.csv");
    let malformed = write(&dir, "m.json", "{\"format_version\": \"1.0\", \"generator\": []}");
    assert_eq!(code(&dqgan(&["sample", "--weights", &malformed, "--out", &out])), 1);

    let g = CouplingWeights::from_row(&[CouplingMatrix::identity(); 2], 2);
    let w = weights_file(&dir, NetworkConfig::default(), g);
    let future = write(&dir, "f.json", &fs::read_to_string(&w).unwrap().replace("\"1.0\"", "\"2.0\""));
    assert_eq!(code(&dqgan(&["sample", "--weights", &future, "--out", &out])), 1);

    let degenerate = weights_file(&dir, NetworkConfig::default(), CouplingWeights::zeros(2, 2));
    let res = dqgan(&["sample", "--weights", &degenerate, "--n", "3", "--out", &out]);
    assert_eq!(code(&res), 3, "{}", String::from_utf8_lossy(&res.stderr));
}

#[test]
fn eval_identity_disjoint_and_histograms() {
    let dir = TempDir::new().unwrap();
    let a = write(&dir, "a.csv", "theta1,theta2\n0.1,0.1\n0.2,0.3\n");
    let b = write(&dir, "b.csv", "theta1,theta2\n3.0,3.0\n");
    let hist = path(&dir, "h");
    let same = dqgan(&["eval", "--real", &a, "--generated", &a, "--out", &hist]);
    assert_eq!(code(&same), 0);
    assert!(String::from_utf8_lossy(&same.stdout).contains("D_H joint: 0.000000"));
    let h = fs::read_to_string(format!("{hist}/histogram_real.csv")).unwrap();
    assert_eq!(h.lines().count(), 2 + 900);

    let apart = dqgan(&["eval", "--real", &a, "--generated", &b, "--bins", "10"]);
    assert!(String::from_utf8_lossy(&apart.stdout).contains("D_H joint: 1.000000"));

    assert_eq!(code(&dqgan(&["eval", "--real", &a, "--generated", &b, "--bins", "1"])), 1);
    let junk = write(&dir, "j.csv", "x\n1\n");
    assert_eq!(code(&dqgan(&["eval", "--real", &a, "--generated", &junk])), 1);
}

#[test]
fn validate_default_passes_and_hook_fails() {
    let ok = dqgan(&["validate"]);
    assert_eq!(code(&ok), 0, "{}", String::from_utf8_lossy(&ok.stderr));
    assert!(String::from_utf8_lossy(&ok.stdout).contains("monotone-convergence: pass"));

    let dir = TempDir::new().unwrap();
    let bad = write(&dir, "bad.toml", "[validation]\ncorrupt_rate_scale = 3.0\n");
    let out = dqgan(&["validate", "--config", &bad]);
    assert_eq!(code(&out), 4);
    assert!(String::from_utf8_lossy(&out.stderr).contains("failed properties"));
}

#[test]
fn validate_symmetric_point_converges_trivially() {
    let cfg = dqgan_cli::config::RunConfig::parse("[validation]\nmu = 0.0\n").unwrap();
    let rep = dqgan_cli::commands::run_validation(&cfg.validation).unwrap();
    assert!(rep.failures.is_empty());
    assert!(rep.distances.iter().flatten().all(|&d| d <= 1e-6));
}
