//! On-disk formats: CSV datasets, traces and histograms; JSON manifests
//! and weights. Every file carries a format version.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use dqgan::data::{AngleSample, Histogram};
use dqgan::network::{CouplingWeights, NetworkConfig};
use dqgan::training::{RunTrace, TrainConfig};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::DatasetConfig;
use crate::exit::{Failure, Outcome};

pub const FORMAT_VERSION: &str = "1.0";
const VERSION_PREFIX: &str = "# format_version = ";

fn major(version: &str) -> Option<&str> {
    version.split('.').next().filter(|m| !m.is_empty())
}

fn check_version(found: &str, origin: &Path) -> Outcome<()> {
    if major(found) != major(FORMAT_VERSION) {
        return Err(Failure::config(format!(
            "{}: unsupported format_version {found} (expected major {})",
            origin.display(),
            major(FORMAT_VERSION).unwrap_or_default()
        )));
    }
    Ok(())
}

/// 17 significant digits, enough to round-trip any `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_text(path: &Path, text: &str) -> Outcome<()> {
    fs::write(path, text).map_err(|e| Failure::io(format!("writing {}", path.display()), e))
}

pub fn read_text(path: &Path) -> Outcome<String> {
    fs::read_to_string(path).map_err(|e| Failure::io(format!("reading {}", path.display()), e))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// CSV body after the optional version comment; an unknown major version
/// is rejected.
fn csv_reader<'a>(text: &'a str, origin: &Path) -> Outcome<csv::Reader<&'a [u8]>> {
    let mut body = text;
    if let Some(first) = text.lines().next() {
        if let Some(v) = first.strip_prefix(VERSION_PREFIX) {
            check_version(v.trim(), origin)?;
            body = text[first.len()..].trim_start_matches(['\r', '\n']);
        }
    }
    Ok(csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(body.as_bytes()))
}

fn csv_text(header: &str, rows: impl IntoIterator<Item = String>) -> String {
    let mut out = format!("{VERSION_PREFIX}{FORMAT_VERSION}\n{header}\n");
    for row in rows {
        out.push_str(&row);
        out.push('\n');
    }
    out
}

pub fn samples_csv(samples: &[AngleSample]) -> String {
    csv_text("theta1,theta2", samples.iter().map(|s| format!("{},{}", fmt_f64(s.theta1), fmt_f64(s.theta2))))
}

pub fn write_samples(path: &Path, samples: &[AngleSample]) -> Outcome<()> {
    write_text(path, &samples_csv(samples))
}

pub fn parse_samples(text: &str, origin: &Path) -> Outcome<Vec<AngleSample>> {
    let mut reader = csv_reader(text, origin)?;
    let bad = |msg: String| Failure::config(format!("{}: {msg}", origin.display()));
    let header = reader.headers().map_err(|e| bad(e.to_string()))?.clone();
    if header.len() != 2 || &header[0] != "theta1" || &header[1] != "theta2" {
        return Err(bad(format!("expected header theta1,theta2, found {}", header.iter().collect::<Vec<_>>().join(","))));
    }
    let mut out = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| bad(e.to_string()))?;
        let parse = |k: usize| record[k].parse::<f64>().map_err(|e| bad(format!("row {}: {e}", i + 1)));
        let sample = AngleSample::new(parse(0)?, parse(1)?).map_err(|e| bad(format!("row {}: {e}", i + 1)))?;
        out.push(sample);
    }
    Ok(out)
}

pub fn read_samples(path: &Path) -> Outcome<Vec<AngleSample>> {
    parse_samples(&read_text(path)?, path)
}

pub fn trace_csv(trace: &RunTrace) -> String {
    csv_text(
        "step,L_D,L_G,eta",
        trace
            .records
            .iter()
            .map(|r| format!("{},{},{},{}", r.step, fmt_f64(r.loss_d), fmt_f64(r.loss_g), fmt_f64(r.eta))),
    )
}

pub fn parse_trace(text: &str, origin: &Path) -> Outcome<RunTrace> {
    let mut reader = csv_reader(text, origin)?;
    let bad = |msg: String| Failure::config(format!("{}: {msg}", origin.display()));
    let mut trace = RunTrace::default();
    for record in reader.deserialize::<(usize, f64, f64, f64)>() {
        let (step, loss_d, loss_g, eta) = record.map_err(|e| bad(e.to_string()))?;
        trace.records.push(dqgan::training::StepRecord { step, loss_d, loss_g, eta });
    }
    Ok(trace)
}

pub fn histogram_csv(h: &Histogram) -> String {
    let mut rows = Vec::with_capacity(h.bins() * h.bins());
    for i in 0..h.bins() {
        for j in 0..h.bins() {
            let mut row = String::new();
            let _ = write!(row, "{i},{j},{}", fmt_f64(h.get2(i, j)));
            rows.push(row);
        }
    }
    csv_text("bin_i,bin_j,p", rows)
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("plain data always serializes");
    s.push('\n');
    s
}

fn from_json<T: DeserializeOwned>(text: &str, origin: &Path) -> Outcome<T> {
    let bad = |e: serde_json::Error| Failure::config(format!("{}: {e}", origin.display()));
    let value: serde_json::Value = serde_json::from_str(text).map_err(bad)?;
    match value.get("format_version").and_then(|v| v.as_str()) {
        Some(v) => check_version(v, origin)?,
        None => return Err(Failure::config(format!("{}: missing format_version", origin.display()))),
    }
    serde_json::from_value(value).map_err(bad)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetProvenance {
    pub path: PathBuf,
    pub sha256: String,
    pub rows: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunResults {
    pub final_loss_d: f64,
    pub final_loss_g: f64,
    /// Means over the last 10% of steps.
    pub window_loss_d: f64,
    pub window_loss_g: f64,
    pub hellinger_joint: f64,
    pub hellinger_theta1: f64,
    pub hellinger_theta2: f64,
    pub eval_samples: usize,
    pub bins: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub format_version: String,
    pub command: String,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub network: Option<NetworkConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub training: Option<TrainConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dataset: Option<DatasetProvenance>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dataset_model: Option<DatasetConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub results: Option<RunResults>,
}

impl RunManifest {
    pub fn new(command: &str, seed: u64) -> Self {
        Self {
            format_version: FORMAT_VERSION.into(),
            command: command.into(),
            seed,
            network: None,
            training: None,
            dataset: None,
            dataset_model: None,
            results: None,
        }
    }

    pub fn to_json(&self) -> String {
        to_json(self)
    }

    pub fn parse(text: &str, origin: &Path) -> Outcome<Self> {
        from_json(text, origin)
    }

    pub fn read(path: &Path) -> Outcome<Self> {
        Self::parse(&read_text(path)?, path)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightsFile {
    pub format_version: String,
    pub network: NetworkConfig,
    /// `M × N × 3 × 3` nested arrays.
    pub generator: CouplingWeights,
    pub discriminator: CouplingWeights,
}

impl WeightsFile {
    pub fn new(network: NetworkConfig, generator: CouplingWeights, discriminator: CouplingWeights) -> Self {
        Self {
            format_version: FORMAT_VERSION.into(),
            network,
            generator,
            discriminator,
        }
    }

    pub fn to_json(&self) -> String {
        to_json(self)
    }

    pub fn read(path: &Path) -> Outcome<Self> {
        let w: Self = from_json(&read_text(path)?, path)?;
        w.network.validate()?;
        Ok(w)
    }
}
