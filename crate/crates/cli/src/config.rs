//! Run configuration, one TOML section per concern.

use std::path::Path;

use dqgan::data::LinearDataset;
use dqgan::network::NetworkConfig;
use dqgan::training::TrainConfig;
use serde::{Deserialize, Serialize};

use crate::exit::{Failure, Outcome};

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub network: NetworkConfig,
    pub training: TrainConfig,
    pub dataset: DatasetConfig,
    pub validation: ValidationConfig,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetConfig {
    pub n: usize,
    pub seed: u64,
    pub slope: f64,
    pub intercept: f64,
    pub noise_var: f64,
    pub theta1_mean: f64,
    pub theta1_var: f64,
    /// Histogram bins per axis for Hellinger distances.
    pub bins: usize,
    /// Generated samples drawn when scoring a trained generator.
    pub eval_samples: usize,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        let model = LinearDataset::default();
        Self {
            n: 1000,
            seed: 0,
            slope: model.slope,
            intercept: model.intercept,
            noise_var: model.noise_var,
            theta1_mean: model.theta1_mean,
            theta1_var: model.theta1_var,
            bins: 30,
            eval_samples: 20_000,
        }
    }
}

impl DatasetConfig {
    pub fn model(&self) -> LinearDataset {
        LinearDataset {
            slope: self.slope,
            intercept: self.intercept,
            noise_var: self.noise_var,
            theta1_mean: self.theta1_mean,
            theta1_var: self.theta1_var,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ValidationConfig {
    pub seed: u64,
    pub n_inputs: usize,
    pub mu: f64,
    pub instances: usize,
    /// Random `(θ, μ)` draws for the eigenbasis check.
    pub eigen_instances: usize,
    pub coupling_scale: f64,
    pub gammas: Vec<f64>,
    pub reference_gamma: f64,
    pub max_distance: f64,
    /// Negative-control hook: multiplies every effective jump rate.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub corrupt_rate_scale: Option<f64>,
}

impl Default for ValidationConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            n_inputs: 2,
            mu: 0.5,
            instances: 10,
            eigen_instances: 100,
            coupling_scale: 1.0,
            gammas: vec![50.0, 100.0, 200.0, 400.0],
            reference_gamma: 200.0,
            max_distance: 0.02,
            corrupt_rate_scale: None,
        }
    }
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Outcome<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path).map_err(|e| Failure::io(format!("reading config {}", path.display()), e))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Outcome<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Failure::config(format!("invalid config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Outcome<()> {
        self.network.validate().map_err(Failure::from_core)?;
        self.training.validate().map_err(Failure::from_core)?;
        self.dataset.model().validate().map_err(Failure::from_core)?;
        if self.dataset.bins < 2 {
            return Err(Failure::config("dataset.bins must be at least 2"));
        }
        let v = &self.validation;
        if v.n_inputs == 0 || v.n_inputs > dqgan::effective::MAX_ORACLE_INPUTS {
            return Err(Failure::config(format!(
                "validation.n_inputs must be in 1..={}",
                dqgan::effective::MAX_ORACLE_INPUTS
            )));
        }
        if !(v.mu > -1.0 && v.mu < 1.0) {
            return Err(Failure::config("validation.mu must lie in (-1, 1)"));
        }
        if v.gammas.is_empty() || v.gammas.iter().any(|g| !(*g > 0.0 && g.is_finite())) {
            return Err(Failure::config("validation.gammas must be positive"));
        }
        if !(v.coupling_scale > 0.0 && v.coupling_scale.is_finite()) {
            return Err(Failure::config("validation.coupling_scale must be positive"));
        }
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config always serializes")
    }
}
