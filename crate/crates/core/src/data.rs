//! Synthetic angle datasets, histograms and the Hellinger distance.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AngleSample {
    pub theta1: f64,
    pub theta2: f64,
}

impl AngleSample {
    pub fn new(theta1: f64, theta2: f64) -> Result<Self> {
        for t in [theta1, theta2] {
            if !(0.0..=PI).contains(&t) {
                return Err(Error::Domain {
                    what: "sample angle",
                    value: t,
                    domain: "[0, pi]",
                });
            }
        }
        Ok(Self { theta1, theta2 })
    }

    pub fn as_array(&self) -> [f64; 2] {
        [self.theta1, self.theta2]
    }
}

/// `θ2 = a·θ1 + b + ε`, with `θ1 ~ N(mean, var)` and `ε ~ N(0, noise_var)`;
/// both coordinates clipped to `[0, π]`. Variances, not standard deviations.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinearDataset {
    pub slope: f64,
    pub intercept: f64,
    pub noise_var: f64,
    pub theta1_mean: f64,
    pub theta1_var: f64,
}

impl Default for LinearDataset {
    fn default() -> Self {
        Self {
            slope: -0.6,
            intercept: 0.8 * PI,
            noise_var: 0.01,
            theta1_mean: PI / 2.0,
            theta1_var: 0.4,
        }
    }
}

impl LinearDataset {
    pub fn validate(&self) -> Result<()> {
        let finite = [self.slope, self.intercept, self.theta1_mean].iter().all(|x| x.is_finite());
        if !finite || !(self.noise_var >= 0.0 && self.noise_var.is_finite()) || !(self.theta1_var >= 0.0 && self.theta1_var.is_finite()) {
            return Err(Error::Config("dataset parameters must be finite with non-negative variances".into()));
        }
        Ok(())
    }

    pub fn sample(&self, n: usize, rng: &mut impl Rng) -> Result<Vec<AngleSample>> {
        self.validate()?;
        let x = Normal::new(self.theta1_mean, self.theta1_var.sqrt()).map_err(|e| Error::Config(e.to_string()))?;
        let noise = Normal::new(0.0, self.noise_var.sqrt()).map_err(|e| Error::Config(e.to_string()))?;
        Ok((0..n)
            .map(|_| {
                let t1: f64 = x.sample(rng);
                let t2 = self.slope * t1 + self.intercept + noise.sample(rng);
                AngleSample {
                    theta1: t1.clamp(0.0, PI),
                    theta2: t2.clamp(0.0, PI),
                }
            })
            .collect())
    }
}

/// `n` latent vectors of dimension `dim`, uniform on `[0, π]^dim`.
pub fn sample_uniform_latent(n: usize, dim: usize, rng: &mut impl Rng) -> Vec<Vec<f64>> {
    (0..n).map(|_| (0..dim).map(|_| rng.random_range(0.0..=PI)).collect()).collect()
}

/// `n` points uniform on `[0, π]²`.
pub fn sample_uniform_inputs(n: usize, rng: &mut impl Rng) -> Vec<AngleSample> {
    (0..n)
        .map(|_| AngleSample {
            theta1: rng.random_range(0.0..=PI),
            theta2: rng.random_range(0.0..=PI),
        })
        .collect()
}

/// Normalized histogram over `[0, π]^dims` with equal-width bins; values at
/// the upper edge land in the last bin.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    bins: usize,
    dims: usize,
    probabilities: Vec<f64>,
}

fn bin_of(x: f64, bins: usize) -> usize {
    ((x / PI * bins as f64).floor().max(0.0) as usize).min(bins - 1)
}

impl Histogram {
    fn from_indices(bins: usize, dims: usize, indices: impl Iterator<Item = usize>) -> Result<Self> {
        if bins < 2 {
            return Err(Error::Config(format!("histogram needs at least 2 bins per axis, got {bins}")));
        }
        let mut counts = vec![0u64; bins.pow(dims as u32)];
        let mut total = 0u64;
        for i in indices {
            counts[i] += 1;
            total += 1;
        }
        if total == 0 {
            return Err(Error::Empty("histogram samples"));
        }
        let probabilities = counts.iter().map(|&c| c as f64 / total as f64).collect();
        Ok(Self { bins, dims, probabilities })
    }

    pub fn bins(&self) -> usize {
        self.bins
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    /// Joint probability of bin `(i, j)` for a 2-D histogram.
    pub fn get2(&self, i: usize, j: usize) -> f64 {
        assert_eq!(self.dims, 2);
        self.probabilities[i * self.bins + j]
    }

    /// 1-D marginal along `axis` (0 for `θ1`, 1 for `θ2`).
    pub fn marginal(&self, axis: usize) -> Self {
        assert!(self.dims == 2 && axis < 2);
        let mut p = vec![0.0; self.bins];
        for i in 0..self.bins {
            for j in 0..self.bins {
                p[if axis == 0 { i } else { j }] += self.get2(i, j);
            }
        }
        Self {
            bins: self.bins,
            dims: 1,
            probabilities: p,
        }
    }
}

pub fn histogram1d(values: &[f64], bins: usize) -> Result<Histogram> {
    let b = bins.max(2);
    Histogram::from_indices(bins, 1, values.iter().map(|&x| bin_of(x, b)))
}

pub fn histogram2d(samples: &[AngleSample], bins: usize) -> Result<Histogram> {
    let b = bins.max(2);
    Histogram::from_indices(bins, 2, samples.iter().map(|s| bin_of(s.theta1, b) * b + bin_of(s.theta2, b)))
}

/// `‖√p − √q‖₂ / √2`.
pub fn hellinger(p: &Histogram, q: &Histogram) -> Result<f64> {
    if (p.bins, p.dims) != (q.bins, q.dims) {
        return Err(Error::BinningMismatch {
            left: format!("{} bins x {} dims", p.bins, p.dims),
            right: format!("{} bins x {} dims", q.bins, q.dims),
        });
    }
    let sq: f64 = p.probabilities.iter().zip(&q.probabilities).map(|(a, b)| (a.sqrt() - b.sqrt()).powi(2)).sum();
    Ok((sq / 2.0).sqrt().min(1.0))
}
