//! Two-layer dissipative networks: angle encoding on the input layer,
//! steady-state readout on the output layer.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::effective::{effective_steady_state, EffectiveGenerator};
use crate::error::{Error, Result};
use crate::operators::{check_angle, ComplexMatrix, CouplingMatrix, DensityMatrix, C64};

/// Slack allowed on `⟨σ_z⟩` beyond `[−1, 1]` before clamping is treated
/// as a defect.
pub const CLAMP_SLACK: f64 = 1e-9;

/// `M × N` grid of coupling matrices; row `m` couples every input to
/// output qubit `m`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<CouplingMatrix>>", into = "Vec<Vec<CouplingMatrix>>")]
pub struct CouplingWeights {
    n_inputs: usize,
    n_outputs: usize,
    weights: Vec<CouplingMatrix>,
}

impl TryFrom<Vec<Vec<CouplingMatrix>>> for CouplingWeights {
    type Error = Error;

    fn try_from(rows: Vec<Vec<CouplingMatrix>>) -> Result<Self> {
        let n_outputs = rows.len();
        let n_inputs = rows.first().map_or(0, Vec::len);
        if n_outputs == 0 || n_inputs == 0 || rows.iter().any(|r| r.len() != n_inputs) {
            return Err(Error::Config("coupling weights must be a non-empty rectangular M x N grid".into()));
        }
        let weights: Vec<CouplingMatrix> = rows.into_iter().flatten().collect();
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::Config("coupling weights must be finite".into()));
        }
        Ok(Self {
            n_inputs,
            n_outputs,
            weights,
        })
    }
}

impl From<CouplingWeights> for Vec<Vec<CouplingMatrix>> {
    fn from(w: CouplingWeights) -> Self {
        w.weights.chunks(w.n_inputs).map(<[_]>::to_vec).collect()
    }
}

impl CouplingWeights {
    pub fn zeros(n_inputs: usize, n_outputs: usize) -> Self {
        Self {
            n_inputs,
            n_outputs,
            weights: vec![CouplingMatrix::ZERO; n_inputs * n_outputs],
        }
    }

    /// Every output row set to the given couplings.
    pub fn from_row(row: &[CouplingMatrix], n_outputs: usize) -> Self {
        Self {
            n_inputs: row.len(),
            n_outputs,
            weights: row.iter().copied().cycle().take(row.len() * n_outputs).collect(),
        }
    }

    /// I.i.d. uniform entries in `[−scale, scale]`.
    pub fn random(n_inputs: usize, n_outputs: usize, scale: f64, rng: &mut impl Rng) -> Self {
        let mut w = Self::zeros(n_inputs, n_outputs);
        for x in w.params_mut() {
            *x = if scale > 0.0 { rng.random_range(-scale..=scale) } else { 0.0 };
        }
        w
    }

    pub fn n_inputs(&self) -> usize {
        self.n_inputs
    }

    pub fn n_outputs(&self) -> usize {
        self.n_outputs
    }

    pub fn n_params(&self) -> usize {
        9 * self.weights.len()
    }

    pub fn row(&self, output: usize) -> &[CouplingMatrix] {
        &self.weights[output * self.n_inputs..(output + 1) * self.n_inputs]
    }

    pub fn get(&self, output: usize, input: usize) -> &CouplingMatrix {
        &self.weights[output * self.n_inputs + input]
    }

    pub fn get_mut(&mut self, output: usize, input: usize) -> &mut CouplingMatrix {
        &mut self.weights[output * self.n_inputs + input]
    }

    /// Flat parameter view ordered `(m, n, a, b)`.
    pub fn params(&self) -> impl Iterator<Item = f64> + '_ {
        self.weights.iter().flat_map(|w| w.0.iter().flatten().copied())
    }

    pub fn params_mut(&mut self) -> impl Iterator<Item = &mut f64> + '_ {
        self.weights.iter_mut().flat_map(|w| w.0.iter_mut().flatten())
    }

    pub fn param_mut(&mut self, index: usize) -> &mut f64 {
        let w = &mut self.weights[index / 9];
        &mut w.0[(index % 9) / 3][index % 3]
    }

    pub fn is_finite(&self) -> bool {
        self.params().all(f64::is_finite)
    }

    /// `self + step · direction`, shapes must agree.
    pub fn add_scaled(&mut self, direction: &Self, step: f64) {
        assert_eq!((self.n_inputs, self.n_outputs), (direction.n_inputs, direction.n_outputs));
        for (x, d) in self.params_mut().zip(direction.params()) {
            *x += step * d;
        }
    }

    /// Copy with input qubits reordered: new input `i` is old input `perm[i]`.
    pub fn permute_inputs(&self, perm: &[usize]) -> Self {
        let mut out = self.clone();
        for m in 0..self.n_outputs {
            for (i, &p) in perm.iter().enumerate() {
                *out.get_mut(m, i) = *self.get(m, p);
            }
        }
        out
    }
}

/// Orthonormal readout pair `|R⟩ = cos(θ/2)|0⟩ + e^{iφ} sin(θ/2)|1⟩`,
/// `|F⟩ = sin(θ/2)|0⟩ − e^{iφ} cos(θ/2)|1⟩`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReadoutBasis {
    pub theta: f64,
    pub phi: f64,
}

impl ReadoutBasis {
    pub fn real_ket(&self) -> ComplexMatrix {
        let (s, c) = (self.theta / 2.0).sin_cos();
        ComplexMatrix::ket(&[C64::new(c, 0.0), C64::from_polar(s, self.phi)])
    }

    pub fn fake_ket(&self) -> ComplexMatrix {
        let (s, c) = (self.theta / 2.0).sin_cos();
        ComplexMatrix::ket(&[C64::new(s, 0.0), -C64::from_polar(c, self.phi)])
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetworkConfig {
    /// Encoding polarization, in `(−1, 1)`.
    pub mu: f64,
    /// Input dissipation scale Γ.
    pub gamma: f64,
    /// Sigmoid steepness `k`.
    pub k_sigmoid: f64,
    pub readout: ReadoutBasis,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        Self {
            mu: 0.9,
            gamma: 100.0,
            k_sigmoid: 5.0,
            readout: ReadoutBasis::default(),
        }
    }
}

impl NetworkConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.mu > -1.0 && self.mu < 1.0) {
            return Err(Error::Config(format!("mu = {} must lie in (-1, 1)", self.mu)));
        }
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(Error::Config(format!("gamma = {} must be positive", self.gamma)));
        }
        if !(self.k_sigmoid > 0.0 && self.k_sigmoid.is_finite()) {
            return Err(Error::Config(format!("k = {} must be positive", self.k_sigmoid)));
        }
        if !(self.readout.theta.is_finite() && self.readout.phi.is_finite()) {
            return Err(Error::Config("readout angles must be finite".into()));
        }
        Ok(())
    }
}

/// Steady state of output qubit `output` for the given input angles.
pub fn output_steady_state(weights: &CouplingWeights, output: usize, thetas: &[f64], cfg: &NetworkConfig) -> Result<DensityMatrix> {
    if thetas.len() != weights.n_inputs() {
        return Err(Error::DimensionMismatch {
            expected: format!("{} input angles", weights.n_inputs()),
            found: format!("{}", thetas.len()),
        });
    }
    for &t in thetas {
        check_angle(t)?;
    }
    let gen = EffectiveGenerator::closed_form(weights.row(output), thetas, cfg.mu, cfg.gamma)?;
    effective_steady_state(&gen).map_err(|e| Error::Output {
        output,
        source: Box::new(e),
    })
}

/// `⟨σ_z⟩` clamped to `[−1, 1]`.
fn clamped_z(rho: &DensityMatrix) -> Result<f64> {
    let z = rho.bloch()[2];
    if z.abs() > 1.0 + CLAMP_SLACK {
        return Err(Error::InvalidState {
            reason: format!("<sigma_z> = {z} outside [-1, 1]"),
        });
    }
    Ok(z.clamp(-1.0, 1.0))
}

/// `θ_out^m = arccos⟨σ_z^m⟩` for every output qubit.
pub fn generator_forward(weights: &CouplingWeights, theta_in: &[f64], cfg: &NetworkConfig) -> Result<Vec<f64>> {
    (0..weights.n_outputs())
        .map(|m| {
            let rho = output_steady_state(weights, m, theta_in, cfg)?;
            Ok(clamped_z(&rho)?.acos())
        })
        .collect()
}

fn single_output(weights: &CouplingWeights) -> Result<()> {
    if weights.n_outputs() != 1 {
        return Err(Error::DimensionMismatch {
            expected: "a single discriminator output".into(),
            found: format!("{} outputs", weights.n_outputs()),
        });
    }
    Ok(())
}

/// `⟨R|ρ_ss|R⟩`, the probability assigned to "real".
pub fn discriminator_forward_projective(weights: &CouplingWeights, theta: &[f64], cfg: &NetworkConfig) -> Result<f64> {
    single_output(weights)?;
    let rho = output_steady_state(weights, 0, theta, cfg)?;
    Ok(rho.population(&cfg.readout.real_ket()).clamp(0.0, 1.0))
}

/// `(⟨R|ρ|R⟩, ⟨F|ρ|F⟩)`.
pub fn discriminator_projective_pair(weights: &CouplingWeights, theta: &[f64], cfg: &NetworkConfig) -> Result<(f64, f64)> {
    single_output(weights)?;
    let rho = output_steady_state(weights, 0, theta, cfg)?;
    Ok((rho.population(&cfg.readout.real_ket()), rho.population(&cfg.readout.fake_ket())))
}

pub fn sigmoid(k: f64, z: f64) -> f64 {
    1.0 / (1.0 + (-k * z).exp())
}

/// `D = 1 / (1 + exp(−k⟨σ_z⟩))`.
pub fn discriminator_forward_sigmoid(weights: &CouplingWeights, theta: &[f64], cfg: &NetworkConfig) -> Result<f64> {
    single_output(weights)?;
    let rho = output_steady_state(weights, 0, theta, cfg)?;
    Ok(sigmoid(cfg.k_sigmoid, clamped_z(&rho)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn random_weights(seed: u64, n: usize, m: usize) -> CouplingWeights {
        CouplingWeights::random(n, m, 1.0, &mut ChaCha8Rng::seed_from_u64(seed))
    }

    #[test]
    fn mu_zero_generator_outputs_half_pi() {
        let cfg = NetworkConfig { mu: 0.0, ..Default::default() };
        let out = generator_forward(&random_weights(1, 2, 2), &[0.3, 2.0], &cfg).unwrap();
        for x in out {
            assert!((x - FRAC_PI_2).abs() < 1e-12);
        }
    }

    #[test]
    fn polarized_output_reads_zero_angle() {
        // J = I, θ = 0, μ → 1: h_D = μσ_z and the g1 jump pumps into |0⟩.
        let w = CouplingWeights::from_row(&[CouplingMatrix::identity()], 1);
        let cfg = NetworkConfig { mu: 0.999_999, ..Default::default() };
        let out = generator_forward(&w, &[0.0], &cfg).unwrap();
        assert!(out[0] < 1e-2, "{out:?}");
    }

    #[test]
    fn projective_readout_examples() {
        let cfg = NetworkConfig { mu: 0.0, ..Default::default() };
        let w = random_weights(2, 2, 1);
        let p = discriminator_forward_projective(&w, &[0.4, 1.9], &cfg).unwrap();
        assert!((p - 0.5).abs() < 1e-12);

        let rho = DensityMatrix::pure(&cfg.readout.real_ket()).unwrap();
        assert!((rho.population(&cfg.readout.real_ket()) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn readout_pair_is_complete() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let readout = ReadoutBasis {
                theta: rng.random_range(0.0..PI),
                phi: rng.random_range(-PI..PI),
            };
            let cfg = NetworkConfig { readout, ..Default::default() };
            let r = readout.real_ket();
            let f = readout.fake_ket();
            assert!(r.inner_product(&f).norm() < 1e-15);
            let w = CouplingWeights::random(2, 1, 1.0, &mut rng);
            let (p, q) = discriminator_projective_pair(&w, &[rng.random_range(0.0..PI), rng.random_range(0.0..PI)], &cfg).unwrap();
            assert!((p + q - 1.0).abs() <= 1e-9);
            assert!((0.0..=1.0).contains(&p));
        }
    }

    #[test]
    fn sigmoid_examples() {
        assert_eq!(sigmoid(5.0, 0.0), 0.5);
        assert!((sigmoid(1e-12, 1.0) - 0.5).abs() < 1e-12);
        assert!((sigmoid(5.0, 1.0) - 0.993_307_149_075_715_2).abs() < 1e-15);
        let cfg = NetworkConfig { mu: 0.0, ..Default::default() };
        let d = discriminator_forward_sigmoid(&random_weights(4, 2, 1), &[1.0, 1.0], &cfg).unwrap();
        assert!((d - 0.5).abs() < 1e-12);
    }

    #[test]
    fn discriminator_requires_single_output() {
        let cfg = NetworkConfig::default();
        assert!(discriminator_forward_sigmoid(&random_weights(5, 2, 2), &[1.0, 1.0], &cfg).is_err());
    }

    #[test]
    fn degenerate_output_is_reported_with_index() {
        let mut w = random_weights(6, 2, 2);
        for n in 0..2 {
            *w.get_mut(1, n) = CouplingMatrix::ZERO;
        }
        let err = generator_forward(&w, &[1.0, 2.0], &NetworkConfig::default()).unwrap_err();
        assert!(matches!(err, Error::Output { output: 1, .. }));
        assert!(err.is_degenerate());
    }

    #[test]
    fn outputs_in_range_and_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let w = random_weights(8, 2, 2);
        let cfg = NetworkConfig::default();
        for _ in 0..50 {
            let x = [rng.random_range(0.0..=PI), rng.random_range(0.0..=PI)];
            let a = generator_forward(&w, &x, &cfg).unwrap();
            let b = generator_forward(&w, &x, &cfg).unwrap();
            assert_eq!(a, b);
            assert!(a.iter().all(|t| (0.0..=PI).contains(t)));
        }
    }

    #[test]
    fn permuting_inputs_changes_nothing() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let cfg = NetworkConfig::default();
        for _ in 0..10 {
            let w = CouplingWeights::random(3, 2, 1.0, &mut rng);
            let x: Vec<f64> = (0..3).map(|_| rng.random_range(0.0..PI)).collect();
            let perm = [2, 0, 1];
            let xp: Vec<f64> = perm.iter().map(|&p| x[p]).collect();
            let a = generator_forward(&w, &x, &cfg).unwrap();
            let b = generator_forward(&w.permute_inputs(&perm), &xp, &cfg).unwrap();
            for (u, v) in a.iter().zip(&b) {
                assert!((u - v).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn weights_serialize_as_nested_grid() {
        let w = random_weights(10, 2, 3);
        let grid: Vec<Vec<CouplingMatrix>> = w.clone().into();
        assert_eq!(grid.len(), 3);
        assert_eq!(grid[0].len(), 2);
        assert_eq!(CouplingWeights::try_from(grid).unwrap(), w);
        assert!(CouplingWeights::try_from(vec![vec![CouplingMatrix::ZERO], vec![]]).is_err());
    }

    #[test]
    fn param_indexing_matches_iteration_order() {
        let mut w = random_weights(11, 2, 2);
        let flat: Vec<f64> = w.params().collect();
        assert_eq!(flat.len(), w.n_params());
        for (i, &x) in flat.iter().enumerate() {
            assert_eq!(*w.param_mut(i), x);
        }
    }
}
