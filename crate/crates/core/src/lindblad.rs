//! Full finite-Γ Lindblad dynamics: Liouvillian assembly, steady states,
//! fixed-step integration and the single-qubit dissipator eigenbasis.
//!
//! Density matrices are vectorized by column stacking, so that
//! `vec(AρB) = (Bᵀ ⊗ A) vec(ρ)`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::operators::{
    check_angle, coupling_hamiltonian, embed, encode_state, ComplexMatrix, CouplingMatrix, DensityMatrix, C64, ONE, ZERO,
};

/// Second-smallest singular value of the Liouvillian below which the
/// steady state is reported as non-unique.
pub const DEGENERACY_THRESHOLD: f64 = 1e-8;

/// Residual bound on `L[ρ_ss]` for the full model.
pub const STEADY_STATE_RESIDUAL: f64 = 1e-10;

/// Hamiltonian plus rate-weighted jump operators.
#[derive(Clone, Debug, PartialEq)]
pub struct LindbladModel {
    hamiltonian: ComplexMatrix,
    jumps: Vec<(ComplexMatrix, f64)>,
}

impl LindbladModel {
    pub fn new(hamiltonian: ComplexMatrix, jumps: Vec<(ComplexMatrix, f64)>) -> Result<Self> {
        if !hamiltonian.is_square() {
            return Err(Error::DimensionMismatch {
                expected: "square Hamiltonian".into(),
                found: format!("{}x{}", hamiltonian.rows(), hamiltonian.cols()),
            });
        }
        let deviation = hamiltonian.hermiticity_deviation();
        if deviation > 1e-12 {
            return Err(Error::NotHermitian { deviation });
        }
        let dim = hamiltonian.rows();
        for (op, rate) in &jumps {
            if op.rows() != dim || op.cols() != dim {
                return Err(Error::DimensionMismatch {
                    expected: format!("{dim}x{dim} jump operator"),
                    found: format!("{}x{}", op.rows(), op.cols()),
                });
            }
            if !(*rate >= 0.0 && rate.is_finite()) {
                return Err(Error::Domain {
                    what: "jump rate",
                    value: *rate,
                    domain: "[0, inf)",
                });
            }
        }
        Ok(Self { hamiltonian, jumps })
    }

    pub fn dim(&self) -> usize {
        self.hamiltonian.rows()
    }

    pub fn hamiltonian(&self) -> &ComplexMatrix {
        &self.hamiltonian
    }

    pub fn jumps(&self) -> &[(ComplexMatrix, f64)] {
        &self.jumps
    }

    /// Integration step used by [`evolve`] when none is supplied:
    /// `0.01 / (max rate + ‖H‖₂)`.
    pub fn default_dt(&self) -> f64 {
        let max_rate = self.jumps.iter().map(|(l, r)| r * spectral_norm(l).powi(2)).fold(0.0, f64::max);
        let scale = max_rate + spectral_norm(&self.hamiltonian);
        if scale > 0.0 {
            0.01 / scale
        } else {
            0.01
        }
    }

    /// Smallest nonzero rate, used to size relaxation times.
    pub fn min_rate(&self) -> Option<f64> {
        self.jumps
            .iter()
            .map(|(_, r)| *r)
            .filter(|r| *r > 0.0)
            .min_by(f64::total_cmp)
    }
}

fn spectral_norm(m: &ComplexMatrix) -> f64 {
    m.singular_values().last().copied().unwrap_or(0.0)
}

/// `d² × d²` generator acting on column-stacked density matrices.
#[derive(Clone, Debug, PartialEq)]
pub struct Superoperator {
    dim: usize,
    matrix: ComplexMatrix,
}

impl Superoperator {
    pub fn from_matrix(dim: usize, matrix: ComplexMatrix) -> Result<Self> {
        if matrix.rows() != dim * dim || matrix.cols() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: format!("{0}x{0}", dim * dim),
                found: format!("{}x{}", matrix.rows(), matrix.cols()),
            });
        }
        Ok(Self { dim, matrix })
    }

    /// Dimension of the underlying Hilbert space.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn apply(&self, rho: &ComplexMatrix) -> ComplexMatrix {
        let v = vectorize(rho);
        unvectorize(&(self.matrix.inner() * v), self.dim)
    }

    /// Row vector `r` with `r·vec(X) = Tr X`; its product with the
    /// generator vanishes for trace-preserving dynamics.
    pub fn trace_functional(&self) -> Vec<C64> {
        let d = self.dim;
        (0..d * d)
            .map(|col| (0..d).map(|k| self.matrix[(k * d + k, col)]).sum())
            .collect()
    }
}

pub fn vectorize(m: &ComplexMatrix) -> DVector<C64> {
    DVector::from_column_slice(m.inner().as_slice())
}

pub fn unvectorize(v: &DVector<C64>, dim: usize) -> ComplexMatrix {
    ComplexMatrix::from_inner(DMatrix::from_column_slice(dim, dim, v.as_slice()))
}

/// `L[ρ] = −i[H, ρ] + Σ_k γ_k (L_k ρ L_k† − ½{L_k†L_k, ρ})`.
pub fn liouvillian(model: &LindbladModel) -> Superoperator {
    let d = model.dim();
    let id = ComplexMatrix::identity(d);
    let h = &model.hamiltonian;
    let mut gen = (&id.kron(h) - &h.transpose().kron(&id)).scale(C64::new(0.0, -1.0));
    for (l, rate) in &model.jumps {
        if *rate == 0.0 {
            continue;
        }
        let ldl = &l.adjoint() * l;
        let term = &(&l.conjugate().kron(l) - &id.kron(&ldl).scale_real(0.5)) - &ldl.transpose().kron(&id).scale_real(0.5);
        gen += &term.scale_real(*rate);
    }
    Superoperator { dim: d, matrix: gen }
}

/// Direct evaluation of the Lindblad right-hand side, independent of the
/// vectorized superoperator.
pub fn lindblad_rhs(model: &LindbladModel, rho: &ComplexMatrix) -> ComplexMatrix {
    let mut out = model.hamiltonian.commutator(rho).scale(C64::new(0.0, -1.0));
    for (l, rate) in &model.jumps {
        let ldl = &l.adjoint() * l;
        let term = &(&(l * rho) * &l.adjoint()) - &ldl.anticommutator(rho).scale_real(0.5);
        out += &term.scale_real(*rate);
    }
    out
}

/// Unique steady state by a dense solve with the trace condition replacing
/// the first (redundant) population equation.
pub fn steady_state(superop: &Superoperator) -> Result<DensityMatrix> {
    steady_state_with_tolerance(superop, STEADY_STATE_RESIDUAL)
}

pub(crate) fn steady_state_with_tolerance(superop: &Superoperator, residual_tol: f64) -> Result<DensityMatrix> {
    let d = superop.dim;
    let gen = superop.matrix.inner();

    let singular = superop.matrix.singular_values();
    let probe = singular.get(1).copied().unwrap_or(f64::INFINITY);
    if probe < DEGENERACY_THRESHOLD {
        return Err(Error::DegenerateSteadyState {
            probe,
            threshold: DEGENERACY_THRESHOLD,
        });
    }

    let mut system = gen.clone();
    for col in 0..d * d {
        system[(0, col)] = ZERO;
    }
    for k in 0..d {
        system[(0, k * d + k)] = ONE;
    }
    let mut rhs = DVector::zeros(d * d);
    rhs[0] = ONE;
    let x = system.lu().solve(&rhs).ok_or(Error::DegenerateSteadyState {
        probe: 0.0,
        threshold: DEGENERACY_THRESHOLD,
    })?;

    let residual = (gen * &x).iter().map(|z| z.norm()).fold(0.0, f64::max);
    if residual > residual_tol {
        return Err(Error::Residual {
            residual,
            tolerance: residual_tol,
        });
    }
    DensityMatrix::from_numerical(unvectorize(&x, d))
}

/// Fixed-step classical RK4 integration of the master equation.
///
/// `dt = None` selects [`LindbladModel::default_dt`]. The last step is
/// shortened so that the final time is hit exactly.
pub fn evolve(model: &LindbladModel, rho0: &DensityMatrix, t_final: f64, dt: Option<f64>) -> Result<DensityMatrix> {
    if !(t_final >= 0.0 && t_final.is_finite()) {
        return Err(Error::Domain {
            what: "t_final",
            value: t_final,
            domain: "[0, inf)",
        });
    }
    let dt = dt.unwrap_or_else(|| model.default_dt());
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::Domain {
            what: "dt",
            value: dt,
            domain: "(0, inf)",
        });
    }
    if rho0.dim() != model.dim() {
        return Err(Error::DimensionMismatch {
            expected: format!("{0}x{0}", model.dim()),
            found: format!("{0}x{0}", rho0.dim()),
        });
    }
    if t_final == 0.0 {
        return Ok(rho0.clone());
    }

    let gen = liouvillian(model);
    let l = gen.matrix.inner();
    let d = model.dim();
    let mut x = vectorize(rho0.matrix());
    let steps = (t_final / dt).ceil().max(1.0) as usize;
    let h = C64::new(t_final / steps as f64, 0.0);
    let half = C64::new(0.5, 0.0);
    let trace = |v: &DVector<C64>| (0..d).map(|k| v[k * d + k]).sum::<C64>();

    for step in 0..steps {
        let k1 = l * &x;
        let k2 = l * (&x + &k1 * (h * half));
        let k3 = l * (&x + &k2 * (h * half));
        let k4 = l * (&x + &k3 * h);
        x += (k1 + k2 * C64::new(2.0, 0.0) + k3 * C64::new(2.0, 0.0) + k4) * (h / 6.0);

        let drift = (trace(&x) - ONE).norm();
        let blown_up = x.iter().any(|z| z.norm().is_nan() || z.norm() > 1.0 + 1e-6);
        if drift > 1e-6 || blown_up {
            return Err(Error::Integration {
                drift: if blown_up { f64::INFINITY } else { drift },
                time: (step + 1) as f64 * h.re,
            });
        }
    }
    DensityMatrix::from_numerical(unvectorize(&x, d))
}

/// Encoding jump operators for one input qubit.
///
/// `L1 = √((1+μ)/2) |s⟩⟨s⊥|` and `L2 = √((1−μ)/2) |s⊥⟩⟨s|`, which relax the
/// qubit to `((1+μ)/2)|s⟩⟨s| + ((1−μ)/2)|s⊥⟩⟨s⊥|`, i.e. Bloch vector
/// `μ·v(θ, 0)`.
pub fn lindblad_ops(theta: f64, mu: f64) -> Result<(ComplexMatrix, ComplexMatrix)> {
    check_mu(mu, true)?;
    let (s, sp) = encode_state(theta)?;
    let l1 = s.outer(&sp).scale_real(((1.0 + mu) / 2.0).sqrt());
    let l2 = sp.outer(&s).scale_real(((1.0 - mu) / 2.0).sqrt());
    Ok((l1, l2))
}

pub(crate) fn check_mu(mu: f64, closed: bool) -> Result<()> {
    let ok = if closed { (-1.0..=1.0).contains(&mu) } else { mu > -1.0 && mu < 1.0 };
    if !ok {
        return Err(Error::Domain {
            what: "mu",
            value: mu,
            domain: if closed { "[-1, 1]" } else { "(-1, 1)" },
        });
    }
    Ok(())
}

/// Single-qubit encoding dissipator (unit rates, no Hamiltonian).
pub fn encoding_model(theta: f64, mu: f64) -> Result<LindbladModel> {
    let (l1, l2) = lindblad_ops(theta, mu)?;
    LindbladModel::new(ComplexMatrix::zeros(2, 2), vec![(l1, 1.0), (l2, 1.0)])
}

/// Full model of one output qubit coupled to `N` strongly dissipated
/// input qubits: sites `0..N` are inputs, site `N` is the output.
pub fn network_model(couplings: &[CouplingMatrix], thetas: &[f64], mu: f64, gamma: f64) -> Result<LindbladModel> {
    if couplings.len() != thetas.len() {
        return Err(Error::DimensionMismatch {
            expected: format!("{} input angles", couplings.len()),
            found: format!("{}", thetas.len()),
        });
    }
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::Domain {
            what: "gamma",
            value: gamma,
            domain: "(0, inf)",
        });
    }
    let h = coupling_hamiltonian(couplings)?;
    let n_sites = couplings.len() + 1;
    let mut jumps = Vec::with_capacity(2 * thetas.len());
    for (n, &theta) in thetas.iter().enumerate() {
        let (l1, l2) = lindblad_ops(theta, mu)?;
        jumps.push((embed(&l1, n, n_sites)?, gamma));
        jumps.push((embed(&l2, n, n_sites)?, gamma));
    }
    LindbladModel::new(h, jumps)
}

/// Right eigenbasis `ψ_k`, dual basis `φ_k` and eigenvalues `ξ_k` of the
/// single-qubit encoding dissipator.
#[derive(Clone, Debug, PartialEq)]
pub struct DissipatorEigenbasis {
    pub psi: [ComplexMatrix; 4],
    pub phi: [ComplexMatrix; 4],
    pub xi: [f64; 4],
    /// Set when `|μ| = 1`, where `ψ₀` is pure and `φ₃` is degenerate with `φ₀`.
    pub degenerate: bool,
}

pub const DISSIPATOR_EIGENVALUES: [f64; 4] = [0.0, -0.5, -0.5, -1.0];

pub fn dissipator_eigenbasis(theta: f64, mu: f64) -> Result<DissipatorEigenbasis> {
    check_angle(theta)?;
    check_mu(mu, true)?;
    let (s, sp) = encode_state(theta)?;
    let ss = s.outer(&s);
    let pp = sp.outer(&sp);
    let sp_ = s.outer(&sp);
    let ps = sp.outer(&s);
    let up = (1.0 + mu) / 2.0;
    let down = (1.0 - mu) / 2.0;
    Ok(DissipatorEigenbasis {
        psi: [
            &ss.scale_real(up) + &pp.scale_real(down),
            sp_.clone(),
            ps.clone(),
            &ss - &pp,
        ],
        phi: [ComplexMatrix::identity(2), ps, sp_, &ss.scale_real(down) - &pp.scale_real(up)],
        xi: DISSIPATOR_EIGENVALUES,
        degenerate: mu.abs() == 1.0,
    })
}

impl DissipatorEigenbasis {
    /// Largest `|Tr(ψ_l φ_k) − δ_lk|`.
    pub fn biorthogonality_error(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (l, psi) in self.psi.iter().enumerate() {
            for (k, phi) in self.phi.iter().enumerate() {
                let target = if l == k { 1.0 } else { 0.0 };
                worst = worst.max(((psi * phi).trace() - C64::new(target, 0.0)).norm());
            }
        }
        worst
    }
}
