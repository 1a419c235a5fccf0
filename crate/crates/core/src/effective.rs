//! Strong-dissipation effective master equation for one output qubit.
//!
//! With every input qubit relaxed into `ψ₀(θ_n)` on a fast scale Γ, the output
//! qubit obeys
//!
//! ```text
//! dρ/dτ = −i[h_D + H̃ₐ/Γ, ρ] + (1/Γ) D̃[ρ]
//! ```
//!
//! where `h_D = Σ_n g0_n` and `D̃` carries the jumps `g1_n`, `g1_n†`, `g3_n`
//! with rates `2(1+μ)`, `2(1−μ)` and `(1−μ²)/2`. The production path uses
//! these closed forms; [`coefficient_matrices`] and [`GenericReduction`]
//! rebuild the same generator from the dissipator eigenbasis and the
//! Hamiltonian by partial traces.

use crate::error::{Error, Result};
use crate::lindblad::{
    check_mu, dissipator_eigenbasis, liouvillian, network_model, steady_state, steady_state_with_tolerance, vectorize,
    DissipatorEigenbasis, LindbladModel, Superoperator,
};
use crate::operators::{
    check_angle, coupling_hamiltonian, frame_vectors, partial_trace_operator, sigma_dot, ComplexMatrix, CouplingMatrix,
    DensityMatrix, C64, I,
};

/// Residual bound for the 2×2 effective steady-state solve.
pub const EFFECTIVE_RESIDUAL: f64 = 1e-11;

/// Agreement required between the generic and closed-form reductions.
pub const CROSS_CHECK_TOLERANCE: f64 = 1e-10;

/// Largest input register for which the full-model oracle is run.
pub const MAX_ORACLE_INPUTS: usize = 3;

/// Output-side coefficient operators of one input qubit.
#[derive(Clone, Debug, PartialEq)]
pub struct GOperators {
    pub g0: ComplexMatrix,
    pub g1: ComplexMatrix,
    pub g2: ComplexMatrix,
    pub g3: ComplexMatrix,
}

impl GOperators {
    pub fn as_array(&self) -> [&ComplexMatrix; 4] {
        [&self.g0, &self.g1, &self.g2, &self.g3]
    }
}

/// Closed forms `g0 = μ w(v)·σ`, `g1 = w(v′)·σ − i w(v″)·σ`, `g2 = g1†`,
/// `g3 = 2 w(v)·σ` with `w(u)_b = Σ_a u_a J_ab`.
pub fn g_operators(coupling: &CouplingMatrix, theta: f64, phi: f64, mu: f64) -> Result<GOperators> {
    check_angle(theta)?;
    let (v, vp, vpp) = frame_vectors(theta, phi);
    let along = sigma_dot(coupling.contract_input(v.components()));
    let g1 = &sigma_dot(coupling.contract_input(vp.components()))
        - &sigma_dot(coupling.contract_input(vpp.components())).scale(I);
    Ok(GOperators {
        g0: along.scale_real(mu),
        g2: g1.adjoint(),
        g1,
        g3: along.scale_real(2.0),
    })
}

/// Position in the retained index set: the all-ground index, or a single
/// excitation `level ∈ {1, 2, 3}` on input `site`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Excitation {
    Ground,
    Single { site: usize, level: usize },
}

impl Excitation {
    /// Retained indices in matrix order: ground first, then site-major.
    pub fn enumerate(n_inputs: usize) -> Vec<Excitation> {
        std::iter::once(Excitation::Ground)
            .chain((0..n_inputs).flat_map(|site| (1..=3).map(move |level| Excitation::Single { site, level })))
            .collect()
    }

    pub fn multi_index(&self, n_inputs: usize) -> Vec<usize> {
        let mut idx = vec![0; n_inputs];
        if let Excitation::Single { site, level } = *self {
            idx[site] = level;
        }
        idx
    }

    /// `Ξ = Σ_n ξ_{k_n}`.
    pub fn eigenvalue(&self, basis: &DissipatorEigenbasis) -> f64 {
        match *self {
            Excitation::Ground => 0.0,
            Excitation::Single { level, .. } => basis.xi[level],
        }
    }
}

fn check_lengths(couplings: &[CouplingMatrix], thetas: &[f64]) -> Result<()> {
    if couplings.is_empty() {
        return Err(Error::Empty("coupling list"));
    }
    if couplings.len() != thetas.len() {
        return Err(Error::DimensionMismatch {
            expected: format!("{} input angles", couplings.len()),
            found: format!("{}", thetas.len()),
        });
    }
    Ok(())
}

fn tensor(factors: impl IntoIterator<Item = ComplexMatrix>) -> ComplexMatrix {
    factors.into_iter().fold(ComplexMatrix::identity(1), |acc, f| acc.kron(&f))
}

fn eigenbases(thetas: &[f64], mu: f64) -> Result<Vec<DissipatorEigenbasis>> {
    thetas.iter().map(|&t| dissipator_eigenbasis(t, mu)).collect()
}

/// `Tr_in((Ψ_k ⊗ I) H)` evaluated numerically by a partial trace, without
/// any shortcut.
pub fn g_from_trace_numeric(
    couplings: &[CouplingMatrix],
    thetas: &[f64],
    mu: f64,
    multi_index: &[usize],
) -> Result<ComplexMatrix> {
    check_lengths(couplings, thetas)?;
    if multi_index.len() != thetas.len() || multi_index.iter().any(|&k| k > 3) {
        return Err(Error::DimensionMismatch {
            expected: format!("{} indices in 0..=3", thetas.len()),
            found: format!("{multi_index:?}"),
        });
    }
    let bases = eigenbases(thetas, mu)?;
    let h = coupling_hamiltonian(couplings)?;
    let psi = tensor(bases.iter().zip(multi_index).map(|(b, &k)| b.psi[k].clone()));
    let weighted = &psi.kron(&ComplexMatrix::identity(2)) * &h;
    partial_trace_operator(&weighted, couplings.len() + 1, &[couplings.len()])
}

/// Coefficient operator for a multi-index. Indices with two or more
/// excitations vanish identically because `H` is a sum of two-body terms.
pub fn g_from_trace(couplings: &[CouplingMatrix], thetas: &[f64], mu: f64, multi_index: &[usize]) -> Result<ComplexMatrix> {
    if multi_index.iter().filter(|&&k| k != 0).count() >= 2 {
        check_lengths(couplings, thetas)?;
        return Ok(ComplexMatrix::zeros(2, 2));
    }
    g_from_trace_numeric(couplings, thetas, mu, multi_index)
}

/// Coefficient matrices over the retained indices ([`Excitation::enumerate`]).
#[derive(Clone, Debug, PartialEq)]
pub struct CoefficientMatrices {
    pub indices: Vec<Excitation>,
    pub c: ComplexMatrix,
    pub y: ComplexMatrix,
    pub a: ComplexMatrix,
    pub b: ComplexMatrix,
}

/// `C_ij = Tr(Φ_i† Φ_j Ψ₀)`, `Y_ij = −C_ij / Ξ_i*` on the decaying block,
/// `A = Y + Y†`, `B = (Y − Y†)/(2i)`.
///
/// `bases` holds one eigenbasis per input qubit.
pub fn coefficient_matrices(bases: &[DissipatorEigenbasis]) -> Result<CoefficientMatrices> {
    if bases.is_empty() {
        return Err(Error::Empty("eigenbasis list"));
    }
    let n = bases.len();
    let indices = Excitation::enumerate(n);
    let phis: Vec<ComplexMatrix> = indices
        .iter()
        .map(|e| tensor(bases.iter().zip(e.multi_index(n)).map(|(b, k)| b.phi[k].clone())))
        .collect();
    let psi0 = tensor(bases.iter().map(|b| b.psi[0].clone()));

    let size = indices.len();
    let c = ComplexMatrix::from_fn(size, size, |i, j| (&(&phis[i].adjoint() * &phis[j]) * &psi0).trace());
    let y = ComplexMatrix::from_fn(size, size, |i, j| {
        let xi = indices[i].eigenvalue(&bases[0]);
        if xi < 0.0 {
            -c[(i, j)] / C64::new(xi, 0.0).conj()
        } else {
            C64::new(0.0, 0.0)
        }
    });
    let a = &y + &y.adjoint();
    let b = (&y - &y.adjoint()).scale(C64::new(0.0, -0.5));
    Ok(CoefficientMatrices { indices, c, y, a, b })
}

/// Effective generator of one output qubit.
#[derive(Clone, Debug, PartialEq)]
pub struct EffectiveGenerator {
    pub h_d: ComplexMatrix,
    pub h_a: ComplexMatrix,
    pub jump_terms: Vec<(ComplexMatrix, f64)>,
    pub gamma: f64,
}

/// Effective jump rates `[2(1+μ), 2(1−μ), (1−μ²)/2]` for `g1`, `g1†`, `g3`.
pub fn effective_rates(mu: f64) -> [f64; 3] {
    [2.0 * (1.0 + mu), 2.0 * (1.0 - mu), (1.0 - mu * mu) / 2.0]
}

fn check_gamma(gamma: f64) -> Result<()> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::Domain {
            what: "gamma",
            value: gamma,
            domain: "(0, inf)",
        });
    }
    Ok(())
}

impl EffectiveGenerator {
    /// Closed-form assembly used on the forward path.
    pub fn closed_form(couplings: &[CouplingMatrix], thetas: &[f64], mu: f64, gamma: f64) -> Result<Self> {
        check_lengths(couplings, thetas)?;
        check_mu(mu, true)?;
        check_gamma(gamma)?;
        let [r1, r2, r3] = effective_rates(mu);
        let mut h_d = ComplexMatrix::zeros(2, 2);
        let mut jump_terms = Vec::with_capacity(3 * couplings.len());
        for (j, &theta) in couplings.iter().zip(thetas) {
            let g = g_operators(j, theta, 0.0, mu)?;
            h_d += &g.g0;
            jump_terms.push((g.g1, r1));
            jump_terms.push((g.g2, r2));
            jump_terms.push((g.g3, r3));
        }
        Ok(Self {
            h_d,
            h_a: ComplexMatrix::zeros(2, 2),
            jump_terms,
            gamma,
        })
    }

    /// Full right-hand side as a 4×4 superoperator.
    pub fn superoperator(&self) -> Result<Superoperator> {
        let h = &self.h_d + &self.h_a.scale_real(1.0 / self.gamma);
        let jumps = self
            .jump_terms
            .iter()
            .map(|(g, r)| (g.clone(), r / self.gamma))
            .collect();
        Ok(liouvillian(&LindbladModel::new(h, jumps)?))
    }

    /// `D̃[R]` written out term by term for `g1`, `g1†` and `g3`.
    pub fn dissipator_verbatim(couplings: &[CouplingMatrix], thetas: &[f64], mu: f64, r: &ComplexMatrix) -> Result<ComplexMatrix> {
        check_lengths(couplings, thetas)?;
        let [r1, r2, r3] = effective_rates(mu);
        let mut out = ComplexMatrix::zeros(2, 2);
        for (j, &theta) in couplings.iter().zip(thetas) {
            let g = g_operators(j, theta, 0.0, mu)?;
            let g1 = &g.g1;
            let g1d = g1.adjoint();
            let g3 = &g.g3;
            let g3d = g3.adjoint();
            let t1 = &(&(&(g1 * r) * &g1d) - &(&(&g1d * g1) * r).scale_real(0.5)) - &(&(r * &g1d) * g1).scale_real(0.5);
            let t2 = &(&(&(&g1d * r) * g1) - &(&(g1 * &g1d) * r).scale_real(0.5)) - &(&(r * g1) * &g1d).scale_real(0.5);
            let t3 = &(&(&(g3 * r) * &g3d) - &(&(&g3d * g3) * r).scale_real(0.5)) - &(&(r * &g3d) * g3).scale_real(0.5);
            out += &t1.scale_real(r1);
            out += &t2.scale_real(r2);
            out += &t3.scale_real(r3);
        }
        Ok(out)
    }
}

/// Effective generator rebuilt from the eigenbasis and partial traces of
/// the full Hamiltonian.
#[derive(Clone, Debug)]
pub struct GenericReduction {
    pub coefficients: CoefficientMatrices,
    /// `g_k` for every retained index, in the same order.
    pub g: Vec<ComplexMatrix>,
    pub h_d: ComplexMatrix,
    pub h_a: ComplexMatrix,
}

impl GenericReduction {
    pub fn new(couplings: &[CouplingMatrix], thetas: &[f64], mu: f64) -> Result<Self> {
        check_lengths(couplings, thetas)?;
        let bases = eigenbases(thetas, mu)?;
        let coefficients = coefficient_matrices(&bases)?;
        let n = couplings.len();
        let g = coefficients
            .indices
            .iter()
            .map(|e| g_from_trace(couplings, thetas, mu, &e.multi_index(n)))
            .collect::<Result<Vec<_>>>()?;
        let mut h_a = ComplexMatrix::zeros(2, 2);
        for (i, gi) in g.iter().enumerate().skip(1) {
            for (j, gj) in g.iter().enumerate().skip(1) {
                h_a += &(&gi.adjoint() * gj).scale(coefficients.b[(i, j)]);
            }
        }
        Ok(Self {
            h_d: g[0].clone(),
            h_a,
            g,
            coefficients,
        })
    }

    /// `D̃[R] = Σ_ij A_ij (g_j R g_i† − ½{g_i† g_j, R})` over decaying indices.
    pub fn dissipator(&self, r: &ComplexMatrix) -> ComplexMatrix {
        let a = &self.coefficients.a;
        let mut out = ComplexMatrix::zeros(2, 2);
        for (i, gi) in self.g.iter().enumerate().skip(1) {
            let gid = gi.adjoint();
            for (j, gj) in self.g.iter().enumerate().skip(1) {
                if a[(i, j)].norm() == 0.0 {
                    continue;
                }
                let term = &(&(gj * r) * &gid) - &(&gid * gj).anticommutator(r).scale_real(0.5);
                out += &term.scale(a[(i, j)]);
            }
        }
        out
    }

    /// Reassembles `Σ_k Φ_k ⊗ g_k` on the full register.
    pub fn reconstruct_hamiltonian(&self, thetas: &[f64], mu: f64) -> Result<ComplexMatrix> {
        let bases = eigenbases(thetas, mu)?;
        let n = thetas.len();
        let mut h = ComplexMatrix::zeros(1 << (n + 1), 1 << (n + 1));
        for (e, g) in self.coefficients.indices.iter().zip(&self.g) {
            let phi = tensor(bases.iter().zip(e.multi_index(n)).map(|(b, k)| b.phi[k].clone()));
            h += &phi.kron(g);
        }
        Ok(h)
    }
}

/// Column-stacked matrix of a linear map on 2×2 operators.
fn superoperator_of(map: impl Fn(&ComplexMatrix) -> ComplexMatrix) -> ComplexMatrix {
    let images: Vec<_> = (0..4)
        .map(|col| {
            let unit = ComplexMatrix::from_fn(2, 2, |i, j| C64::new(if i + 2 * j == col { 1.0 } else { 0.0 }, 0.0));
            vectorize(&map(&unit))
        })
        .collect();
    ComplexMatrix::from_fn(4, 4, |r, c| images[c][r])
}

/// Closed-form generator after checking it against the generic reduction:
/// `h_D = Tr_in(Ψ₀ H)`, `H̃ₐ = 0` and matching dissipators.
pub fn build_effective_generator(
    couplings: &[CouplingMatrix],
    thetas: &[f64],
    mu: f64,
    gamma: f64,
) -> Result<EffectiveGenerator> {
    let gen = EffectiveGenerator::closed_form(couplings, thetas, mu, gamma)?;
    let generic = GenericReduction::new(couplings, thetas, mu)?;

    let hd_err = gen.h_d.max_abs_diff(&generic.h_d);
    let ha_err = generic.h_a.max_abs();
    let generic_d = superoperator_of(|r| generic.dissipator(r));
    let closed_d = superoperator_of(|r| {
        gen.jump_terms.iter().fold(ComplexMatrix::zeros(2, 2), |acc, (g, rate)| {
            let gd = g.adjoint();
            let term = &(&(g * r) * &gd) - &(&gd * g).anticommutator(r).scale_real(0.5);
            &acc + &term.scale_real(*rate)
        })
    });
    let d_err = generic_d.max_abs_diff(&closed_d);
    for (what, err) in [("h_D", hd_err), ("H_a", ha_err), ("dissipator", d_err)] {
        if err > CROSS_CHECK_TOLERANCE {
            return Err(Error::Consistency(format!(
                "generic and closed-form {what} differ by {err:e}"
            )));
        }
    }
    Ok(gen)
}

/// Stationary point of the effective equation.
pub fn effective_steady_state(gen: &EffectiveGenerator) -> Result<DensityMatrix> {
    steady_state_with_tolerance(&gen.superoperator()?, EFFECTIVE_RESIDUAL)
}

/// `½ Tr|ρ_eff − Tr_in ρ_full|` against the full model with input rates Γ.
pub fn compare_with_full(couplings: &[CouplingMatrix], thetas: &[f64], mu: f64, gamma: f64) -> Result<f64> {
    let gen = EffectiveGenerator::closed_form(couplings, thetas, mu, gamma)?;
    compare_generator_with_full(&gen, couplings, thetas, mu)
}

/// Same as [`compare_with_full`] for an arbitrary effective generator; the
/// full model uses `gen.gamma`.
pub fn compare_generator_with_full(gen: &EffectiveGenerator, couplings: &[CouplingMatrix], thetas: &[f64], mu: f64) -> Result<f64> {
    check_lengths(couplings, thetas)?;
    if couplings.len() > MAX_ORACLE_INPUTS {
        return Err(Error::DimensionMismatch {
            expected: format!("at most {MAX_ORACLE_INPUTS} inputs for the full model"),
            found: format!("{}", couplings.len()),
        });
    }
    let effective = effective_steady_state(gen)?;
    let full = steady_state(&liouvillian(&network_model(couplings, thetas, mu, gen.gamma)?))?;
    let reduced = crate::operators::partial_trace(&full, &[couplings.len()])?;
    Ok(effective.trace_distance(&reduced))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::{pauli, Axis};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn random_coupling(rng: &mut impl Rng, scale: f64) -> CouplingMatrix {
        CouplingMatrix(std::array::from_fn(|_| std::array::from_fn(|_| rng.random_range(-scale..scale))))
    }

    fn instance(rng: &mut impl Rng, n: usize) -> (Vec<CouplingMatrix>, Vec<f64>) {
        (
            (0..n).map(|_| random_coupling(rng, 1.0)).collect(),
            (0..n).map(|_| rng.random_range(0.0..PI)).collect(),
        )
    }

    #[test]
    fn g_operators_mu_zero() {
        let g = g_operators(&CouplingMatrix::identity(), 0.9, 0.0, 0.0).unwrap();
        assert_eq!(g.g0.max_abs(), 0.0);
    }

    #[test]
    fn g_operators_heisenberg_pole() {
        let g = g_operators(&CouplingMatrix::identity(), 0.0, 0.0, 1.0).unwrap();
        let x = pauli(Axis::X);
        let y = pauli(Axis::Y);
        let z = pauli(Axis::Z);
        assert!(g.g0.approx_eq(&z, 1e-15));
        assert!(g.g3.approx_eq(&z.scale_real(2.0), 1e-15));
        let expected = &(-x) - &y.scale(I);
        assert!(g.g1.approx_eq(&expected, 1e-15));
    }

    #[test]
    fn g_operator_invariants() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let j = random_coupling(&mut rng, 2.0);
            let (theta, phi, mu) = (rng.random_range(0.0..PI), rng.random_range(-PI..PI), rng.random_range(-1.0..1.0));
            let g = g_operators(&j, theta, phi, mu).unwrap();
            assert!(g.g2.approx_eq(&g.g1.adjoint(), 1e-12));
            assert!(g.g0.approx_eq(&g.g3.scale_real(mu / 2.0), 1e-12));
            assert!(g.g0.is_hermitian(1e-12) && g.g3.is_hermitian(1e-12));
        }
    }

    #[test]
    fn trace_formula_matches_closed_forms() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for n in 1..=2 {
            for _ in 0..10 {
                let (js, thetas) = instance(&mut rng, n);
                let mu = rng.random_range(-0.9..0.9);
                let ground = g_from_trace(&js, &thetas, mu, &vec![0; n]).unwrap();
                let sum_g0 = js
                    .iter()
                    .zip(&thetas)
                    .fold(ComplexMatrix::zeros(2, 2), |acc, (j, &t)| &acc + &g_operators(j, t, 0.0, mu).unwrap().g0);
                assert!(ground.approx_eq(&sum_g0, 1e-12));
                for site in 0..n {
                    let g = g_operators(&js[site], thetas[site], 0.0, mu).unwrap();
                    for level in 1..=3 {
                        let mut idx = vec![0; n];
                        idx[site] = level;
                        let traced = g_from_trace(&js, &thetas, mu, &idx).unwrap();
                        assert!(traced.approx_eq(g.as_array()[level], 1e-12), "site {site} level {level}");
                    }
                }
            }
        }
    }

    #[test]
    fn multi_excitation_terms_vanish() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let (js, thetas) = instance(&mut rng, 2);
        let g = g_from_trace(&js, &thetas, 0.4, &[1, 3]).unwrap();
        assert_eq!(g.max_abs(), 0.0);
        let numeric = g_from_trace_numeric(&js, &thetas, 0.4, &[1, 3]).unwrap();
        assert!(numeric.max_abs() <= 1e-15);
    }

    #[test]
    fn coefficient_closed_forms() {
        for mu in [-0.8, -0.3, 0.0, 0.5, 0.9] {
            let bases = eigenbases(&[0.7, 2.1], mu).unwrap();
            let coeffs = coefficient_matrices(&bases).unwrap();
            let expected = [1.0, (1.0 + mu) / 2.0, (1.0 - mu) / 2.0, (1.0 - mu * mu) / 4.0];
            for (i, ei) in coeffs.indices.iter().enumerate() {
                for (j, _) in coeffs.indices.iter().enumerate() {
                    let target = if i == j {
                        match ei {
                            Excitation::Ground => expected[0],
                            Excitation::Single { level, .. } => expected[*level],
                        }
                    } else {
                        0.0
                    };
                    assert!((coeffs.c[(i, j)] - C64::new(target, 0.0)).norm() <= 1e-12);
                }
            }
            let rates = effective_rates(mu);
            for (i, e) in coeffs.indices.iter().enumerate() {
                if let Excitation::Single { level, .. } = e {
                    assert!((coeffs.a[(i, i)].re - rates[level - 1]).abs() <= 1e-12);
                }
            }
            assert!(coeffs.b.max_abs() <= 1e-12);
            assert!(coeffs.a.is_hermitian(1e-12));
        }
    }

    #[test]
    fn build_effective_generator_examples() {
        let gen = build_effective_generator(&[CouplingMatrix::identity()], &[1.2], 0.0, 100.0).unwrap();
        assert!(gen.h_d.max_abs() <= 1e-15);

        let gen = build_effective_generator(&[CouplingMatrix::identity()], &[0.0], 1.0, 7.0).unwrap();
        assert!(gen.h_d.approx_eq(&pauli(Axis::Z), 1e-15));
        let surviving: Vec<f64> = gen.jump_terms.iter().map(|(_, r)| *r).filter(|&r| r > 0.0).collect();
        assert_eq!(surviving, vec![4.0]);
        assert_eq!(gen.h_a.max_abs(), 0.0);
    }

    #[test]
    fn build_effective_generator_cross_check_passes_on_random_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..50 {
            let n = rng.random_range(1..=2);
            let (js, thetas) = instance(&mut rng, n);
            let mu = rng.random_range(-0.95..0.95);
            build_effective_generator(&js, &thetas, mu, 100.0).unwrap();
            let generic = GenericReduction::new(&js, &thetas, mu).unwrap();
            assert!(generic.h_a.max_abs() <= 1e-12);
        }
    }

    #[test]
    fn verbatim_dissipator_matches_generic() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let (js, thetas) = instance(&mut rng, 2);
            let mu = rng.random_range(-0.9..0.9);
            let generic = GenericReduction::new(&js, &thetas, mu).unwrap();
            let a = superoperator_of(|r| generic.dissipator(r));
            let b = superoperator_of(|r| EffectiveGenerator::dissipator_verbatim(&js, &thetas, mu, r).unwrap());
            assert!(a.approx_eq(&b, 1e-12));
        }
    }

    #[test]
    fn reconstruction_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for n in 1..=2 {
            for _ in 0..10 {
                let (js, thetas) = instance(&mut rng, n);
                let mu = rng.random_range(-0.9..0.9);
                let generic = GenericReduction::new(&js, &thetas, mu).unwrap();
                let rebuilt = generic.reconstruct_hamiltonian(&thetas, mu).unwrap();
                assert!(rebuilt.approx_eq(&coupling_hamiltonian(&js).unwrap(), 1e-12));
            }
        }
    }

    #[test]
    fn mu_zero_steady_state_is_maximally_mixed() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let (js, thetas) = instance(&mut rng, 2);
        let gen = EffectiveGenerator::closed_form(&js, &thetas, 0.0, 100.0).unwrap();
        let ss = effective_steady_state(&gen).unwrap();
        assert!(ss.matrix().approx_eq(&DensityMatrix::maximally_mixed(1).into_matrix(), 1e-12));
    }

    #[test]
    fn zero_coupling_is_degenerate() {
        let gen = EffectiveGenerator::closed_form(&[CouplingMatrix::ZERO; 2], &[0.3, 1.0], 0.5, 100.0).unwrap();
        assert!(matches!(effective_steady_state(&gen), Err(Error::DegenerateSteadyState { .. })));
    }

    #[test]
    fn effective_matches_full_model() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for _ in 0..5 {
            let (js, thetas) = instance(&mut rng, 2);
            let d = compare_with_full(&js, &thetas, 0.5, 100.0).unwrap();
            assert!(d <= 0.05, "distance {d}");
        }
    }

    #[test]
    fn full_model_distance_shrinks_with_gamma() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let (js, thetas) = instance(&mut rng, 2);
        let d50 = compare_with_full(&js, &thetas, 0.5, 50.0).unwrap();
        let d200 = compare_with_full(&js, &thetas, 0.5, 200.0).unwrap();
        assert!(d200 < d50);
        assert!(d200 <= 0.02);
        let sym = compare_with_full(&js, &thetas, 0.0, 300.0).unwrap();
        assert!(sym <= 1e-6);
    }

    #[test]
    fn asymptotic_inverse_gamma_scaling() {
        // Deep in the strong-dissipation regime the discrepancy halves with
        // each doubling of Γ.
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..5 {
            let (js, thetas) = instance(&mut rng, 2);
            let d1 = compare_with_full(&js, &thetas, 0.5, 1600.0).unwrap();
            let d2 = compare_with_full(&js, &thetas, 0.5, 3200.0).unwrap();
            let ratio = d2 / d1;
            assert!((0.3..=0.9).contains(&ratio), "ratio {ratio}");
        }
    }

    #[test]
    fn steady_state_depends_on_rates_over_gamma() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let (js, thetas) = instance(&mut rng, 2);
        let gen = EffectiveGenerator::closed_form(&js, &thetas, 0.5, 80.0).unwrap();
        let mut scaled = gen.clone();
        scaled.gamma *= 2.0;
        for (_, r) in scaled.jump_terms.iter_mut() {
            *r *= 2.0;
        }
        let a = effective_steady_state(&gen).unwrap();
        let b = effective_steady_state(&scaled).unwrap();
        assert!(a.matrix().approx_eq(b.matrix(), 1e-12));
    }

    #[test]
    fn oracle_size_limit() {
        let js = vec![CouplingMatrix::identity(); 4];
        assert!(compare_with_full(&js, &[0.1; 4], 0.5, 100.0).is_err());
    }
}
