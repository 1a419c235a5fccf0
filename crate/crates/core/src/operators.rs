//! Dense complex operator algebra for few-qubit systems.
//!
//! Conventions: `σ_z |0⟩ = +|0⟩`, tensor products place site 0 leftmost
//! (most significant bit of a basis index), and coupling matrices pair the
//! input-qubit axis (row) with the output-qubit axis (column).

use std::fmt;
use std::ops::{Add, AddAssign, Index, Mul, Neg, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Default absolute tolerance for matrix comparisons.
pub const DEFAULT_TOLERANCE: f64 = 1e-12;

/// Tolerance for the density-matrix invariants (Hermiticity, trace, positivity).
pub const STATE_TOLERANCE: f64 = 1e-9;

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);
pub(crate) const I: C64 = C64::new(0.0, 1.0);

/// Dense complex matrix.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix(DMatrix<C64>);

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self(DMatrix::zeros(rows, cols))
    }

    pub fn identity(dim: usize) -> Self {
        Self(DMatrix::identity(dim, dim))
    }

    /// Builds a matrix from row-major entries.
    pub fn from_row_major(rows: usize, cols: usize, entries: &[C64]) -> Result<Self> {
        if rows == 0 || cols == 0 || rows * cols != entries.len() {
            return Err(Error::DimensionMismatch {
                expected: format!("{rows}x{cols} = {} entries", rows * cols),
                found: format!("{} entries", entries.len()),
            });
        }
        Ok(Self(DMatrix::from_row_slice(rows, cols, entries)))
    }

    pub fn from_real_row_major(rows: usize, cols: usize, entries: &[f64]) -> Result<Self> {
        let entries: Vec<C64> = entries.iter().map(|&x| C64::new(x, 0.0)).collect();
        Self::from_row_major(rows, cols, &entries)
    }

    /// Column vector (ket).
    pub fn ket(entries: &[C64]) -> Self {
        Self(DMatrix::from_column_slice(entries.len(), 1, entries))
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl FnMut(usize, usize) -> C64) -> Self {
        Self(DMatrix::from_fn(rows, cols, f))
    }

    pub fn from_inner(inner: DMatrix<C64>) -> Self {
        Self(inner)
    }

    pub fn inner(&self) -> &DMatrix<C64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<C64> {
        self.0
    }

    pub fn rows(&self) -> usize {
        self.0.nrows()
    }

    pub fn cols(&self) -> usize {
        self.0.ncols()
    }

    pub fn is_square(&self) -> bool {
        self.rows() == self.cols()
    }

    /// Entries in row-major order.
    pub fn row_major(&self) -> Vec<C64> {
        self.0.transpose().as_slice().to_vec()
    }

    pub fn adjoint(&self) -> Self {
        Self(self.0.adjoint())
    }

    pub fn transpose(&self) -> Self {
        Self(self.0.transpose())
    }

    pub fn conjugate(&self) -> Self {
        Self(self.0.conjugate())
    }

    pub fn kron(&self, other: &Self) -> Self {
        Self(self.0.kronecker(&other.0))
    }

    pub fn trace(&self) -> C64 {
        self.0.trace()
    }

    pub fn scale(&self, factor: C64) -> Self {
        Self(&self.0 * factor)
    }

    pub fn scale_real(&self, factor: f64) -> Self {
        self.scale(C64::new(factor, 0.0))
    }

    /// `|self⟩⟨other|` for two kets.
    pub fn outer(&self, other: &Self) -> Self {
        Self(&self.0 * other.0.adjoint())
    }

    /// `⟨self|other⟩` for two kets.
    pub fn inner_product(&self, other: &Self) -> C64 {
        self.0.dotc(&other.0)
    }

    pub fn commutator(&self, other: &Self) -> Self {
        Self(&self.0 * &other.0 - &other.0 * &self.0)
    }

    pub fn anticommutator(&self, other: &Self) -> Self {
        Self(&self.0 * &other.0 + &other.0 * &self.0)
    }

    /// Largest entry magnitude.
    pub fn max_abs(&self) -> f64 {
        self.0.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Largest entrywise distance to `other`; infinite on shape mismatch.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        if self.0.shape() != other.0.shape() {
            return f64::INFINITY;
        }
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        self.max_abs_diff(other) <= tol
    }

    /// `max |A - A†|`; infinite for non-square matrices.
    pub fn hermiticity_deviation(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        self.max_abs_diff(&self.adjoint())
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_deviation() <= tol
    }

    /// `(A + A†)/2`.
    pub fn hermitian_part(&self) -> Self {
        Self((&self.0 + self.0.adjoint()) * C64::new(0.5, 0.0))
    }

    /// Eigenvalues of a Hermitian matrix, ascending.
    pub fn hermitian_eigenvalues(&self) -> Vec<f64> {
        let mut values: Vec<f64> = self.hermitian_part().0.symmetric_eigenvalues().iter().copied().collect();
        values.sort_by(f64::total_cmp);
        values
    }

    /// Singular values, ascending.
    pub fn singular_values(&self) -> Vec<f64> {
        let mut values: Vec<f64> = self.0.singular_values().iter().copied().collect();
        values.sort_by(f64::total_cmp);
        values
    }

    pub fn all_finite(&self) -> bool {
        self.0.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows(), self.cols())?;
        for i in 0..self.rows() {
            write!(f, "  ")?;
            for j in 0..self.cols() {
                let z = self.0[(i, j)];
                write!(f, "{:+.6}{:+.6}i  ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;

    fn index(&self, idx: (usize, usize)) -> &C64 {
        &self.0[idx]
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix(&self.0 + &rhs.0)
    }
}

impl Add for ComplexMatrix {
    type Output = ComplexMatrix;

    fn add(self, rhs: ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix(self.0 + rhs.0)
    }
}

impl AddAssign<&ComplexMatrix> for ComplexMatrix {
    fn add_assign(&mut self, rhs: &ComplexMatrix) {
        self.0 += &rhs.0;
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix(&self.0 - &rhs.0)
    }
}

impl Sub for ComplexMatrix {
    type Output = ComplexMatrix;

    fn sub(self, rhs: ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix(self.0 - rhs.0)
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix(&self.0 * &rhs.0)
    }
}

impl Mul for ComplexMatrix {
    type Output = ComplexMatrix;

    fn mul(self, rhs: ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix(self.0 * rhs.0)
    }
}

impl Neg for ComplexMatrix {
    type Output = ComplexMatrix;

    fn neg(self) -> ComplexMatrix {
        ComplexMatrix(-self.0)
    }
}

/// Density matrix of a register of qubits.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    matrix: ComplexMatrix,
}

impl DensityMatrix {
    /// Validates Hermiticity, unit trace and positivity at [`STATE_TOLERANCE`].
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        let dim = matrix.rows();
        if !matrix.is_square() || dim == 0 || !dim.is_power_of_two() {
            return Err(Error::InvalidState {
                reason: format!("shape {}x{} is not a qubit register", matrix.rows(), matrix.cols()),
            });
        }
        let deviation = matrix.hermiticity_deviation();
        if deviation > STATE_TOLERANCE {
            return Err(Error::InvalidState {
                reason: format!("not Hermitian (deviation {deviation:e})"),
            });
        }
        let trace = matrix.trace();
        if (trace - ONE).norm() > STATE_TOLERANCE {
            return Err(Error::InvalidState {
                reason: format!("trace {trace} differs from 1"),
            });
        }
        let min_eig = matrix.hermitian_eigenvalues()[0];
        if min_eig < -STATE_TOLERANCE {
            return Err(Error::InvalidState {
                reason: format!("negative eigenvalue {min_eig:e}"),
            });
        }
        Ok(Self { matrix })
    }

    /// Symmetrizes a numerically computed state before validating it.
    pub(crate) fn from_numerical(matrix: ComplexMatrix) -> Result<Self> {
        Self::new(matrix.hermitian_part())
    }

    pub fn pure(ket: &ComplexMatrix) -> Result<Self> {
        let norm = ket.inner_product(ket).re.sqrt();
        Self::new(ket.scale_real(1.0 / norm).outer(&ket.scale_real(1.0 / norm)))
    }

    pub fn maximally_mixed(n_qubits: usize) -> Self {
        let dim = 1 << n_qubits;
        Self {
            matrix: ComplexMatrix::identity(dim).scale_real(1.0 / dim as f64),
        }
    }

    /// `(I + r·σ)/2` for a single qubit; `|r| ≤ 1`.
    pub fn from_bloch(r: [f64; 3]) -> Result<Self> {
        let m = &ComplexMatrix::identity(2) + &sigma_dot(r);
        Self::new(m.scale_real(0.5))
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn n_qubits(&self) -> usize {
        self.dim().trailing_zeros() as usize
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    /// `⟨ψ|ρ|ψ⟩`.
    pub fn population(&self, ket: &ComplexMatrix) -> f64 {
        (ket.adjoint() * self.matrix.clone() * ket.clone())[(0, 0)].re
    }

    /// `(⟨σ_x⟩, ⟨σ_y⟩, ⟨σ_z⟩)` of a single-qubit state.
    pub fn bloch(&self) -> [f64; 3] {
        debug_assert_eq!(self.dim(), 2);
        let m = &self.matrix;
        [2.0 * m[(0, 1)].re, -2.0 * m[(0, 1)].im, (m[(0, 0)] - m[(1, 1)]).re]
    }

    pub fn trace_distance(&self, other: &Self) -> f64 {
        trace_distance(&self.matrix, &other.matrix)
    }
}

/// `½ Tr|A − B|` for Hermitian `A`, `B`.
pub fn trace_distance(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    0.5 * (a - b).hermitian_eigenvalues().iter().map(|x| x.abs()).sum::<f64>()
}

/// Unit vector on the Bloch sphere.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlochVector {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl BlochVector {
    pub fn components(&self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn dot(&self, other: &Self) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }
}

/// `(sinθ cosφ, sinθ sinφ, cosθ)`.
pub fn bloch_vector(theta: f64, phi: f64) -> BlochVector {
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = phi.sin_cos();
    BlochVector {
        x: st * cp,
        y: st * sp,
        z: ct,
    }
}

/// Orthonormal frame `(v, v′, v″)` with `v′ = v(π/2 − θ, φ + π)` and
/// `v″ = v(π/2, φ + π/2)`.
pub fn frame_vectors(theta: f64, phi: f64) -> (BlochVector, BlochVector, BlochVector) {
    use std::f64::consts::{FRAC_PI_2, PI};
    (
        bloch_vector(theta, phi),
        bloch_vector(FRAC_PI_2 - theta, phi + PI),
        bloch_vector(FRAC_PI_2, phi + FRAC_PI_2),
    )
}

/// Real 3×3 coupling between an input and an output qubit.
///
/// Entry `(a, b)` multiplies `σ_a` on the input qubit and `σ_b` on the output.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CouplingMatrix(pub [[f64; 3]; 3]);

impl CouplingMatrix {
    pub const ZERO: Self = Self([[0.0; 3]; 3]);

    pub fn identity() -> Self {
        Self::diagonal([1.0, 1.0, 1.0])
    }

    pub fn diagonal(d: [f64; 3]) -> Self {
        let mut m = Self::ZERO;
        for (a, &x) in d.iter().enumerate() {
            m.0[a][a] = x;
        }
        m
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().flatten().all(|x| x.is_finite())
    }

    /// `w_b = Σ_a v_a J_ab`: the output-side field produced by an input
    /// polarization `v`.
    pub fn contract_input(&self, v: [f64; 3]) -> [f64; 3] {
        let mut w = [0.0; 3];
        for (a, row) in self.0.iter().enumerate() {
            for (b, &j) in row.iter().enumerate() {
                w[b] += v[a] * j;
            }
        }
        w
    }
}

impl Index<(usize, usize)> for CouplingMatrix {
    type Output = f64;

    fn index(&self, (a, b): (usize, usize)) -> &f64 {
        &self.0[a][b]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Axis {
    X,
    Y,
    Z,
    Identity,
}

pub const PAULI_AXES: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

pub fn pauli(axis: Axis) -> ComplexMatrix {
    let entries = match axis {
        Axis::X => [ZERO, ONE, ONE, ZERO],
        Axis::Y => [ZERO, -I, I, ZERO],
        Axis::Z => [ONE, ZERO, ZERO, -ONE],
        Axis::Identity => [ONE, ZERO, ZERO, ONE],
    };
    ComplexMatrix(DMatrix::from_row_slice(2, 2, &entries))
}

/// `w·σ` for a real 3-vector.
pub fn sigma_dot(w: [f64; 3]) -> ComplexMatrix {
    let entries = [
        C64::new(w[2], 0.0),
        C64::new(w[0], -w[1]),
        C64::new(w[0], w[1]),
        C64::new(-w[2], 0.0),
    ];
    ComplexMatrix(DMatrix::from_row_slice(2, 2, &entries))
}

/// Places a single-qubit operator on `site` of an `n_sites` register.
pub fn embed(op: &ComplexMatrix, site: usize, n_sites: usize) -> Result<ComplexMatrix> {
    if site >= n_sites {
        return Err(Error::IndexOutOfRange { index: site, len: n_sites });
    }
    if op.rows() != 2 || op.cols() != 2 {
        return Err(Error::DimensionMismatch {
            expected: "2x2".into(),
            found: format!("{}x{}", op.rows(), op.cols()),
        });
    }
    let id = ComplexMatrix::identity(2);
    let mut out = ComplexMatrix::identity(1);
    for s in 0..n_sites {
        out = out.kron(if s == site { op } else { &id });
    }
    Ok(out)
}

/// Encoding kets `|s(θ)⟩ = (cos θ/2, sin θ/2)` and `|s⊥(θ)⟩ = (sin θ/2, −cos θ/2)`.
pub fn encode_state(theta: f64) -> Result<(ComplexMatrix, ComplexMatrix)> {
    check_angle(theta)?;
    let (s, c) = (theta / 2.0).sin_cos();
    Ok((
        ComplexMatrix::ket(&[C64::new(c, 0.0), C64::new(s, 0.0)]),
        ComplexMatrix::ket(&[C64::new(s, 0.0), C64::new(-c, 0.0)]),
    ))
}

pub(crate) fn check_angle(theta: f64) -> Result<()> {
    if !(0.0..=std::f64::consts::PI).contains(&theta) {
        return Err(Error::Domain {
            what: "theta",
            value: theta,
            domain: "[0, pi]",
        });
    }
    Ok(())
}

/// `H = Σ_n Σ_ab (J_n)_ab σ_a^n σ_b^out` on `N` input sites followed by
/// the output qubit.
pub fn coupling_hamiltonian(couplings: &[CouplingMatrix]) -> Result<ComplexMatrix> {
    if couplings.is_empty() {
        return Err(Error::Empty("coupling list"));
    }
    let n_sites = couplings.len() + 1;
    let out_site = couplings.len();
    let dim = 1 << n_sites;
    let mut h = ComplexMatrix::zeros(dim, dim);
    let out_paulis = PAULI_AXES
        .iter()
        .map(|&b| embed(&pauli(b), out_site, n_sites))
        .collect::<Result<Vec<_>>>()?;
    for (n, j) in couplings.iter().enumerate() {
        for (a, &axis) in PAULI_AXES.iter().enumerate() {
            let input = embed(&pauli(axis), n, n_sites)?;
            for (b, out) in out_paulis.iter().enumerate() {
                if j.0[a][b] != 0.0 {
                    h += &(&input * out).scale_real(j.0[a][b]);
                }
            }
        }
    }
    Ok(h)
}

/// `Tr(ρ·O)` for Hermitian `O`.
pub fn expectation(rho: &DensityMatrix, obs: &ComplexMatrix) -> Result<f64> {
    if obs.rows() != rho.dim() || obs.cols() != rho.dim() {
        return Err(Error::DimensionMismatch {
            expected: format!("{0}x{0}", rho.dim()),
            found: format!("{}x{}", obs.rows(), obs.cols()),
        });
    }
    let deviation = obs.hermiticity_deviation();
    if deviation > STATE_TOLERANCE {
        return Err(Error::NotHermitian { deviation });
    }
    let value = (rho.matrix() * obs).trace();
    debug_assert!(value.im.abs() <= STATE_TOLERANCE);
    Ok(value.re)
}

/// Partial trace of an arbitrary operator on `n_sites` qubits, keeping the
/// listed sites in ascending order.
pub fn partial_trace_operator(op: &ComplexMatrix, n_sites: usize, keep: &[usize]) -> Result<ComplexMatrix> {
    if keep.is_empty() {
        return Err(Error::Empty("kept site set"));
    }
    let dim = 1usize << n_sites;
    if op.rows() != dim || op.cols() != dim {
        return Err(Error::DimensionMismatch {
            expected: format!("{dim}x{dim}"),
            found: format!("{}x{}", op.rows(), op.cols()),
        });
    }
    let mut keep: Vec<usize> = keep.to_vec();
    keep.sort_unstable();
    keep.dedup();
    if let Some(&bad) = keep.iter().find(|&&s| s >= n_sites) {
        return Err(Error::IndexOutOfRange { index: bad, len: n_sites });
    }
    let traced: Vec<usize> = (0..n_sites).filter(|s| !keep.contains(s)).collect();
    let bit = |idx: usize, site: usize| (idx >> (n_sites - 1 - site)) & 1;
    let gather = |idx: usize, sites: &[usize]| sites.iter().fold(0usize, |acc, &s| (acc << 1) | bit(idx, s));

    let kept_dim = 1usize << keep.len();
    let mut out = ComplexMatrix::zeros(kept_dim, kept_dim);
    for i in 0..dim {
        let ti = gather(i, &traced);
        let ki = gather(i, &keep);
        for j in 0..dim {
            if gather(j, &traced) == ti {
                out.0[(ki, gather(j, &keep))] += op.0[(i, j)];
            }
        }
    }
    Ok(out)
}

pub fn partial_trace(rho: &DensityMatrix, keep: &[usize]) -> Result<DensityMatrix> {
    let reduced = partial_trace_operator(rho.matrix(), rho.n_qubits(), keep)?;
    DensityMatrix::from_numerical(reduced)
}
