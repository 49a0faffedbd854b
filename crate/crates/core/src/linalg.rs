//! Dense complex matrices for systems of at most three qubits.
//!
//! Qubit 0 is the leftmost tensor factor and the most significant bit of a
//! computational-basis index, so `kron(a, b)` places `a` on qubit 0.

use std::fmt;
use std::ops::{Add, Mul, Sub};

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// Tolerance used for the Hermitian, trace and positivity checks on states.
pub const STATE_TOLERANCE: f64 = 1e-10;

/// Tolerance on the norm of a pure state.
pub const NORM_TOLERANCE: f64 = 1e-12;

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Row-major dense complex matrix with finite entries.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl ComplexMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::DimensionMismatch(format!(
                "matrix dimensions must be positive, got {rows}x{cols}"
            )));
        }
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(ComplexMatrix { rows, cols, data })
    }

    /// Builds a matrix from nested rows. Panics on ragged or non-finite
    /// input; intended for literal constants.
    pub fn from_rows<const R: usize, const C: usize>(rows: [[C64; C]; R]) -> Self {
        let data = rows.iter().flat_map(|r| r.iter().copied()).collect();
        ComplexMatrix::new(R, C, data).expect("literal matrix")
    }

    pub fn from_real<const R: usize, const C: usize>(rows: [[f64; C]; R]) -> Self {
        let data = rows
            .iter()
            .flat_map(|r| r.iter().map(|&x| c(x, 0.0)))
            .collect();
        ComplexMatrix::new(R, C, data).expect("literal matrix")
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        ComplexMatrix {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim, dim);
        for i in 0..dim {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn diag(entries: &[C64]) -> Self {
        let mut m = Self::zeros(entries.len(), entries.len());
        for (i, &z) in entries.iter().enumerate() {
            m[(i, i)] = z;
        }
        m
    }

    /// `|i><j|` on a `dim`-dimensional space.
    pub fn basis_op(dim: usize, i: usize, j: usize) -> Self {
        let mut m = Self::zeros(dim, dim);
        m[(i, j)] = ONE;
        m
    }

    /// Outer product `|u><v|`.
    pub fn outer(u: &[C64], v: &[C64]) -> Self {
        let mut m = Self::zeros(u.len(), v.len());
        for (i, a) in u.iter().enumerate() {
            for (j, b) in v.iter().enumerate() {
                m[(i, j)] = a * b.conj();
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    /// Row-major entries.
    pub fn entries(&self) -> &[C64] {
        &self.data
    }

    pub fn adjoint(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)].conj();
            }
        }
        out
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn scale(&self, s: C64) -> Self {
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn scale_real(&self, s: f64) -> Self {
        self.scale(c(s, 0.0))
    }

    /// `self * other * self^dagger`.
    pub fn conjugate(&self, other: &ComplexMatrix) -> Self {
        &(self * other) * &self.adjoint()
    }

    pub fn matvec(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(v.len(), self.cols, "matvec dimension mismatch");
        (0..self.rows)
            .map(|i| (0..self.cols).map(|j| self[(i, j)] * v[j]).sum())
            .collect()
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &ComplexMatrix) -> f64 {
        assert_eq!(
            (self.rows, self.cols),
            (other.rows, other.cols),
            "max_abs_diff dimension mismatch"
        );
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn hermitian_residual(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        self.max_abs_diff(&self.adjoint())
    }

    /// `max |U^dagger U - I|`, infinite for non-square input.
    pub fn unitary_residual(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        (&self.adjoint() * self).max_abs_diff(&Self::identity(self.rows))
    }

    pub fn ensure_unitary(&self, tol: f64) -> Result<()> {
        let residual = self.unitary_residual();
        if residual > tol {
            Err(Error::NotUnitary { residual })
        } else {
            Ok(())
        }
    }

    pub fn ensure_hermitian(&self, tol: f64) -> Result<()> {
        let residual = self.hermitian_residual();
        if residual > tol {
            Err(Error::NotHermitian { residual })
        } else {
            Ok(())
        }
    }

    pub(crate) fn to_nalgebra(&self) -> DMatrix<C64> {
        DMatrix::from_row_slice(self.rows, self.cols, &self.data)
    }

    pub(crate) fn from_nalgebra(m: &DMatrix<C64>) -> Self {
        let mut out = Self::zeros(m.nrows(), m.ncols());
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                out[(i, j)] = m[(i, j)];
            }
        }
        out
    }
}

impl std::ops::Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for ComplexMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.cols, rhs.rows, "matrix product dimension mismatch");
        let mut out = ComplexMatrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == ZERO {
                    continue;
                }
                for j in 0..rhs.cols {
                    out[(i, j)] += a * rhs[(k, j)];
                }
            }
        }
        out
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for j in 0..self.cols {
                let z = self[(i, j)];
                write!(f, "{:+.6}{:+.6}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

/// Kronecker product; `a` acts on the more significant qubits.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let rows = a.rows * b.rows;
    let cols = a.cols * b.cols;
    let mut out = ComplexMatrix::zeros(rows, cols);
    for ai in 0..a.rows {
        for aj in 0..a.cols {
            let x = a[(ai, aj)];
            if x == ZERO {
                continue;
            }
            for bi in 0..b.rows {
                for bj in 0..b.cols {
                    out[(ai * b.rows + bi, aj * b.cols + bj)] = x * b[(bi, bj)];
                }
            }
        }
    }
    out
}

/// Kronecker product of a sequence of factors, leftmost factor first.
pub fn kron_all<'a>(factors: impl IntoIterator<Item = &'a ComplexMatrix>) -> ComplexMatrix {
    factors
        .into_iter()
        .fold(ComplexMatrix::identity(1), |acc, f| kron(&acc, f))
}

/// Traces out the subsystems listed in `traced` from a square operator on a
/// space with the given subsystem dimensions. Works on any operator, not only
/// states, so it can be applied to the basis operators `|i><j|`.
pub fn partial_trace_matrix(
    m: &ComplexMatrix,
    dims: &[usize],
    traced: &[usize],
) -> Result<ComplexMatrix> {
    let total: usize = dims.iter().product();
    if !m.is_square() || total != m.rows() {
        return Err(Error::DimensionMismatch(format!(
            "subsystem dimensions {dims:?} do not match a {}x{} operator",
            m.rows(),
            m.cols()
        )));
    }
    if traced.is_empty() || traced.len() >= dims.len() {
        return Err(Error::DimensionMismatch(format!(
            "traced subsystems {traced:?} must be a nonempty proper subset of {} subsystems",
            dims.len()
        )));
    }
    let mut is_traced = vec![false; dims.len()];
    for &t in traced {
        if t >= dims.len() || is_traced[t] {
            return Err(Error::DimensionMismatch(format!(
                "invalid traced subsystem list {traced:?}"
            )));
        }
        is_traced[t] = true;
    }

    let kept: Vec<usize> = (0..dims.len()).filter(|&s| !is_traced[s]).collect();
    let gone: Vec<usize> = (0..dims.len()).filter(|&s| is_traced[s]).collect();
    let kept_dim: usize = kept.iter().map(|&s| dims[s]).product();
    let gone_dim: usize = gone.iter().map(|&s| dims[s]).product();

    // Reassembles a full index from per-subsystem digits.
    let compose = |kept_idx: usize, gone_idx: usize| -> usize {
        let mut digits = vec![0usize; dims.len()];
        let mut rest = kept_idx;
        for &s in kept.iter().rev() {
            digits[s] = rest % dims[s];
            rest /= dims[s];
        }
        let mut rest = gone_idx;
        for &s in gone.iter().rev() {
            digits[s] = rest % dims[s];
            rest /= dims[s];
        }
        digits.iter().zip(dims).fold(0, |acc, (&d, &n)| acc * n + d)
    };

    let mut out = ComplexMatrix::zeros(kept_dim, kept_dim);
    for i in 0..kept_dim {
        for j in 0..kept_dim {
            let mut acc = ZERO;
            for g in 0..gone_dim {
                acc += m[(compose(i, g), compose(j, g))];
            }
            out[(i, j)] = acc;
        }
    }
    Ok(out)
}

/// Eigenvalues of a Hermitian matrix in ascending order.
pub fn hermitian_eigenvalues(m: &ComplexMatrix) -> Vec<f64> {
    let mut values: Vec<f64> = SymmetricEigen::new(m.to_nalgebra())
        .eigenvalues
        .iter()
        .copied()
        .collect();
    values.sort_by(f64::total_cmp);
    values
}

/// Eigenpairs of a Hermitian matrix; eigenvectors are returned as columns of
/// the amplitude list.
pub fn hermitian_eigen(m: &ComplexMatrix) -> Vec<(f64, Vec<C64>)> {
    let eig = SymmetricEigen::new(m.to_nalgebra());
    eig.eigenvalues
        .iter()
        .enumerate()
        .map(|(k, &lambda)| (lambda, eig.eigenvectors.column(k).iter().copied().collect()))
        .collect()
}

/// Labels of the single-qubit Pauli operators.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub const ALL: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];

    pub fn matrix(self) -> ComplexMatrix {
        match self {
            Pauli::I => ComplexMatrix::identity(2),
            Pauli::X => ComplexMatrix::from_real([[0.0, 1.0], [1.0, 0.0]]),
            Pauli::Y => ComplexMatrix::from_rows([[ZERO, -I], [I, ZERO]]),
            Pauli::Z => ComplexMatrix::from_real([[1.0, 0.0], [0.0, -1.0]]),
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Pauli {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Pauli::I => "I",
            Pauli::X => "X",
            Pauli::Y => "Y",
            Pauli::Z => "Z",
        };
        f.write_str(s)
    }
}

pub fn hadamard() -> ComplexMatrix {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    ComplexMatrix::from_real([[h, h], [h, -h]])
}

/// Phase gate `diag(1, i)`.
pub fn phase_s() -> ComplexMatrix {
    ComplexMatrix::diag(&[ONE, I])
}

/// `|j><j|` on one qubit.
pub fn projector(j: usize) -> ComplexMatrix {
    ComplexMatrix::basis_op(2, j, j)
}

/// Computational basis vector `|index>` of a `dim`-dimensional space.
pub fn basis_vector(dim: usize, index: usize) -> Vec<C64> {
    let mut v = vec![ZERO; dim];
    v[index] = ONE;
    v
}

/// A validated density operator on one to three qubits.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityOperator {
    matrix: ComplexMatrix,
}

impl DensityOperator {
    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    /// Maximally mixed state on `dim` dimensions.
    pub fn maximally_mixed(dim: usize) -> Self {
        DensityOperator {
            matrix: ComplexMatrix::identity(dim).scale_real(1.0 / dim as f64),
        }
    }

    /// Wraps a matrix that is a density operator by construction.
    pub(crate) fn from_trusted(matrix: ComplexMatrix) -> Self {
        debug_assert!(matrix.is_square());
        DensityOperator { matrix }
    }

    pub fn kron(&self, other: &DensityOperator) -> DensityOperator {
        DensityOperator::from_trusted(kron(&self.matrix, &other.matrix))
    }

    /// `<psi| rho |psi>`.
    pub fn expectation_in(&self, psi: &PureState) -> f64 {
        let v = psi.amplitudes();
        let rv = self.matrix.matvec(v);
        v.iter().zip(&rv).map(|(a, b)| a.conj() * b).sum::<C64>().re
    }

    /// `tr[O rho]` for a Hermitian observable.
    pub fn expectation(&self, observable: &ComplexMatrix) -> f64 {
        (observable * &self.matrix).trace().re
    }
}

/// Checks the density-operator invariants and wraps the matrix.
pub fn validate_density(m: ComplexMatrix) -> Result<DensityOperator> {
    if !m.is_square() || !matches!(m.rows(), 2 | 4 | 8) {
        return Err(Error::DimensionMismatch(format!(
            "density operators must be 2x2, 4x4 or 8x8, got {}x{}",
            m.rows(),
            m.cols()
        )));
    }
    m.ensure_hermitian(STATE_TOLERANCE)?;
    let trace = m.trace();
    if (trace - ONE).norm() > STATE_TOLERANCE {
        return Err(Error::NotUnitTrace { trace: trace.re });
    }
    let min_eigenvalue = hermitian_eigenvalues(&m)[0];
    if min_eigenvalue < -STATE_TOLERANCE {
        return Err(Error::NotPositive { min_eigenvalue });
    }
    Ok(DensityOperator { matrix: m })
}

/// Reduced state after tracing out the listed subsystems.
pub fn partial_trace(
    rho: &DensityOperator,
    dims: &[usize],
    traced: &[usize],
) -> Result<DensityOperator> {
    partial_trace_matrix(&rho.matrix, dims, traced).map(DensityOperator::from_trusted)
}

/// A normalized state vector.
#[derive(Clone, Debug, PartialEq)]
pub struct PureState {
    amplitudes: Vec<C64>,
}

impl PureState {
    pub fn new(amplitudes: Vec<C64>) -> Result<Self> {
        let dim = amplitudes.len();
        if dim < 2 || !dim.is_power_of_two() {
            return Err(Error::DimensionMismatch(format!(
                "state dimension must be a power of two >= 2, got {dim}"
            )));
        }
        if amplitudes
            .iter()
            .any(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(Error::NonFinite);
        }
        let norm = norm2(&amplitudes);
        if (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::NotNormalized { norm });
        }
        Ok(PureState { amplitudes })
    }

    /// Normalizes the vector first; fails on a zero vector.
    pub fn normalized(amplitudes: Vec<C64>) -> Result<Self> {
        let norm = norm2(&amplitudes);
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::NotNormalized { norm });
        }
        PureState::new(amplitudes.into_iter().map(|z| z / norm).collect())
    }

    pub fn basis(dim: usize, index: usize) -> Self {
        PureState {
            amplitudes: basis_vector(dim, index),
        }
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn density(&self) -> DensityOperator {
        DensityOperator::from_trusted(ComplexMatrix::outer(&self.amplitudes, &self.amplitudes))
    }

    pub fn inner(&self, other: &PureState) -> C64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// Applies a unitary; the caller guarantees unitarity.
    pub fn evolve(&self, u: &ComplexMatrix) -> Result<PureState> {
        if u.cols() != self.dim() || u.rows() != self.dim() {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} operator on a {}-dimensional state",
                u.rows(),
                u.cols(),
                self.dim()
            )));
        }
        PureState::normalized(u.matvec(&self.amplitudes))
    }

    pub fn tensor(&self, other: &PureState) -> PureState {
        let amplitudes = self
            .amplitudes
            .iter()
            .flat_map(|a| other.amplitudes.iter().map(move |b| a * b))
            .collect();
        PureState { amplitudes }
    }
}

pub fn norm2(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random_matrix(seed: u64, n: usize) -> ComplexMatrix {
        // Small LCG so the tests do not depend on the estimator's RNG.
        let mut s = seed
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        let mut next = || {
            s = s
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        };
        let data = (0..n * n).map(|_| c(next(), next())).collect();
        ComplexMatrix::new(n, n, data).unwrap()
    }

    fn random_density(seed: u64, n: usize) -> DensityOperator {
        let a = random_matrix(seed, n);
        let m = &a * &a.adjoint();
        let t = m.trace().re;
        validate_density(m.scale_real(1.0 / t)).unwrap()
    }

    #[test]
    fn kron_identities() {
        let id4 = kron(&ComplexMatrix::identity(2), &ComplexMatrix::identity(2));
        assert_eq!(id4, ComplexMatrix::identity(4));

        let zz = kron(&Pauli::Z.matrix(), &Pauli::Z.matrix());
        let expected = ComplexMatrix::diag(&[ONE, -ONE, -ONE, ONE]);
        assert_eq!(zz, expected);
    }

    #[test]
    fn kron_projector_block() {
        let m = kron(&projector(0), &Pauli::X.matrix());
        let mut expected = ComplexMatrix::zeros(4, 4);
        expected[(0, 1)] = ONE;
        expected[(1, 0)] = ONE;
        assert_eq!(m, expected);
    }

    #[test]
    fn kron_is_associative() {
        let a = random_matrix(1, 2);
        let b = random_matrix(2, 2);
        let d = random_matrix(3, 2);
        let left = kron(&kron(&a, &b), &d);
        let right = kron(&a, &kron(&b, &d));
        assert!(left.max_abs_diff(&right) <= 1e-14);
    }

    #[test]
    fn partial_trace_of_bell_state_is_maximally_mixed() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let phi = PureState::new(vec![c(h, 0.0), ZERO, ZERO, c(h, 0.0)]).unwrap();
        let reduced = partial_trace(&phi.density(), &[2, 2], &[1]).unwrap();
        let expected = ComplexMatrix::identity(2).scale_real(0.5);
        assert!(reduced.matrix().max_abs_diff(&expected) <= 1e-15);
    }

    #[test]
    fn partial_trace_of_product_state() {
        let rho = PureState::basis(4, 0).density();
        let reduced = partial_trace(&rho, &[2, 2], &[0]).unwrap();
        assert_eq!(reduced.matrix(), &projector(0));
    }

    #[test]
    fn partial_trace_of_nme_state() {
        // K^2 = 1 / 1.25 = 0.8, (kK)^2 = 0.2
        let psi = PureState::normalized(vec![ONE, ZERO, ZERO, c(0.5, 0.0)]).unwrap();
        let reduced = partial_trace(&psi.density(), &[2, 2], &[0]).unwrap();
        let expected = ComplexMatrix::from_real([[0.8, 0.0], [0.0, 0.2]]);
        assert!(reduced.matrix().max_abs_diff(&expected) <= 1e-15);
    }

    #[test]
    fn partial_trace_matches_index_contraction() {
        // Brute force over explicit (a, b, c) digits for three qubits.
        let rho = random_density(7, 8);
        let m = rho.matrix();
        for traced in [
            vec![0],
            vec![1],
            vec![2],
            vec![0, 1],
            vec![1, 2],
            vec![0, 2],
        ] {
            let got = partial_trace_matrix(m, &[2, 2, 2], &traced).unwrap();
            let kept: Vec<usize> = (0..3).filter(|q| !traced.contains(q)).collect();
            let kd = 1 << kept.len();
            let mut expected = ComplexMatrix::zeros(kd, kd);
            for row in 0..8usize {
                for col in 0..8usize {
                    let bit = |x: usize, q: usize| (x >> (2 - q)) & 1;
                    if traced.iter().any(|&q| bit(row, q) != bit(col, q)) {
                        continue;
                    }
                    let r = kept.iter().fold(0, |acc, &q| acc * 2 + bit(row, q));
                    let cc = kept.iter().fold(0, |acc, &q| acc * 2 + bit(col, q));
                    expected[(r, cc)] += m[(row, col)];
                }
            }
            assert!(got.max_abs_diff(&expected) <= 1e-14, "traced {traced:?}");
        }
    }

    #[test]
    fn partial_trace_rejects_bad_dims() {
        let rho = DensityOperator::maximally_mixed(4);
        assert!(matches!(
            partial_trace(&rho, &[2, 4], &[0]),
            Err(Error::DimensionMismatch(_))
        ));
        assert!(partial_trace(&rho, &[2, 2], &[]).is_err());
        assert!(partial_trace(&rho, &[2, 2], &[0, 1]).is_err());
        assert!(partial_trace(&rho, &[2, 2], &[2]).is_err());
    }

    #[test]
    fn validate_density_cases() {
        assert!(validate_density(ComplexMatrix::identity(2).scale_real(0.5)).is_ok());
        let negative = ComplexMatrix::from_real([[1.2, 0.0], [0.0, -0.2]]);
        match validate_density(negative) {
            Err(Error::NotPositive { min_eigenvalue }) => {
                assert!((min_eigenvalue + 0.2).abs() < 1e-12)
            }
            other => panic!("unexpected {other:?}"),
        }
        match validate_density(Pauli::X.matrix()) {
            Err(Error::NotUnitTrace { trace }) => assert_eq!(trace, 0.0),
            other => panic!("unexpected {other:?}"),
        }
        let skew =
            ComplexMatrix::from_rows([[c(0.5, 0.0), c(0.0, 0.1)], [c(0.0, 0.1), c(0.5, 0.0)]]);
        assert!(matches!(
            validate_density(skew),
            Err(Error::NotHermitian { .. })
        ));
        assert!(validate_density(ComplexMatrix::identity(3).scale_real(1.0 / 3.0)).is_err());
    }

    #[test]
    fn matrix_construction_errors() {
        assert!(matches!(
            ComplexMatrix::new(2, 2, vec![ONE; 3]),
            Err(Error::DimensionMismatch(_))
        ));
        assert!(matches!(
            ComplexMatrix::new(1, 1, vec![c(f64::NAN, 0.0)]),
            Err(Error::NonFinite)
        ));
        assert!(PureState::new(vec![ONE, ONE]).is_err());
        assert!(PureState::normalized(vec![ZERO, ZERO]).is_err());
    }

    #[test]
    fn gates_are_unitary() {
        for g in [hadamard(), phase_s(), Pauli::Y.matrix()] {
            assert!(g.unitary_residual() < 1e-15);
        }
    }

    #[test]
    fn product_state_factorizes() {
        let a = random_density(11, 2);
        let b = random_density(12, 4);
        let joint = a.kron(&b);
        let back = partial_trace(&joint, &[2, 4], &[0]).unwrap();
        assert!(back.matrix().max_abs_diff(b.matrix()) <= 1e-12);
        let front = partial_trace(&joint, &[2, 2, 2], &[1, 2]).unwrap();
        assert!(front.matrix().max_abs_diff(a.matrix()) <= 1e-12);
    }
}
