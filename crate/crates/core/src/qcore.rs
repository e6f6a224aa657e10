//! Dense complex linear algebra for one- to three-qubit operators.
//!
//! Qubits are ordered Alice ⊗ Bob ⊗ Charlie with big-endian basis labels, so
//! the computational basis state |abc⟩ sits at index `4a + 2b + c`.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Sub};

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Structural tolerance for Hermiticity, unit trace and algebraic identities.
pub const STRUCTURAL_TOL: f64 = 1e-12;
/// Slack allowed below zero for the smallest eigenvalue of a state.
pub const PSD_TOL: f64 = 1e-10;

pub const MAX_QUBITS: usize = 3;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// The three spatially separated parties, in tensor-slot order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Party {
    Alice,
    Bob,
    Charlie,
}

impl Party {
    pub const ALL: [Party; 3] = [Party::Alice, Party::Bob, Party::Charlie];

    /// Tensor slot of this party (0 = most significant qubit).
    pub fn qubit(self) -> usize {
        match self {
            Party::Alice => 0,
            Party::Bob => 1,
            Party::Charlie => 2,
        }
    }
}

impl fmt::Display for Party {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Party::Alice => "A",
            Party::Bob => "B",
            Party::Charlie => "C",
        };
        f.write_str(name)
    }
}

/// Row-major dense complex matrix.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows {
            write!(f, "  ")?;
            for c in 0..self.cols {
                let z = self[(r, c)];
                write!(f, "{:+.6}{:+.6}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
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

    pub fn from_vec(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if rows == 0 || cols == 0 || data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{} entries cannot fill a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = C64::new(d, 0.0);
        }
        m
    }

    /// |ψ⟩⟨ψ| for an (unnormalized) column vector.
    pub fn outer(ket: &[C64]) -> Self {
        Self::from_fn(ket.len(), ket.len(), |r, c| ket[r] * ket[c].conj())
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

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self[(c, r)].conj())
    }

    pub fn scale(&self, factor: C64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * factor).collect(),
        }
    }

    pub fn scale_real(&self, factor: f64) -> Self {
        self.scale(C64::new(factor, 0.0))
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    /// Checked matrix product.
    pub fn matmul(&self, rhs: &Self) -> Result<Self> {
        if self.cols != rhs.rows {
            return Err(Error::DimensionMismatch(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let mut out = Self::zeros(self.rows, rhs.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(r, k)];
                if a == ZERO {
                    continue;
                }
                for c in 0..rhs.cols {
                    out.data[r * rhs.cols + c] += a * rhs[(k, c)];
                }
            }
        }
        Ok(out)
    }

    /// Largest entrywise modulus of `self - other`; infinite when shapes differ.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        if self.rows != other.rows || self.cols != other.cols {
            return f64::INFINITY;
        }
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// max |m(i,j) − conj(m(j,i))|.
    pub fn hermiticity_defect(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let mut worst = 0.0f64;
        for r in 0..self.rows {
            for c in r..self.cols {
                worst = worst.max((self[(r, c)] - self[(c, r)].conj()).norm());
            }
        }
        worst
    }

    /// Eigenvalues of a Hermitian matrix, ascending. The strictly-lower
    /// triangle is ignored.
    pub fn hermitian_eigenvalues(&self) -> Result<Vec<f64>> {
        if !self.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "eigenvalues need a square matrix, got {}x{}",
                self.rows, self.cols
            )));
        }
        let n = self.rows;
        let m = DMatrix::from_fn(n, n, |r, c| self[(r, c)]);
        let mut values: Vec<f64> = SymmetricEigen::new(m).eigenvalues.iter().copied().collect();
        values.sort_by(f64::total_cmp);
        Ok(values)
    }

    /// Number of qubits when the matrix is a square operator of dimension 2, 4 or 8.
    pub fn qubit_count(&self) -> Option<usize> {
        if !self.is_square() {
            return None;
        }
        match self.rows {
            2 => Some(1),
            4 => Some(2),
            8 => Some(3),
            _ => None,
        }
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;

    fn index(&self, (r, c): (usize, usize)) -> &C64 {
        &self.data[r * self.cols + c]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut C64 {
        &mut self.data[r * self.cols + c]
    }
}

/// Panics on shape mismatch; use [`ComplexMatrix::matmul`] for a checked product.
impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.matmul(rhs).expect("matrix product shape mismatch")
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "matrix sum shape mismatch");
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "matrix difference shape mismatch");
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    ComplexMatrix::from_fn(a.rows * b.rows, a.cols * b.cols, |r, c| {
        a[(r / b.rows, c / b.cols)] * b[(r % b.rows, c % b.cols)]
    })
}

/// Tr[a·b] as Σ a(i,j)·b(j,i), without forming the product.
pub fn trace_product(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<C64> {
    if !a.is_square() || !b.is_square() || a.rows != b.rows {
        return Err(Error::DimensionMismatch(format!(
            "trace_product needs equal square matrices, got {}x{} and {}x{}",
            a.rows, a.cols, b.rows, b.cols
        )));
    }
    let n = a.rows;
    let mut acc = ZERO;
    for i in 0..n {
        for j in 0..n {
            acc += a[(i, j)] * b[(j, i)];
        }
    }
    Ok(acc)
}

/// `(I ⊗ … ⊗ K ⊗ … ⊗ I) · m · (I ⊗ … ⊗ K ⊗ … ⊗ I)†` with the 2×2 `k` acting on
/// tensor slot `qubit` of the square operator `m`.
pub fn conjugate_local(m: &ComplexMatrix, qubit: usize, k: &ComplexMatrix) -> Result<ComplexMatrix> {
    let left = apply_local_left(m, qubit, k)?;
    let n = left_qubits(m)?;
    let shift = n - 1 - qubit;
    let dim = m.rows;
    let mut out = ComplexMatrix::zeros(dim, dim);
    for c in 0..dim {
        let bit = (c >> shift) & 1;
        let c0 = c & !(1 << shift);
        let c1 = c0 | (1 << shift);
        let k0 = k[(bit, 0)].conj();
        let k1 = k[(bit, 1)].conj();
        for r in 0..dim {
            out.data[r * dim + c] = left.data[r * dim + c0] * k0 + left.data[r * dim + c1] * k1;
        }
    }
    Ok(out)
}

/// `(I ⊗ … ⊗ K ⊗ … ⊗ I) · m` with `k` on tensor slot `qubit`.
pub fn apply_local_left(m: &ComplexMatrix, qubit: usize, k: &ComplexMatrix) -> Result<ComplexMatrix> {
    let n = left_qubits(m)?;
    if qubit >= n {
        return Err(Error::DimensionMismatch(format!(
            "qubit {qubit} out of range for a {n}-qubit operator"
        )));
    }
    if k.rows != 2 || k.cols != 2 {
        return Err(Error::DimensionMismatch(format!(
            "local operator must be 2x2, got {}x{}",
            k.rows, k.cols
        )));
    }
    let shift = n - 1 - qubit;
    let dim = m.rows;
    let cols = m.cols;
    let mut out = ComplexMatrix::zeros(dim, cols);
    for r in 0..dim {
        let bit = (r >> shift) & 1;
        let r0 = r & !(1 << shift);
        let r1 = r0 | (1 << shift);
        let k0 = k[(bit, 0)];
        let k1 = k[(bit, 1)];
        for c in 0..cols {
            out.data[r * cols + c] = k0 * m.data[r0 * cols + c] + k1 * m.data[r1 * cols + c];
        }
    }
    Ok(out)
}

fn left_qubits(m: &ComplexMatrix) -> Result<usize> {
    match m.rows {
        2 => Ok(1),
        4 => Ok(2),
        8 => Ok(3),
        d => Err(Error::DimensionMismatch(format!(
            "operator dimension {d} is not 2, 4 or 8"
        ))),
    }
}

/// Partial trace of a square 1–3 qubit operator, keeping the listed parties
/// (in tensor order, duplicates ignored).
pub fn partial_trace_operator(m: &ComplexMatrix, keep: &[Party]) -> Result<ComplexMatrix> {
    if keep.is_empty() {
        return Err(Error::NoSubsystemRetained);
    }
    let n = m
        .qubit_count()
        .ok_or_else(|| Error::DimensionMismatch(format!("{}x{} is not a qubit operator", m.rows, m.cols)))?;
    let mut kept: Vec<usize> = keep.iter().map(|p| p.qubit()).collect();
    kept.sort_unstable();
    kept.dedup();
    if let Some(&q) = kept.iter().find(|&&q| q >= n) {
        return Err(Error::DimensionMismatch(format!(
            "cannot keep qubit {q} of a {n}-qubit operator"
        )));
    }
    let keep_mask: usize = kept.iter().map(|&q| 1 << (n - 1 - q)).sum();
    let trace_mask = ((1 << n) - 1) & !keep_mask;
    let compress = |idx: usize| -> usize {
        kept.iter()
            .fold(0, |acc, &q| (acc << 1) | ((idx >> (n - 1 - q)) & 1))
    };
    let out_dim = 1 << kept.len();
    let mut out = ComplexMatrix::zeros(out_dim, out_dim);
    let dim = m.rows;
    for r in 0..dim {
        for c in 0..dim {
            if r & trace_mask == c & trace_mask {
                out[(compress(r), compress(c))] += m[(r, c)];
            }
        }
    }
    Ok(out)
}

/// A validated quantum state on one to three qubits.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    matrix: ComplexMatrix,
}

impl DensityMatrix {
    /// Validates Hermiticity, unit trace and positivity.
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        let state = Self { matrix };
        state.validate()?;
        Ok(state)
    }

    /// Skips validation; for internal paths whose output is valid by construction.
    pub(crate) fn from_matrix_unchecked(matrix: ComplexMatrix) -> Self {
        Self { matrix }
    }

    /// Pure state |ψ⟩⟨ψ|; the ket is normalized first.
    pub fn pure(ket: &[C64]) -> Result<Self> {
        let norm = ket.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::InvalidState("state vector has zero norm".into()));
        }
        let normalized: Vec<C64> = ket.iter().map(|z| z / norm).collect();
        Self::new(ComplexMatrix::outer(&normalized))
    }

    pub fn maximally_mixed(qubits: usize) -> Self {
        let dim = 1 << qubits;
        Self {
            matrix: ComplexMatrix::identity(dim).scale_real(1.0 / dim as f64),
        }
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn qubits(&self) -> usize {
        self.matrix.qubit_count().unwrap_or(0)
    }

    /// Tr[ρ²].
    pub fn purity(&self) -> f64 {
        trace_product(&self.matrix, &self.matrix)
            .map(|z| z.re)
            .unwrap_or(f64::NAN)
    }

    /// Checks the three state invariants at [`STRUCTURAL_TOL`] / [`PSD_TOL`].
    pub fn validate(&self) -> Result<()> {
        let m = &self.matrix;
        if m.qubit_count().is_none() {
            return Err(Error::InvalidState(format!(
                "{}x{} is not a 1-3 qubit operator",
                m.rows(),
                m.cols()
            )));
        }
        if m.data().iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidState("non-finite entry".into()));
        }
        let herm = m.hermiticity_defect();
        if herm > STRUCTURAL_TOL {
            return Err(Error::InvalidState(format!("not Hermitian (defect {herm:.3e})")));
        }
        let tr = m.trace();
        if (tr - ONE).norm() > STRUCTURAL_TOL {
            return Err(Error::InvalidState(format!("trace is {:.15} not 1", tr.re)));
        }
        let smallest = m.hermitian_eigenvalues()?[0];
        if smallest < -PSD_TOL {
            return Err(Error::InvalidState(format!(
                "not positive semidefinite (eigenvalue {smallest:.3e})"
            )));
        }
        Ok(())
    }

    /// Reduced state on the kept parties.
    pub fn partial_trace(&self, keep: &[Party]) -> Result<DensityMatrix> {
        partial_trace(self, keep)
    }
}

/// Reduced state of a three-qubit density matrix on the kept parties.
pub fn partial_trace(rho: &DensityMatrix, keep: &[Party]) -> Result<DensityMatrix> {
    if rho.dim() != 8 {
        return Err(Error::DimensionMismatch(format!(
            "partial_trace expects a three-qubit state, got dimension {}",
            rho.dim()
        )));
    }
    partial_trace_operator(rho.matrix(), keep).map(DensityMatrix::from_matrix_unchecked)
}

/// Standard single-qubit operators.
pub mod pauli {
    use super::{ComplexMatrix, C64};

    pub fn identity() -> ComplexMatrix {
        ComplexMatrix::identity(2)
    }

    pub fn x() -> ComplexMatrix {
        ComplexMatrix::from_fn(2, 2, |r, c| if r != c { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) })
    }

    pub fn y() -> ComplexMatrix {
        ComplexMatrix::from_fn(2, 2, |r, c| match (r, c) {
            (0, 1) => C64::new(0.0, -1.0),
            (1, 0) => C64::new(0.0, 1.0),
            _ => C64::new(0.0, 0.0),
        })
    }

    pub fn z() -> ComplexMatrix {
        ComplexMatrix::from_real_diagonal(&[1.0, -1.0])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn kron_of_identities_is_identity() {
        let i4 = kron(&pauli::identity(), &pauli::identity());
        assert_eq!(i4, ComplexMatrix::identity(4));
    }

    #[test]
    fn kron_of_projectors() {
        let p = ComplexMatrix::from_real_diagonal(&[1.0, 0.0]);
        assert_eq!(kron(&p, &p), ComplexMatrix::from_real_diagonal(&[1.0, 0.0, 0.0, 0.0]));
    }

    #[test]
    fn zz_stabilizes_bell_state() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let zz = kron(&pauli::z(), &pauli::z());
        let bell = [c(s), c(0.0), c(0.0), c(s)];
        // explicit 4x4 matrix-vector product
        let image: Vec<C64> = (0..4)
            .map(|r| (0..4).map(|k| zz[(r, k)] * bell[k]).sum())
            .collect();
        for (a, b) in image.iter().zip(&bell) {
            assert!((a - b).norm() < 1e-15);
        }
    }

    #[test]
    fn empty_keep_is_rejected() {
        let rho = DensityMatrix::maximally_mixed(3);
        let err = partial_trace(&rho, &[]).unwrap_err();
        assert_eq!(err, Error::NoSubsystemRetained);
        assert_eq!(err.to_string(), "no subsystem retained");
    }

    #[test]
    fn partial_trace_requires_three_qubits() {
        let rho = DensityMatrix::maximally_mixed(2);
        assert!(matches!(
            partial_trace(&rho, &[Party::Alice]),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn partial_trace_keep_order_is_canonical() {
        let a = ComplexMatrix::from_real_diagonal(&[0.25, 0.75]);
        let b = ComplexMatrix::from_real_diagonal(&[1.0, 0.0]);
        let ab = kron(&kron(&a, &b), &pauli::identity().scale_real(0.5));
        let fwd = partial_trace_operator(&ab, &[Party::Alice, Party::Bob]).unwrap();
        let rev = partial_trace_operator(&ab, &[Party::Bob, Party::Alice, Party::Bob]).unwrap();
        assert_eq!(fwd, rev);
        assert!(fwd.max_abs_diff(&kron(&a, &b)) < 1e-15);
    }

    #[test]
    fn trace_product_dimension_mismatch() {
        let a = ComplexMatrix::identity(2);
        let b = ComplexMatrix::identity(4);
        assert!(matches!(trace_product(&a, &b), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn trace_product_of_projector_with_itself() {
        let p = ComplexMatrix::from_fn(2, 2, |_, _| c(0.5));
        assert!((trace_product(&p, &p).unwrap() - c(1.0)).norm() < 1e-15);
    }

    #[test]
    fn conjugate_local_matches_explicit_kron() {
        let k = ComplexMatrix::from_vec(2, 2, vec![c(0.3), C64::new(0.1, -0.7), C64::new(0.2, 0.4), c(-1.1)])
            .unwrap();
        let m = ComplexMatrix::from_fn(8, 8, |r, col| C64::new((r * 3 + col) as f64 * 0.1, (r as f64) - (col as f64)));
        let i2 = pauli::identity();
        let slots = [
            kron(&kron(&k, &i2), &i2),
            kron(&kron(&i2, &k), &i2),
            kron(&kron(&i2, &i2), &k),
        ];
        for (q, full) in slots.iter().enumerate() {
            let explicit = &(full * &m) * &full.adjoint();
            let fast = conjugate_local(&m, q, &k).unwrap();
            assert!(fast.max_abs_diff(&explicit) < 1e-12, "slot {q}");
        }
    }

    #[test]
    fn validate_rejects_bad_states() {
        let not_herm = ComplexMatrix::from_vec(2, 2, vec![c(0.5), c(0.1), c(0.0), c(0.5)]).unwrap();
        assert!(DensityMatrix::new(not_herm).is_err());
        let bad_trace = ComplexMatrix::from_real_diagonal(&[0.5, 0.6]);
        assert!(DensityMatrix::new(bad_trace).is_err());
        let negative = ComplexMatrix::from_real_diagonal(&[1.5, -0.5]);
        let err = DensityMatrix::new(negative).unwrap_err();
        assert!(err.to_string().contains("positive semidefinite"));
    }
}
