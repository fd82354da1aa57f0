//! Small dense complex linear algebra.
//!
//! Everything here is sized for a two-photon, four-mode problem: 2x2 and
//! 4x4 operators and 16-dimensional states. Matrices are row-major value
//! types and every operation returns fresh data.

use std::f64::consts::TAU;
use std::ops::{Index, IndexMut, Mul};

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Tolerance used by [`Unitary::new`].
pub const UNITARITY_TOLERANCE: f64 = 1e-10;

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);

#[derive(Debug, Clone, PartialEq)]
pub struct ComplexVector {
    data: Vec<C64>,
}

impl ComplexVector {
    pub fn new(data: Vec<C64>) -> Self {
        Self { data }
    }

    pub fn zeros(dim: usize) -> Self {
        Self { data: vec![ZERO; dim] }
    }

    /// Computational basis vector `|index>` (0-based).
    pub fn basis(dim: usize, index: usize) -> Self {
        let mut v = Self::zeros(dim);
        v.data[index] = ONE;
        v
    }

    pub fn dim(&self) -> usize {
        self.data.len()
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<C64> {
        self.data
    }

    pub fn norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `<self|other>`, conjugate-linear in `self`.
    pub fn inner(&self, other: &ComplexVector) -> C64 {
        assert_eq!(self.dim(), other.dim(), "inner product of unequal dims");
        self.data.iter().zip(&other.data).map(|(a, b)| a.conj() * b).sum()
    }

    pub fn scale(&self, factor: C64) -> ComplexVector {
        Self::new(self.data.iter().map(|z| z * factor).collect())
    }

    pub fn normalized(&self) -> ComplexVector {
        let n = self.norm();
        self.scale(C64::new(1.0 / n, 0.0))
    }
}

impl Index<usize> for ComplexVector {
    type Output = C64;
    fn index(&self, i: usize) -> &C64 {
        &self.data[i]
    }
}

impl IndexMut<usize> for ComplexVector {
    fn index_mut(&mut self, i: usize) -> &mut C64 {
        &mut self.data[i]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![ZERO; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_diagonal(diag: &[C64]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    /// Builds a matrix from row-major entries.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch { expected: rows * cols, actual: data.len() });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows<const N: usize>(rows: [[C64; N]; N]) -> Self {
        let data = rows.iter().flat_map(|r| r.iter().copied()).collect();
        Self { rows: N, cols: N, data }
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

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn adjoint(&self) -> ComplexMatrix {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)].conj();
            }
        }
        out
    }

    pub fn transpose(&self) -> ComplexMatrix {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)];
            }
        }
        out
    }

    pub fn matmul(&self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.cols, rhs.rows, "matmul shape mismatch");
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == ZERO {
                    continue;
                }
                for j in 0..rhs.cols {
                    out.data[i * rhs.cols + j] += a * rhs.data[k * rhs.cols + j];
                }
            }
        }
        out
    }

    pub fn apply(&self, v: &ComplexVector) -> ComplexVector {
        assert_eq!(self.cols, v.dim(), "matrix-vector shape mismatch");
        let data = (0..self.rows).map(|i| (0..self.cols).map(|j| self[(i, j)] * v[j]).sum()).collect();
        ComplexVector::new(data)
    }

    pub fn scale(&self, factor: C64) -> ComplexMatrix {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|z| z * factor).collect() }
    }

    pub fn sub(&self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect() }
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest entrywise modulus of `self - rhs`.
    pub fn max_abs_diff(&self, rhs: &ComplexMatrix) -> f64 {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        self.data.iter().zip(&rhs.data).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    /// `max |M^dagger M - I|` entrywise.
    pub fn unitarity_deviation(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        self.adjoint().matmul(self).max_abs_diff(&Self::identity(self.rows))
    }

    /// Left-multiplies rows `(upper, upper + 1)` by a 2x2 block in place.
    pub(crate) fn rotate_rows(&mut self, block: &[[C64; 2]; 2], upper: usize) {
        let lower = upper + 1;
        for j in 0..self.cols {
            let a = self[(upper, j)];
            let b = self[(lower, j)];
            self[(upper, j)] = block[0][0] * a + block[0][1] * b;
            self[(lower, j)] = block[1][0] * a + block[1][1] * b;
        }
    }

    /// Right-multiplies columns `(left, left + 1)` by a 2x2 block in place.
    pub(crate) fn rotate_cols(&mut self, block: &[[C64; 2]; 2], left: usize) {
        let right = left + 1;
        for i in 0..self.rows {
            let a = self[(i, left)];
            let b = self[(i, right)];
            self[(i, left)] = a * block[0][0] + b * block[1][0];
            self[(i, right)] = a * block[0][1] + b * block[1][1];
        }
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.matmul(rhs)
    }
}

/// A square matrix verified to satisfy `U^dagger U = I` on construction.
#[derive(Debug, Clone, PartialEq)]
pub struct Unitary(ComplexMatrix);

impl Unitary {
    pub fn new(m: ComplexMatrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::NotSquare { rows: m.rows(), cols: m.cols() });
        }
        let deviation = m.unitarity_deviation();
        if deviation.is_nan() || deviation > UNITARITY_TOLERANCE {
            return Err(Error::NotUnitary { deviation });
        }
        Ok(Self(m))
    }

    /// Wraps a matrix that is unitary by construction (products of
    /// elementary components). Checked in debug builds only.
    pub(crate) fn from_trusted(m: ComplexMatrix) -> Self {
        debug_assert!(m.unitarity_deviation() < 1e-9, "trusted matrix is not unitary");
        Self(m)
    }

    pub fn identity(n: usize) -> Self {
        Self(ComplexMatrix::identity(n))
    }

    pub fn dim(&self) -> usize {
        self.0.rows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.0
    }

    pub fn adjoint(&self) -> Unitary {
        Self(self.0.adjoint())
    }

    pub fn compose(&self, rhs: &Unitary) -> Unitary {
        Self(self.0.matmul(&rhs.0))
    }

    pub fn apply(&self, v: &ComplexVector) -> ComplexVector {
        self.0.apply(v)
    }
}

impl Index<(usize, usize)> for Unitary {
    type Output = C64;
    fn index(&self, idx: (usize, usize)) -> &C64 {
        &self.0[idx]
    }
}

/// Kronecker product with block ordering `a ⊗ b`: entry
/// `(i * b.rows + k, j * b.cols + l)` is `a[i, j] * b[k, l]`.
pub fn tensor_product(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let rows = a.rows() * b.rows();
    let cols = a.cols() * b.cols();
    let mut out = ComplexMatrix::zeros(rows, cols);
    for i in 0..a.rows() {
        for j in 0..a.cols() {
            let aij = a[(i, j)];
            for k in 0..b.rows() {
                for l in 0..b.cols() {
                    out[(i * b.rows() + k, j * b.cols() + l)] = aij * b[(k, l)];
                }
            }
        }
    }
    out
}

/// Draws an `n x n` unitary from the Haar measure.
///
/// A complex Ginibre matrix is orthonormalized column by column
/// (Gram-Schmidt, i.e. QR with a real positive diagonal in R), which is
/// exactly the phase-corrected QR construction.
pub fn haar_random_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Unitary {
    assert!(n >= 1, "unitary dimension must be positive");
    let mut cols: Vec<Vec<C64>> = (0..n)
        .map(|_| {
            (0..n)
                .map(|_| {
                    let re: f64 = rng.sample(StandardNormal);
                    let im: f64 = rng.sample(StandardNormal);
                    C64::new(re, im)
                })
                .collect()
        })
        .collect();

    for j in 0..n {
        // Two passes of modified Gram-Schmidt keep orthogonality at machine
        // precision.
        for _ in 0..2 {
            for k in 0..j {
                let proj: C64 = cols[k].iter().zip(&cols[j]).map(|(q, v)| q.conj() * v).sum();
                let qk = cols[k].clone();
                for (v, q) in cols[j].iter_mut().zip(&qk) {
                    *v -= proj * q;
                }
            }
        }
        let norm = cols[j].iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        for v in cols[j].iter_mut() {
            *v /= norm;
        }
    }

    let mut m = ComplexMatrix::zeros(n, n);
    for (j, col) in cols.iter().enumerate() {
        for (i, &z) in col.iter().enumerate() {
            m[(i, j)] = z;
        }
    }
    Unitary::from_trusted(m)
}

/// `min_phi |a - e^{i phi} b|_F` over unit-modulus phases.
pub fn distance_up_to_global_phase(a: &Unitary, b: &Unitary) -> f64 {
    let (a, b) = (a.matrix(), b.matrix());
    assert_eq!(a.rows(), b.rows(), "distance between unitaries of unequal dims");
    let overlap = b.adjoint().matmul(a).trace();
    if overlap.norm() > 1e-14 {
        let phase = overlap / overlap.norm();
        return a.sub(&b.scale(phase)).frobenius_norm();
    }
    // |a - e^{i phi} b|_F^2 = 2n - 2 Re(e^{-i phi} tr(b^dagger a)) is flat in
    // phi when the trace vanishes; scan anyway so the result never relies on
    // that identity.
    const STEPS: usize = 3600;
    (0..STEPS)
        .map(|k| {
            let phase = C64::from_polar(1.0, TAU * k as f64 / STEPS as f64);
            a.sub(&b.scale(phase)).frobenius_norm()
        })
        .fold(f64::INFINITY, f64::min)
}
