use std::ops::{Index, IndexMut, Mul};

use num_complex::Complex64;

use super::NumericsError;

pub type C64 = Complex64;

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);

/// Dense square complex matrix stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexMatrix {
    dim: usize,
    data: Vec<C64>,
}

impl ComplexMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![ZERO; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_diag(diag: &[C64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    pub fn from_real_diag(diag: &[f64]) -> Self {
        let d: Vec<C64> = diag.iter().map(|&x| C64::new(x, 0.0)).collect();
        Self::from_diag(&d)
    }

    /// Builds a matrix from row-major entries. Fails if the entry count is not a
    /// positive perfect square or any entry is non-finite.
    pub fn from_row_major(dim: usize, data: Vec<C64>) -> Result<Self, NumericsError> {
        if dim == 0 || data.len() != dim * dim {
            return Err(NumericsError::DimensionMismatch {
                expected: dim * dim,
                found: data.len(),
            });
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(NumericsError::NonFinite);
        }
        Ok(Self { dim, data })
    }

    pub fn from_rows(rows: &[Vec<C64>]) -> Result<Self, NumericsError> {
        let dim = rows.len();
        let mut data = Vec::with_capacity(dim * dim);
        for row in rows {
            if row.len() != dim {
                return Err(NumericsError::DimensionMismatch {
                    expected: dim,
                    found: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Self::from_row_major(dim, data)
    }

    pub fn from_real_rows(rows: &[&[f64]]) -> Result<Self, NumericsError> {
        let rows: Vec<Vec<C64>> = rows
            .iter()
            .map(|r| r.iter().map(|&x| C64::new(x, 0.0)).collect())
            .collect();
        Self::from_rows(&rows)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[C64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn diagonal(&self) -> Vec<C64> {
        (0..self.dim).map(|i| self[(i, i)]).collect()
    }

    pub fn adjoint(&self) -> Self {
        let mut out = Self::zeros(self.dim);
        for i in 0..self.dim {
            for j in 0..self.dim {
                out[(j, i)] = self[(i, j)].conj();
            }
        }
        out
    }

    pub fn scale(&self, s: C64) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|&z| z * s).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim, "dimension mismatch in add");
        Self {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim, "dimension mismatch in matmul");
        let n = self.dim;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self[(i, k)];
                if a == ZERO {
                    continue;
                }
                let brow = other.row(k);
                let orow = &mut out.data[i * n..(i + 1) * n];
                for (o, &b) in orow.iter_mut().zip(brow) {
                    *o += a * b;
                }
            }
        }
        out
    }

    pub fn mat_vec(&self, v: &ComplexVector) -> ComplexVector {
        assert_eq!(self.dim, v.dim(), "dimension mismatch in mat_vec");
        let entries = (0..self.dim)
            .map(|i| self.row(i).iter().zip(v.as_slice()).map(|(a, b)| a * b).sum())
            .collect();
        ComplexVector::from_vec_unchecked(entries)
    }

    /// Kronecker product `self ⊗ other`; `other` occupies the low index bits.
    pub fn kron(&self, other: &Self) -> Self {
        let (n, m) = (self.dim, other.dim);
        let mut out = Self::zeros(n * m);
        for i in 0..n {
            for j in 0..n {
                let a = self[(i, j)];
                for k in 0..m {
                    for l in 0..m {
                        out[(i * m + k, j * m + l)] = a * other[(k, l)];
                    }
                }
            }
        }
        out
    }

    /// Embeds `self` in the top-left block of a `dim`-sized identity.
    pub fn pad_with_identity(&self, dim: usize) -> Self {
        assert!(dim >= self.dim);
        let mut out = Self::identity(dim);
        for i in 0..self.dim {
            for j in 0..self.dim {
                out[(i, j)] = self[(i, j)];
            }
        }
        out
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.dim, other.dim);
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// `max |A - A†|` over all entries.
    pub fn hermitian_deviation(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.dim {
            for j in i..self.dim {
                worst = worst.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn check_hermitian(&self, tol: f64) -> Result<(), NumericsError> {
        let dev = self.hermitian_deviation();
        if dev > tol {
            Err(NumericsError::NotHermitian { deviation: dev })
        } else {
            Ok(())
        }
    }

    /// `max |U U† - I|`.
    pub fn unitarity_deviation(&self) -> f64 {
        self.matmul(&self.adjoint())
            .max_abs_diff(&Self::identity(self.dim))
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.unitarity_deviation() <= tol
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|i| self[(i, i)]).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;

    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.dim + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.dim + j]
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.matmul(rhs)
    }
}

/// Dense complex column vector.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexVector(Vec<C64>);

impl ComplexVector {
    pub fn new(entries: Vec<C64>) -> Result<Self, NumericsError> {
        if entries.is_empty() {
            return Err(NumericsError::DimensionMismatch {
                expected: 1,
                found: 0,
            });
        }
        if entries.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(NumericsError::NonFinite);
        }
        Ok(Self(entries))
    }

    pub(crate) fn from_vec_unchecked(entries: Vec<C64>) -> Self {
        Self(entries)
    }

    pub fn from_real(entries: &[f64]) -> Self {
        Self(entries.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    pub fn zeros(dim: usize) -> Self {
        Self(vec![ZERO; dim])
    }

    pub fn basis(dim: usize, index: usize) -> Self {
        let mut v = Self::zeros(dim);
        v.0[index] = ONE;
        v
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.0
    }

    pub fn as_mut_slice(&mut self) -> &mut [C64] {
        &mut self.0
    }

    pub fn into_vec(self) -> Vec<C64> {
        self.0
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `⟨self, other⟩ = Σ conj(self_i) · other_i`.
    pub fn inner(&self, other: &Self) -> C64 {
        assert_eq!(self.dim(), other.dim(), "dimension mismatch in inner");
        self.0.iter().zip(&other.0).map(|(a, b)| a.conj() * b).sum()
    }

    pub fn scale(&self, s: C64) -> Self {
        Self(self.0.iter().map(|&z| z * s).collect())
    }

    pub fn scale_real(&self, s: f64) -> Self {
        Self(self.0.iter().map(|&z| z * s).collect())
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.dim(), other.dim());
        Self(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!(self.dim(), other.dim());
        Self(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }

    pub fn normalized(&self) -> Result<Self, NumericsError> {
        let n = self.norm();
        if n == 0.0 {
            return Err(NumericsError::ZeroVector);
        }
        Ok(self.scale_real(1.0 / n))
    }

    /// Zero-pads to `dim` entries.
    pub fn padded(&self, dim: usize) -> Self {
        assert!(dim >= self.dim());
        let mut v = self.0.clone();
        v.resize(dim, ZERO);
        Self(v)
    }

    pub fn truncated(&self, dim: usize) -> Self {
        Self(self.0[..dim].to_vec())
    }

    pub fn concat(&self, other: &Self) -> Self {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        Self(v)
    }

    /// Index of the largest-magnitude entry; ties resolve to the lowest index.
    pub fn argmax_abs(&self) -> usize {
        let max = self.0.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let cutoff = max * (1.0 - 1e-12);
        self.0
            .iter()
            .position(|z| z.norm() >= cutoff)
            .unwrap_or(0)
    }

    /// Multiplies by the unit phase that makes the largest-magnitude entry
    /// real and positive.
    pub fn with_canonical_phase(&self) -> Self {
        let pivot = self.0[self.argmax_abs()];
        if pivot.norm() == 0.0 {
            return self.clone();
        }
        self.scale(pivot.conj() / pivot.norm())
    }

    /// Multiplies by the unit phase that maximises `Re⟨reference, self⟩`.
    pub fn aligned_to(&self, reference: &Self) -> Self {
        let overlap = self.inner(reference);
        if overlap.norm() == 0.0 {
            return self.clone();
        }
        self.scale(overlap / overlap.norm())
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.dim(), other.dim());
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

impl Index<usize> for ComplexVector {
    type Output = C64;

    fn index(&self, i: usize) -> &C64 {
        &self.0[i]
    }
}

impl IndexMut<usize> for ComplexVector {
    fn index_mut(&mut self, i: usize) -> &mut C64 {
        &mut self.0[i]
    }
}
