use crate::numerics::{hermitian_eig, ComplexMatrix, ComplexVector, NumericsError, C64};

use super::EngineError;

const DENSITY_TOL: f64 = 1e-10;

/// Hermitian, unit-trace, positive semidefinite operator (each within 1e-10).
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix(ComplexMatrix);

impl DensityMatrix {
    pub fn new(m: ComplexMatrix) -> Result<Self, NumericsError> {
        m.check_hermitian(DENSITY_TOL)?;
        Ok(Self(m))
    }

    pub fn pure(v: &ComplexVector) -> Result<Self, NumericsError> {
        let v = v.normalized()?;
        let n = v.dim();
        let mut m = ComplexMatrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = v[i] * v[j].conj();
            }
        }
        Ok(Self(m))
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.0
    }

    pub fn trace(&self) -> f64 {
        self.0.trace().re
    }

    pub fn purity(&self) -> f64 {
        self.0.matmul(&self.0).trace().re
    }

    /// `Tr(ρ O)` for Hermitian `O`.
    pub fn expectation(&self, observable: &ComplexMatrix) -> Result<f64, EngineError> {
        if observable.dim() != self.dim() {
            return Err(EngineError::DimensionMismatch {
                expected: self.dim(),
                found: observable.dim(),
            });
        }
        observable.check_hermitian(DENSITY_TOL)?;
        let value: C64 = self.0.matmul(observable).trace();
        debug_assert!(value.im.abs() <= 1e-10, "imaginary residue {}", value.im);
        Ok(value.re)
    }

    /// `⟨v| ρ |v⟩` for a normalised `v`.
    pub fn fidelity_with(&self, v: &ComplexVector) -> Result<f64, NumericsError> {
        let v = v.normalized()?;
        Ok(v.inner(&self.0.mat_vec(&v)).re)
    }

    /// Eigenvector of the largest eigenvalue, with that eigenvalue.
    pub fn dominant_eigenvector(&self) -> Result<(f64, ComplexVector), NumericsError> {
        let spec = hermitian_eig(&self.0, DENSITY_TOL)?;
        let last = spec.dim() - 1;
        Ok((spec.eigenvalues[last], spec.eigenvectors[last].clone()))
    }

    /// Smallest eigenvalue; nonnegative up to rounding for a valid state.
    pub fn min_eigenvalue(&self) -> Result<f64, NumericsError> {
        Ok(hermitian_eig(&self.0, DENSITY_TOL)?.eigenvalues[0])
    }
}
