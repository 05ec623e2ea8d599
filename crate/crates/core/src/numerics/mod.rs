//! Dense complex linear algebra for small Hermitian problems.

mod eigen;
mod matrix;

pub use eigen::{
    exponential_from_spectrum, herm_exponential, hermitian_eig, overlap_coefficients, ExpVariant,
    SpectralData,
};
pub use matrix::{ComplexMatrix, ComplexVector, C64};

pub(crate) use matrix::{ONE, ZERO};

/// Maximum entrywise `|A - A†|` accepted as Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum NumericsError {
    #[error("matrix is not Hermitian (max |A - A†| = {deviation:e})")]
    NotHermitian { deviation: f64 },
    #[error("Jacobi diagonalisation did not converge after {sweeps} sweeps (off-diagonal norm {off_norm:e})")]
    ConvergenceFailure { sweeps: usize, off_norm: f64 },
    #[error("initial vector has zero norm")]
    ZeroVector,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("non-finite entry")]
    NonFinite,
    #[error("overlap coefficients have not been computed")]
    MissingCoefficients,
}
