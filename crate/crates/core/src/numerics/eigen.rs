use super::matrix::{ComplexMatrix, ComplexVector, C64, ZERO};
use super::NumericsError;

const MAX_SWEEPS: usize = 64;

/// Eigendecomposition of a Hermitian matrix, optionally with the overlap
/// coefficients of a normalised initial vector.
#[derive(Clone, Debug)]
pub struct SpectralData {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// Orthonormal; `eigenvectors[i]` belongs to `eigenvalues[i]`.
    pub eigenvectors: Vec<ComplexVector>,
    /// `c_i = ⟨v_i, x0⟩ / ‖x0‖`, filled by [`overlap_coefficients`].
    pub coefficients: Option<Vec<C64>>,
    /// Spectral norm, `max_i |a_i|`.
    pub norm_a: f64,
    /// `a_N / a_1`, only defined for a strictly positive spectrum.
    pub kappa: Option<f64>,
}

impl SpectralData {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.eigenvalues[self.dim() - 1]
    }

    /// `V f(D) V†`.
    pub fn apply_function<F>(&self, f: F) -> ComplexMatrix
    where
        F: Fn(f64) -> C64,
    {
        let n = self.dim();
        let mut out = ComplexMatrix::zeros(n);
        for (a, v) in self.eigenvalues.iter().zip(&self.eigenvectors) {
            let fa = f(*a);
            for i in 0..n {
                let vi = v[i] * fa;
                if vi == ZERO {
                    continue;
                }
                for j in 0..n {
                    out[(i, j)] += vi * v[j].conj();
                }
            }
        }
        out
    }

    /// `V D V†`.
    pub fn reconstruct(&self) -> ComplexMatrix {
        self.apply_function(|a| C64::new(a, 0.0))
    }

    pub fn coefficients(&self) -> Result<&[C64], NumericsError> {
        self.coefficients
            .as_deref()
            .ok_or(NumericsError::MissingCoefficients)
    }
}

/// Diagonalises a Hermitian matrix with cyclic complex Jacobi rotations.
///
/// Eigenvalues come back ascending; each eigenvector is phased so that its
/// largest-magnitude component is real and positive. Within a degenerate
/// eigenspace the basis is whatever the sweep converged to.
pub fn hermitian_eig(a: &ComplexMatrix, tol: f64) -> Result<SpectralData, NumericsError> {
    a.check_hermitian(tol)?;
    if !a.is_finite() {
        return Err(NumericsError::NonFinite);
    }
    let n = a.dim();
    // Symmetrise so the rotations act on an exactly Hermitian matrix.
    let mut m = a.add(&a.adjoint()).scale(C64::new(0.5, 0.0));
    let mut v = ComplexMatrix::identity(n);

    let frob = m.as_slice().iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let target = 4.0 * f64::EPSILON * frob;

    let mut converged = n == 1 || frob == 0.0;
    let mut off = off_diagonal_norm(&m);
    for _ in 0..MAX_SWEEPS {
        if converged || off <= target {
            converged = true;
            break;
        }
        for p in 0..n - 1 {
            for q in p + 1..n {
                rotate(&mut m, &mut v, p, q);
            }
        }
        off = off_diagonal_norm(&m);
        if off <= target {
            converged = true;
        }
    }
    if !converged {
        return Err(NumericsError::ConvergenceFailure {
            sweeps: MAX_SWEEPS,
            off_norm: off,
        });
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(i, i)].re.total_cmp(&m[(j, j)].re));
    let eigenvalues: Vec<f64> = order.iter().map(|&i| m[(i, i)].re).collect();
    let eigenvectors: Vec<ComplexVector> = order
        .iter()
        .map(|&j| {
            let col: Vec<C64> = (0..n).map(|i| v[(i, j)]).collect();
            ComplexVector::from_vec_unchecked(col).with_canonical_phase()
        })
        .collect();
    let norm_a = eigenvalues.iter().map(|a| a.abs()).fold(0.0, f64::max);
    let kappa = (eigenvalues[0] > 0.0).then(|| eigenvalues[n - 1] / eigenvalues[0]);

    Ok(SpectralData {
        eigenvalues,
        eigenvectors,
        coefficients: None,
        norm_a,
        kappa,
    })
}

fn off_diagonal_norm(m: &ComplexMatrix) -> f64 {
    let n = m.dim();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += m[(i, j)].norm_sqr();
            }
        }
    }
    s.sqrt()
}

/// One Jacobi step zeroing `m[p][q]`: a phase rotation making the pivot real
/// followed by a real Givens rotation. `m ← J† m J`, `v ← v J`.
fn rotate(m: &mut ComplexMatrix, v: &mut ComplexMatrix, p: usize, q: usize) {
    let apq = m[(p, q)];
    let g = apq.norm();
    if g < f64::MIN_POSITIVE {
        return;
    }
    let phase = apq / g;
    let app = m[(p, p)].re;
    let aqq = m[(q, q)].re;
    let theta = (aqq - app) / (2.0 * g);
    let t = if theta.abs() > 1e150 {
        0.5 / theta
    } else {
        theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
    };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;

    let j_pp = C64::new(c, 0.0);
    let j_pq = C64::new(s, 0.0);
    let j_qp = -phase.conj() * s;
    let j_qq = phase.conj() * c;

    let n = m.dim();
    for k in 0..n {
        let (akp, akq) = (m[(k, p)], m[(k, q)]);
        m[(k, p)] = akp * j_pp + akq * j_qp;
        m[(k, q)] = akp * j_pq + akq * j_qq;
    }
    for k in 0..n {
        let (apk, aqk) = (m[(p, k)], m[(q, k)]);
        m[(p, k)] = j_pp.conj() * apk + j_qp.conj() * aqk;
        m[(q, k)] = j_pq.conj() * apk + j_qq.conj() * aqk;
    }
    m[(p, q)] = ZERO;
    m[(q, p)] = ZERO;
    m[(p, p)] = C64::new(m[(p, p)].re, 0.0);
    m[(q, q)] = C64::new(m[(q, q)].re, 0.0);

    for k in 0..n {
        let (vkp, vkq) = (v[(k, p)], v[(k, q)]);
        v[(k, p)] = vkp * j_pp + vkq * j_qp;
        v[(k, q)] = vkp * j_pq + vkq * j_qq;
    }
}

/// Fills `c_i = ⟨v_i, x0⟩ / ‖x0‖` so that `Σ c_i v_i = x0 / ‖x0‖`.
pub fn overlap_coefficients(
    spec: &SpectralData,
    x0: &ComplexVector,
) -> Result<SpectralData, NumericsError> {
    if x0.dim() != spec.dim() {
        return Err(NumericsError::DimensionMismatch {
            expected: spec.dim(),
            found: x0.dim(),
        });
    }
    let norm = x0.norm();
    if norm == 0.0 {
        return Err(NumericsError::ZeroVector);
    }
    let coefficients = spec
        .eigenvectors
        .iter()
        .map(|v| v.inner(x0) / norm)
        .collect();
    Ok(SpectralData {
        coefficients: Some(coefficients),
        ..spec.clone()
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExpVariant {
    /// `e^{A s}`
    Real,
    /// `e^{-i A s}`
    Unitary,
}

pub fn herm_exponential(
    a: &ComplexMatrix,
    s: f64,
    variant: ExpVariant,
    tol: f64,
) -> Result<ComplexMatrix, NumericsError> {
    let spec = hermitian_eig(a, tol)?;
    Ok(exponential_from_spectrum(&spec, s, variant))
}

pub fn exponential_from_spectrum(spec: &SpectralData, s: f64, variant: ExpVariant) -> ComplexMatrix {
    match variant {
        ExpVariant::Real => spec.apply_function(|a| C64::new((a * s).exp(), 0.0)),
        ExpVariant::Unitary => spec.apply_function(|a| C64::from_polar(1.0, -a * s)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::HERMITIAN_TOL;
    use crate::oracle::instances::{random_hermitian, random_vector};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn projector(v: &ComplexVector) -> ComplexMatrix {
        let n = v.dim();
        let mut p = ComplexMatrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                p[(i, j)] = v[i] * v[j].conj();
            }
        }
        p
    }

    /// Scaling-and-squaring Taylor evaluation of `e^{A s}`.
    fn taylor_expm(a: &ComplexMatrix, s: f64) -> ComplexMatrix {
        let n = a.dim();
        let norm: f64 = (0..n)
            .map(|i| a.row(i).iter().map(|z| z.norm()).sum::<f64>())
            .fold(0.0, f64::max)
            * s.abs();
        let squarings = if norm > 0.5 { (norm / 0.5).log2().ceil() as u32 } else { 0 };
        let scaled = a.scale(C64::new(s / f64::powi(2.0, squarings as i32), 0.0));
        let mut sum = ComplexMatrix::identity(n);
        let mut term = ComplexMatrix::identity(n);
        for k in 1..40 {
            term = term.matmul(&scaled).scale(C64::new(1.0 / k as f64, 0.0));
            sum = sum.add(&term);
        }
        for _ in 0..squarings {
            sum = sum.matmul(&sum);
        }
        sum
    }

    #[test]
    fn diagonal_input() {
        let a = ComplexMatrix::from_real_diag(&[2.0, 5.0]);
        let s = hermitian_eig(&a, HERMITIAN_TOL).unwrap();
        assert_eq!(s.eigenvalues, vec![2.0, 5.0]);
        assert_eq!(s.eigenvectors[0], ComplexVector::basis(2, 0));
        assert_eq!(s.eigenvectors[1], ComplexVector::basis(2, 1));
        assert_eq!(s.norm_a, 5.0);
        assert_eq!(s.kappa, Some(2.5));
    }

    #[test]
    fn pauli_x() {
        let a = ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]).unwrap();
        let s = hermitian_eig(&a, HERMITIAN_TOL).unwrap();
        assert!((s.eigenvalues[0] + 1.0).abs() < 1e-15);
        assert!((s.eigenvalues[1] - 1.0).abs() < 1e-15);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let minus = ComplexVector::from_real(&[h, -h]);
        let plus = ComplexVector::from_real(&[h, h]);
        assert!((s.eigenvectors[0].inner(&minus).norm() - 1.0).abs() < 1e-14);
        assert!((s.eigenvectors[1].inner(&plus).norm() - 1.0).abs() < 1e-14);
        assert_eq!(s.kappa, None);
    }

    #[test]
    fn random_8x8_reconstructs() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let a = random_hermitian(&mut rng, 8, 1.0);
        let s = hermitian_eig(&a, HERMITIAN_TOL).unwrap();
        assert!(s.reconstruct().max_abs_diff(&a) < 1e-10);
        for w in s.eigenvalues.windows(2) {
            assert!(w[0] <= w[1]);
        }
        for i in 0..8 {
            for j in 0..8 {
                let g = s.eigenvectors[i].inner(&s.eigenvectors[j]);
                let delta = if i == j { 1.0 } else { 0.0 };
                assert!((g - C64::new(delta, 0.0)).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn degenerate_spectrum_projectors() {
        // diag(1,1,3) rotated: the eigenspace of 1 is only defined up to a basis.
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let u = crate::oracle::instances::random_unitary(&mut rng, 3);
        let d = ComplexMatrix::from_real_diag(&[1.0, 1.0, 3.0]);
        let a = u.matmul(&d).matmul(&u.adjoint());
        let s = hermitian_eig(&a, HERMITIAN_TOL).unwrap();
        let p_found = projector(&s.eigenvectors[0]).add(&projector(&s.eigenvectors[1]));
        let col = |j: usize| {
            ComplexVector::from_vec_unchecked((0..3).map(|i| u[(i, j)]).collect())
        };
        let p_true = projector(&col(0)).add(&projector(&col(1)));
        assert!(p_found.max_abs_diff(&p_true) < 1e-10);
    }

    #[test]
    fn rejects_non_hermitian() {
        let a = ComplexMatrix::from_real_rows(&[&[1.0, 2.0], &[0.0, 1.0]]).unwrap();
        assert!(matches!(
            hermitian_eig(&a, HERMITIAN_TOL),
            Err(NumericsError::NotHermitian { .. })
        ));
    }

    #[test]
    fn overlap_of_eigenvector_is_delta() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = random_hermitian(&mut rng, 4, 1.0);
        let s = hermitian_eig(&a, HERMITIAN_TOL).unwrap();
        let with_c = overlap_coefficients(&s, &s.eigenvectors[2]).unwrap();
        let c = with_c.coefficients().unwrap();
        for (i, ci) in c.iter().enumerate() {
            let expect = if i == 2 { 1.0 } else { 0.0 };
            assert!((ci - C64::new(expect, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn overlap_of_symmetric_pair() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let a = random_hermitian(&mut rng, 3, 1.0);
        let s = hermitian_eig(&a, HERMITIAN_TOL).unwrap();
        let x0 = s.eigenvectors[0]
            .add(&s.eigenvectors[1])
            .scale_real(std::f64::consts::FRAC_1_SQRT_2);
        let c = overlap_coefficients(&s, &x0).unwrap().coefficients.unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((c[0] - C64::new(h, 0.0)).norm() < 1e-12);
        assert!((c[1] - C64::new(h, 0.0)).norm() < 1e-12);
        assert!(c[2].norm() < 1e-12);
    }

    #[test]
    fn overlap_resynthesises_x0() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let a = random_hermitian(&mut rng, 6, 2.0);
        let x0 = random_vector(&mut rng, 6);
        let s = overlap_coefficients(&hermitian_eig(&a, HERMITIAN_TOL).unwrap(), &x0).unwrap();
        let c = s.coefficients().unwrap();
        let mut sum = ComplexVector::zeros(6);
        for (ci, v) in c.iter().zip(&s.eigenvectors) {
            sum = sum.add(&v.scale(*ci));
        }
        assert!(sum.max_abs_diff(&x0.normalized().unwrap()) < 1e-10);
        let total: f64 = c.iter().map(|z| z.norm_sqr()).sum();
        assert!((total - 1.0).abs() < 1e-10);
    }

    #[test]
    fn zero_initial_vector_rejected() {
        let s = hermitian_eig(&ComplexMatrix::identity(2), HERMITIAN_TOL).unwrap();
        assert!(matches!(
            overlap_coefficients(&s, &ComplexVector::zeros(2)),
            Err(NumericsError::ZeroVector)
        ));
    }

    #[test]
    fn exponential_of_zero_is_identity() {
        let e = herm_exponential(&ComplexMatrix::zeros(3), 1.7, ExpVariant::Real, HERMITIAN_TOL)
            .unwrap();
        assert_eq!(e, ComplexMatrix::identity(3));
    }

    #[test]
    fn exponential_of_diagonal() {
        let a = ComplexMatrix::from_real_diag(&[1.0, 2.0]);
        let e = herm_exponential(&a, 1.0, ExpVariant::Real, HERMITIAN_TOL).unwrap();
        let expect = ComplexMatrix::from_real_diag(&[1f64.exp(), 2f64.exp()]);
        assert!(e.max_abs_diff(&expect) < 1e-14);
    }

    #[test]
    fn exponential_matches_taylor_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for n in [2, 4, 7] {
            let a = random_hermitian(&mut rng, n, 1.5);
            let e = herm_exponential(&a, 0.3, ExpVariant::Real, HERMITIAN_TOL).unwrap();
            assert!(e.max_abs_diff(&taylor_expm(&a, 0.3)) < 1e-9);
            let u = herm_exponential(&a, 0.3, ExpVariant::Unitary, HERMITIAN_TOL).unwrap();
            let ia = a.scale(C64::new(0.0, -1.0));
            assert!(u.max_abs_diff(&taylor_expm(&ia, 0.3)) < 1e-9);
            assert!(u.is_unitary(1e-10));
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn eig_round_trip(seed in any::<u64>(), n in 1usize..=16, scale in 0.01f64..10.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = random_hermitian(&mut rng, n, scale);
            let s = hermitian_eig(&a, HERMITIAN_TOL).unwrap();
            prop_assert!(s.reconstruct().max_abs_diff(&a) <= 1e-10 * scale.max(1.0));
            let max_abs = s.eigenvalues.iter().map(|x| x.abs()).fold(0.0, f64::max);
            prop_assert_eq!(s.norm_a, max_abs);
        }

        #[test]
        fn exponential_inverse_pair(seed in any::<u64>(), n in 1usize..=8, s in -2.0f64..2.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = random_hermitian(&mut rng, n, 1.0);
            let fwd = herm_exponential(&a, s, ExpVariant::Real, HERMITIAN_TOL).unwrap();
            let back = herm_exponential(&a, -s, ExpVariant::Real, HERMITIAN_TOL).unwrap();
            prop_assert!(fwd.matmul(&back).max_abs_diff(&ComplexMatrix::identity(n)) <= 1e-9);
        }

        #[test]
        fn overlap_is_scale_covariant(
            seed in any::<u64>(),
            n in 1usize..=8,
            mag in 1e-3f64..1e3,
            arg in -3.1f64..3.1,
        ) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = random_hermitian(&mut rng, n, 1.0);
            let x0 = random_vector(&mut rng, n);
            let s = hermitian_eig(&a, HERMITIAN_TOL).unwrap();
            let lambda = C64::from_polar(mag, arg);
            let c1 = overlap_coefficients(&s, &x0).unwrap().coefficients.unwrap();
            let c2 = overlap_coefficients(&s, &x0.scale(lambda)).unwrap().coefficients.unwrap();
            let unit = lambda / lambda.norm();
            for (a, b) in c1.iter().zip(&c2) {
                prop_assert!((a * unit - b).norm() <= 1e-12);
            }
        }
    }
}
