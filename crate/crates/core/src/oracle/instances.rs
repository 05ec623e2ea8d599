//! Seeded problem generators, including instances whose eigenphases sit
//! exactly on the phase-register grid.

use rand::Rng;

use crate::circuit::EigenvalueMode;
use crate::numerics::{ComplexMatrix, ComplexVector, C64, ZERO};
use crate::solver::HldeProblem;

fn uniform_c64<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
}

/// Hermitian matrix with entries of magnitude up to about `scale`.
pub fn random_hermitian<R: Rng + ?Sized>(rng: &mut R, n: usize, scale: f64) -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(n);
    for i in 0..n {
        m[(i, i)] = C64::new(rng.random_range(-1.0..1.0) * scale, 0.0);
        for j in i + 1..n {
            let z = uniform_c64(rng) * scale;
            m[(i, j)] = z;
            m[(j, i)] = z.conj();
        }
    }
    m
}

pub fn random_vector<R: Rng + ?Sized>(rng: &mut R, n: usize) -> ComplexVector {
    loop {
        let v = ComplexVector::new((0..n).map(|_| uniform_c64(rng)).collect())
            .expect("finite entries");
        if v.norm() > 1e-3 {
            return v;
        }
    }
}

/// Normalised random amplitudes.
pub fn random_state<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Vec<C64> {
    random_vector(rng, dim).normalized().expect("nonzero").into_vec()
}

/// Unitary from Gram–Schmidt on a random complex matrix.
pub fn random_unitary<R: Rng + ?Sized>(rng: &mut R, n: usize) -> ComplexMatrix {
    let mut cols: Vec<ComplexVector> = Vec::with_capacity(n);
    while cols.len() < n {
        let mut v = random_vector(rng, n);
        for c in &cols {
            let proj = c.inner(&v);
            v = v.sub(&c.scale(proj));
        }
        if v.norm() > 1e-6 {
            cols.push(v.normalized().expect("nonzero"));
        }
    }
    let mut u = ComplexMatrix::zeros(n);
    for (j, c) in cols.iter().enumerate() {
        for i in 0..n {
            u[(i, j)] = c[i];
        }
    }
    u
}

/// `U diag(eigenvalues) U†`.
pub fn matrix_from_spectrum(eigenvalues: &[f64], u: &ComplexMatrix) -> ComplexMatrix {
    u.matmul(&ComplexMatrix::from_real_diag(eigenvalues))
        .matmul(&u.adjoint())
}

/// Eigenvalue whose phase under `mode` is exactly `j / L`.
pub fn grid_eigenvalue(j: usize, big_l: usize, norm_a: f64, mode: EigenvalueMode) -> f64 {
    let (j, l) = (j as f64, big_l as f64);
    match mode {
        EigenvalueMode::RestrictedPositive => norm_a * (1.0 - j / l),
        EigenvalueMode::GeneralHermitian => norm_a * (1.0 - 2.0 * j / (l - 1.0)),
    }
}

#[derive(Clone, Debug)]
pub struct GridInstance {
    pub problem: HldeProblem,
    /// Grid index of each eigenvalue, in the order used to build the matrix.
    pub grid_indices: Vec<usize>,
    pub eigenvalues: Vec<f64>,
}

/// Random problem of dimension `n` whose eigenphases are multiples of
/// `1/L`. One eigenvalue is pinned to `+norm_a` so the spectral norm is
/// exactly `norm_a`.
pub fn grid_exact_instance<R: Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    l: usize,
    mode: EigenvalueMode,
    norm_a: f64,
    t: f64,
) -> GridInstance {
    let big_l = 1usize << l;
    let max_j = match mode {
        EigenvalueMode::RestrictedPositive => big_l - 1,
        EigenvalueMode::GeneralHermitian => big_l - 1,
    };
    let mut grid_indices: Vec<usize> = (0..n)
        .map(|i| if i == 0 { 0 } else { rng.random_range(0..=max_j) })
        .collect();
    grid_indices.sort_unstable();
    let eigenvalues: Vec<f64> = grid_indices
        .iter()
        .map(|&j| grid_eigenvalue(j, big_l, norm_a, mode))
        .collect();
    let u = random_unitary(rng, n);
    let a = matrix_from_spectrum(&eigenvalues, &u);
    let x0 = random_vector(rng, n);
    GridInstance {
        problem: HldeProblem::new(a, x0, t).expect("generated problem is valid"),
        grid_indices,
        eigenvalues,
    }
}

/// The vector `(1, -1, 1, -1, …)` scaled to norm `norm`.
pub fn alternating_vector(n: usize, norm: f64) -> ComplexVector {
    let s = norm / (n as f64).sqrt();
    ComplexVector::new(
        (0..n)
            .map(|i| if i % 2 == 0 { C64::new(s, 0.0) } else { C64::new(-s, 0.0) })
            .collect(),
    )
    .unwrap_or_else(|_| ComplexVector::from_vec_unchecked(vec![ZERO; n]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{eigenphase, nearest_grid_index};
    use crate::numerics::{hermitian_eig, HERMITIAN_TOL};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn random_unitary_is_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for n in 1..6 {
            assert!(random_unitary(&mut rng, n).is_unitary(1e-12));
        }
    }

    #[test]
    fn grid_instances_have_grid_phases() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for mode in [EigenvalueMode::RestrictedPositive, EigenvalueMode::GeneralHermitian] {
            let inst = grid_exact_instance(&mut rng, 4, 3, mode, 1.3, 0.5);
            let spec = hermitian_eig(inst.problem.a(), HERMITIAN_TOL).unwrap();
            assert!((spec.norm_a - 1.3).abs() < 1e-12);
            for a in &spec.eigenvalues {
                let phi = eigenphase(*a, spec.norm_a, mode, 8);
                let d = nearest_grid_index(phi, 8) as f64;
                let off = (phi * 8.0 - d).abs();
                assert!(off.min((off - 8.0).abs()) < 1e-10);
            }
        }
    }
}
