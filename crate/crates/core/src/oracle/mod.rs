//! Classical reference computations: the exact solution, closed-form
//! intermediate circuit states, the post-selected damping operator and the
//! error-bound evaluators.

mod bounds;
pub mod instances;

pub use bounds::{
    b_value, kappa_guard_violated, measured_qpe_error, precision_error_bounds, qpe_error_bound,
    ErrorBudget,
};

use std::f64::consts::PI;

use crate::circuit::{eigenphase, nearest_grid_index, EigenvalueMode, RegisterLayout};
use crate::numerics::{
    exponential_from_spectrum, hermitian_eig, ComplexMatrix, ComplexVector, ExpVariant,
    NumericsError, SpectralData, C64, HERMITIAN_TOL, ONE, ZERO,
};
use crate::solver::HldeProblem;
use crate::statevector::{EngineError, StateVector};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum OracleError {
    #[error("invalid precision: L·P = {lp} must exceed 1")]
    InvalidPrecision { lp: f64 },
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error(transparent)]
    Engine(#[from] EngineError),
}

/// `e^{At} x0`.
pub fn classical_solution(problem: &HldeProblem) -> Result<ComplexVector, NumericsError> {
    let spec = hermitian_eig(problem.a(), HERMITIAN_TOL)?;
    Ok(solution_from_spectrum(&spec, problem.x0(), problem.t()))
}

pub fn solution_from_spectrum(spec: &SpectralData, x0: &ComplexVector, t: f64) -> ComplexVector {
    exponential_from_spectrum(spec, t, ExpVariant::Real).mat_vec(x0)
}

/// Damping rate per unit of phase-register value.
fn damping_rate(norm_a: f64, t: f64, big_l: usize, mode: EigenvalueMode) -> f64 {
    let l = big_l as f64;
    match mode {
        EigenvalueMode::RestrictedPositive => norm_a * t / l,
        EigenvalueMode::GeneralHermitian => 2.0 * norm_a * t / (l - 1.0),
    }
}

/// The operator applied to the phase register when every environment
/// qubit is found in `|0⟩`.
pub fn g0_matrix(norm_a: f64, t: f64, big_l: usize, mode: EigenvalueMode) -> ComplexMatrix {
    let rate = damping_rate(norm_a, t, big_l, mode);
    let diag: Vec<f64> = (0..big_l).map(|j| (-rate * j as f64).exp()).collect();
    ComplexMatrix::from_real_diag(&diag)
}

/// No-decay and decay Kraus operators of one damping block.
pub fn kraus_pair(theta: f64) -> [ComplexMatrix; 2] {
    let (s, c) = (theta / 2.0).sin_cos();
    let e0 = ComplexMatrix::from_real_diag(&[1.0, c]);
    let mut e1 = ComplexMatrix::zeros(2);
    e1[(0, 1)] = C64::new(s, 0.0);
    [e0, e1]
}

/// `E0^{l-1} ⊗ … ⊗ E0^0`, qubit `k` at weight `2^k`.
pub fn g0_from_kraus(thetas: &[f64]) -> ComplexMatrix {
    thetas
        .iter()
        .fold(ComplexMatrix::identity(1), |acc, &theta| {
            let [e0, _] = kraus_pair(theta);
            e0.kron(&acc)
        })
}

/// Choi matrix `Σ_{ab} E(|a⟩⟨b|) ⊗ |a⟩⟨b|` with the reference index in the
/// low bits.
pub fn choi_matrix(kraus: &[ComplexMatrix]) -> ComplexMatrix {
    let d = kraus[0].dim();
    let mut j = ComplexMatrix::zeros(d * d);
    for e in kraus {
        for x in 0..d {
            for y in 0..d {
                for a in 0..d {
                    for b in 0..d {
                        j[(a + d * x, b + d * y)] += e[(x, a)] * e[(y, b)].conj();
                    }
                }
            }
        }
    }
    j
}

/// QPE amplitudes for every eigenvalue, relative to its nearest grid point.
#[derive(Clone, Debug)]
pub struct QpeClosedForm {
    pub big_l: usize,
    pub phases: Vec<f64>,
    pub grid: Vec<usize>,
    /// `alpha[i][j + L/2 - 1]` for `j ∈ {-L/2+1, …, L/2}`.
    pub alpha: Vec<Vec<C64>>,
}

impl QpeClosedForm {
    /// Offsets `j` in table order.
    pub fn offsets(&self) -> impl Iterator<Item = i64> {
        let half = (self.big_l / 2) as i64;
        -half + 1..=half
    }

    pub fn alpha(&self, i: usize, j: i64) -> C64 {
        let half = (self.big_l / 2) as i64;
        self.alpha[i][(j + half - 1) as usize]
    }

    /// Amplitude of phase-register basis state `m` for eigenvalue `i`.
    pub fn amplitude_at(&self, i: usize, m: usize) -> C64 {
        let big_l = self.big_l as i64;
        let half = big_l / 2;
        let mut j = (m as i64 - self.grid[i] as i64).rem_euclid(big_l);
        if j > half {
            j -= big_l;
        }
        self.alpha(i, j)
    }

    /// Basis state that offset `j` lands on for eigenvalue `i`.
    pub fn basis_state(&self, i: usize, j: i64) -> usize {
        (self.grid[i] as i64 + j).rem_euclid(self.big_l as i64) as usize
    }

    pub fn dim(&self) -> usize {
        self.phases.len()
    }
}

/// `(1/L) Σ_{k<L} e^{i2πkδ}` evaluated as a geometric series.
pub fn qpe_amplitude(delta: f64, big_l: usize) -> C64 {
    let frac = delta - delta.round();
    if frac.abs() < 1e-14 {
        return ONE;
    }
    let l = big_l as f64;
    let num = ONE - C64::from_polar(1.0, 2.0 * PI * l * frac);
    let den = ONE - C64::from_polar(1.0, 2.0 * PI * frac);
    num / (den * l)
}

pub fn qpe_closed_form(spec: &SpectralData, l: usize, mode: EigenvalueMode) -> QpeClosedForm {
    let big_l = 1usize << l;
    let lf = big_l as f64;
    let half = (big_l / 2) as i64;
    let phases: Vec<f64> = spec
        .eigenvalues
        .iter()
        .map(|&a| eigenphase(a, spec.norm_a, mode, big_l))
        .collect();
    let grid: Vec<usize> = phases.iter().map(|&p| nearest_grid_index(p, big_l)).collect();
    let alpha = phases
        .iter()
        .zip(&grid)
        .map(|(&phi, &d)| {
            (-half + 1..=half)
                .map(|j| qpe_amplitude(phi - (d as i64 + j) as f64 / lf, big_l))
                .collect()
        })
        .collect();
    QpeClosedForm {
        big_l,
        phases,
        grid,
        alpha,
    }
}

/// `Σ_i c_i |φ̃_i⟩|v_i⟩` with the environment register in `|0⟩`.
pub fn expected_psi2(
    spec: &SpectralData,
    qcf: &QpeClosedForm,
    layout: RegisterLayout,
) -> Result<StateVector, OracleError> {
    let coeffs = spec.coefficients()?;
    let n_work = layout.n_work();
    let mut amps = vec![ZERO; 1usize << layout.total()];
    for (i, (c, v)) in coeffs.iter().zip(&spec.eigenvectors).enumerate() {
        for m in 0..qcf.big_l {
            let a = *c * qcf.amplitude_at(i, m);
            if a == ZERO {
                continue;
            }
            for w in 0..v.dim() {
                amps[w | (m << n_work)] += a * v[w];
            }
        }
    }
    Ok(StateVector::from_amplitudes(layout, amps)?)
}

/// Applies `op` to the phase register of `state`.
pub fn apply_to_phase_register(state: &StateVector, op: &ComplexMatrix) -> StateVector {
    let layout = state.layout();
    let n_work = layout.n_work();
    let work_mask = (1usize << n_work) - 1;
    let phase_mask = layout.phase_dim() - 1;
    let src = state.amplitudes();
    let mut out = vec![ZERO; src.len()];
    for (idx, &z) in src.iter().enumerate() {
        if z == ZERO {
            continue;
        }
        let m = (idx >> n_work) & phase_mask;
        let rest = idx & !(phase_mask << n_work);
        for r in 0..layout.phase_dim() {
            let e = op[(r, m)];
            if e != ZERO {
                out[rest | (r << n_work)] += e * z;
            }
        }
        debug_assert_eq!(idx & work_mask, rest & work_mask);
    }
    StateVector::from_amplitudes(layout, out).expect("same layout")
}
