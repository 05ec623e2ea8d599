//! End-to-end solver: validation, circuit assembly, post-selection and
//! reconstruction of `x(t) = e^{At} x0`.

mod sizing;

pub use sizing::{
    estimate_big_l, estimate_big_l_capped, estimate_l_full, estimate_l_full_capped,
    estimate_l_full_raw, SizingError, DEFAULT_L_CAP, L_FULL_C0, L_FULL_C1,
};

use std::fmt;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::circuit::{
    assemble_full_circuit, build_m_from_spectrum, nearest_grid_index, eigenphase, thetas,
    CircuitError, EigenvalueMode, Register, RegisterLayout,
};
use crate::numerics::{
    hermitian_eig, overlap_coefficients, ComplexMatrix, ComplexVector, NumericsError,
    SpectralData, C64, HERMITIAN_TOL,
};
use crate::oracle::{instances::alternating_vector, solution_from_spectrum};
use crate::statevector::{DensityMatrix, EngineError, Selector, StateVector};

/// Relative tolerance for the strictly-positive spectrum check.
pub const POSITIVITY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SolveError {
    #[error("restricted mode needs a positive spectrum; smallest eigenvalue is {min} (‖A‖ = {norm_a})")]
    NonPositiveEigenvalue { min: f64, norm_a: f64 },
    #[error("dimension mismatch: matrix is {expected}×{expected}, vector has {found} entries")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("initial vector has zero norm")]
    ZeroVector,
    #[error("time must be finite and non-negative, got {0}")]
    NegativeTime(f64),
    #[error("matrix is zero; the spectral norm must be positive")]
    ZeroMatrix,
    #[error("post-selection outcome is impossible (probability {probability:e})")]
    ImpossibleOutcome { probability: f64 },
    #[error("success probability estimate is zero; nothing to rescale")]
    ZeroSuccess,
    #[error("reconstructed solution is not finite (e^{{‖A‖t}} overflows)")]
    NonFiniteResult,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error(transparent)]
    Engine(EngineError),
    #[error(transparent)]
    Sizing(#[from] SizingError),
}

impl From<EngineError> for SolveError {
    fn from(e: EngineError) -> Self {
        match e {
            EngineError::ImpossibleOutcome { probability } => Self::ImpossibleOutcome { probability },
            EngineError::Numerics(n) => Self::Numerics(n),
            EngineError::Circuit(c) => Self::Circuit(c),
            other => Self::Engine(other),
        }
    }
}

/// `dx/dt = Ax`, `x(0) = x0`, solved up to time `t`.
#[derive(Clone, Debug, PartialEq)]
pub struct HldeProblem {
    a: ComplexMatrix,
    x0: ComplexVector,
    t: f64,
}

impl HldeProblem {
    pub fn new(a: ComplexMatrix, x0: ComplexVector, t: f64) -> Result<Self, SolveError> {
        if a.dim() != x0.dim() {
            return Err(SolveError::DimensionMismatch {
                expected: a.dim(),
                found: x0.dim(),
            });
        }
        if !a.is_finite() {
            return Err(NumericsError::NonFinite.into());
        }
        a.check_hermitian(HERMITIAN_TOL)?;
        if !(x0.norm() > 0.0) {
            return Err(SolveError::ZeroVector);
        }
        if !(t >= 0.0 && t.is_finite()) {
            return Err(SolveError::NegativeTime(t));
        }
        Ok(Self { a, x0, t })
    }

    pub fn a(&self) -> &ComplexMatrix {
        &self.a
    }

    pub fn x0(&self) -> &ComplexVector {
        &self.x0
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn dim(&self) -> usize {
        self.x0.dim()
    }

    pub fn with_time(&self, t: f64) -> Result<Self, SolveError> {
        Self::new(self.a.clone(), self.x0.clone(), t)
    }

    pub fn with_x0(&self, x0: ComplexVector) -> Result<Self, SolveError> {
        Self::new(self.a.clone(), x0, self.t)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum RunMode {
    /// Success probability and state by exact projection.
    ExactPostselect,
    /// Success probability estimated from `shots` seeded measurements.
    Sampled { shots: usize, seed: u64 },
}

/// Choice of the auxiliary initial block `y0` for the boosted problem.
#[derive(Clone, Debug, PartialEq)]
pub enum BoostPolicy {
    /// `y0 = ‖x0‖ e1`.
    Guarantee,
    /// `y0 = ‖x0‖/√N (1, -1, 1, …)`.
    ZeroMean,
    Custom(ComplexVector),
}

impl BoostPolicy {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Guarantee => "guarantee",
            Self::ZeroMean => "zero-mean",
            Self::Custom(_) => "custom",
        }
    }

    fn y0(&self, x0: &ComplexVector) -> ComplexVector {
        let n = x0.dim();
        match self {
            Self::Guarantee => ComplexVector::basis(n, 0).scale_real(x0.norm()),
            Self::ZeroMean => alternating_vector(n, x0.norm()),
            Self::Custom(y) => y.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverConfig {
    pub l: usize,
    pub mode: EigenvalueMode,
    /// Also require the phase register to read all zeros.
    pub postselect_phase: bool,
    pub run_mode: RunMode,
    pub boost: Option<BoostPolicy>,
    /// Compute `e^{At}x0` classically and fill the error fields.
    pub compare_oracle: bool,
}

impl SolverConfig {
    pub fn new(l: usize, mode: EigenvalueMode) -> Self {
        Self {
            l,
            mode,
            postselect_phase: false,
            run_mode: RunMode::ExactPostselect,
            boost: None,
            compare_oracle: true,
        }
    }

    pub fn validate(&self) -> Result<(), SolveError> {
        if self.l == 0 || self.l > 30 {
            return Err(SolveError::InvalidConfig(format!(
                "phase register size must be in 1..=30, got {}",
                self.l
            )));
        }
        if let RunMode::Sampled { shots: 0, .. } = self.run_mode {
            return Err(SolveError::InvalidConfig("shots must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Warning {
    /// An eigenvalue rounds onto the grid point `L`, which aliases to `0`.
    Wraparound { eigenvalue: f64 },
    /// `‖y0‖ < ‖x0‖`: the boosted success-probability floor does not hold.
    WeakBoost { y0_norm: f64, x0_norm: f64 },
    /// Precision window reaches the smallest eigenvalue (`P ≥ 1/κ`).
    KappaGuard { precision: f64, kappa: f64 },
}

impl fmt::Display for Warning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Wraparound { eigenvalue } => write!(
                f,
                "eigenvalue {eigenvalue} rounds to the top of the phase grid and aliases to the largest eigenvalue"
            ),
            Self::WeakBoost { y0_norm, x0_norm } => write!(
                f,
                "boost vector norm {y0_norm} is below the initial-condition norm {x0_norm}; p_S >= 0.5 is not guaranteed"
            ),
            Self::KappaGuard { precision, kappa } => write!(
                f,
                "precision {precision} is not below 1/kappa = {}",
                1.0 / kappa
            ),
        }
    }
}

#[derive(Clone, Debug)]
pub struct SolveReport {
    pub p_success_exact: f64,
    pub p_success_empirical: Option<f64>,
    pub gamma_analytic: f64,
    /// Dominant eigenvector of the work register's reduced state, truncated
    /// to the problem dimension (the boosted one when boosting).
    pub work_state: ComplexVector,
    pub work_density: DensityMatrix,
    pub x_reconstructed: ComplexVector,
    pub x_oracle: Option<ComplexVector>,
    pub fidelity: Option<f64>,
    pub additive_error: Option<f64>,
    pub relative_error: Option<f64>,
    /// Full `2N` reconstruction when boosting.
    pub boosted_reconstruction: Option<ComplexVector>,
    pub thetas: Vec<f64>,
    pub layout: RegisterLayout,
    pub config: SolverConfig,
    pub norm_a: f64,
    pub kappa: Option<f64>,
    pub eigenvalues: Vec<f64>,
    /// Population of phase/environment states other than all-zeros after
    /// post-selection.
    pub residual_ancilla_population: f64,
    /// Post-selected full-register state.
    pub final_state: StateVector,
    pub warnings: Vec<Warning>,
    pub timing_ms: f64,
}

/// Block-diagonal augmentation `diag(‖A‖ I, A)` with initial vector `(y0; x0)`.
pub fn boost(problem: &HldeProblem, policy: &BoostPolicy) -> Result<(HldeProblem, Option<Warning>), SolveError> {
    let n = problem.dim();
    let norm_a = hermitian_eig(problem.a(), HERMITIAN_TOL)?.norm_a;
    let y0 = policy.y0(problem.x0());
    if y0.dim() != n {
        return Err(SolveError::DimensionMismatch {
            expected: n,
            found: y0.dim(),
        });
    }
    let mut big = ComplexMatrix::zeros(2 * n);
    for i in 0..n {
        big[(i, i)] = C64::new(norm_a, 0.0);
        for j in 0..n {
            big[(n + i, n + j)] = problem.a()[(i, j)];
        }
    }
    let x0_norm = problem.x0().norm();
    let y0_norm = y0.norm();
    let warning = (y0_norm < x0_norm * (1.0 - 1e-12)).then_some(Warning::WeakBoost { y0_norm, x0_norm });
    let boosted = HldeProblem::new(big, y0.concat(problem.x0()), problem.t())?;
    Ok((boosted, warning))
}

/// `Σ|c_i|² e^{-2(a_top - a_i)t}` with `a_top = a_N` (restricted) or `‖A‖`.
pub fn gamma_analytic(spec: &SpectralData, t: f64, mode: EigenvalueMode) -> Result<f64, SolveError> {
    let coeffs = spec.coefficients()?;
    let top = match mode {
        EigenvalueMode::RestrictedPositive => spec.max_eigenvalue(),
        EigenvalueMode::GeneralHermitian => spec.norm_a,
    };
    Ok(coeffs
        .iter()
        .zip(&spec.eigenvalues)
        .map(|(c, a)| c.norm_sqr() * (-2.0 * (top - a) * t).exp())
        .sum())
}

/// `√p_S ‖x0‖ e^{‖A‖t}` times the phase-aligned work state.
pub fn reconstruct(
    work_state: &ComplexVector,
    p_s: f64,
    norm_x0: f64,
    norm_a: f64,
    t: f64,
    oracle: Option<&ComplexVector>,
) -> Result<ComplexVector, SolveError> {
    if !(p_s > 0.0) {
        return Err(SolveError::ZeroSuccess);
    }
    let aligned = match oracle {
        Some(o) => work_state.aligned_to(o),
        None => work_state.with_canonical_phase(),
    };
    Ok(aligned.scale_real(p_s.sqrt() * norm_x0 * (norm_a * t).exp()))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Metrics {
    pub fidelity: f64,
    pub additive_error: f64,
    pub relative_error: f64,
}

/// Fidelity of the work-register state with the normalised oracle, and the
/// phase-aligned distance between reconstruction and oracle.
pub fn fidelity_metrics(
    rho: &DensityMatrix,
    reconstructed: &ComplexVector,
    oracle: &ComplexVector,
) -> Result<Metrics, SolveError> {
    let target = oracle.padded(rho.dim());
    let fidelity = rho.fidelity_with(&target)?.clamp(0.0, 1.0);
    let additive_error = reconstructed.aligned_to(oracle).sub(oracle).norm();
    Ok(Metrics {
        fidelity,
        additive_error,
        relative_error: additive_error / oracle.norm(),
    })
}

fn wraparound_warnings(spec: &SpectralData, big_l: usize) -> Vec<Warning> {
    spec.eigenvalues
        .iter()
        .filter(|&&a| {
            let phi = eigenphase(a, spec.norm_a, EigenvalueMode::RestrictedPositive, big_l);
            nearest_grid_index(phi, big_l) == 0 && phi > 0.5
        })
        .map(|&eigenvalue| Warning::Wraparound { eigenvalue })
        .collect()
}

pub fn solve(problem: &HldeProblem, config: &SolverConfig) -> Result<SolveReport, SolveError> {
    let start = Instant::now();
    config.validate()?;
    let mut warnings = Vec::new();
    let original_dim = problem.dim();
    let working = match &config.boost {
        Some(policy) => {
            let (p, w) = boost(problem, policy)?;
            warnings.extend(w);
            p
        }
        None => problem.clone(),
    };
    let x0 = working.x0();
    let t = working.t();
    let spec = overlap_coefficients(&hermitian_eig(working.a(), HERMITIAN_TOL)?, x0)?;
    let norm_a = spec.norm_a;
    if !(norm_a > 0.0) {
        return Err(SolveError::ZeroMatrix);
    }
    if config.mode == EigenvalueMode::RestrictedPositive && spec.min_eigenvalue() <= POSITIVITY_TOL * norm_a {
        return Err(SolveError::NonPositiveEigenvalue {
            min: spec.min_eigenvalue(),
            norm_a,
        });
    }

    let big_l = 1usize << config.l;
    if config.mode == EigenvalueMode::RestrictedPositive {
        warnings.extend(wraparound_warnings(&spec, big_l));
    }
    let layout = RegisterLayout::for_dimension(working.dim(), config.l)?;
    let m = build_m_from_spectrum(&spec, norm_a, config.mode, big_l)?.pad_with_identity(layout.work_dim());
    let angles = thetas(norm_a, t, config.l, config.mode)?;
    let circuit = assemble_full_circuit(x0, &m, &angles, layout)?;

    let mut state = StateVector::zero(layout);
    state.run_circuit(&circuit)?;

    let registers: &[Register] = if config.postselect_phase {
        &[Register::Phase, Register::Environment]
    } else {
        &[Register::Environment]
    };
    let selector = Selector::registers(&layout, registers);
    let post = state.postselect_zeros(&selector)?;
    let p_exact = post.probability.clamp(0.0, 1.0);

    let p_empirical = match config.run_mode {
        RunMode::ExactPostselect => None,
        RunMode::Sampled { shots, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let outcomes = state.sample_outcomes(&selector, shots, &mut rng)?;
            let zeros = outcomes.iter().filter(|&&o| o == 0).count();
            Some(zeros as f64 / shots as f64)
        }
    };
    let p_used = p_empirical.unwrap_or(p_exact);

    let work_sel = Selector::registers(&layout, &[Register::Work]);
    let rho = post.state.reduced_density(&work_sel)?;
    let (_, dominant) = rho.dominant_eigenvector()?;
    let work_state = dominant.truncated(working.dim());
    let ancillas = Selector::registers(&layout, &[Register::Phase, Register::Environment]);
    let residual = post.state.excited_population(&ancillas);

    let oracle_full = config
        .compare_oracle
        .then(|| solution_from_spectrum(&spec, x0, t));
    let x_full = reconstruct(&work_state, p_used, x0.norm(), norm_a, t, oracle_full.as_ref())?;
    if !x_full.as_slice().iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        return Err(SolveError::NonFiniteResult);
    }

    let lower = |v: &ComplexVector| -> ComplexVector {
        if config.boost.is_some() {
            ComplexVector::new(v.as_slice()[original_dim..].to_vec()).expect("finite")
        } else {
            v.clone()
        }
    };
    let x_reconstructed = lower(&x_full);
    let x_oracle = oracle_full.as_ref().map(lower);
    let (fidelity, additive_error, relative_error) = match (&oracle_full, &x_oracle) {
        (Some(full), Some(o)) => {
            let fidelity = fidelity_metrics(&rho, &x_full, full)?.fidelity;
            let additive = x_reconstructed.sub(o).norm();
            let relative = if o.norm() > 0.0 { additive / o.norm() } else { f64::NAN };
            (Some(fidelity), Some(additive), Some(relative))
        }
        _ => (None, None, None),
    };

    let gamma = gamma_analytic(&spec, t, config.mode)?;
    let kappa = match config.mode {
        EigenvalueMode::RestrictedPositive => spec.kappa,
        EigenvalueMode::GeneralHermitian => None,
    };

    Ok(SolveReport {
        p_success_exact: p_exact,
        p_success_empirical: p_empirical,
        gamma_analytic: gamma,
        work_state,
        work_density: rho,
        x_reconstructed,
        x_oracle,
        fidelity,
        additive_error,
        relative_error,
        boosted_reconstruction: config.boost.is_some().then_some(x_full),
        thetas: angles,
        layout,
        config: config.clone(),
        norm_a,
        kappa,
        eigenvalues: spec.eigenvalues.clone(),
        residual_ancilla_population: residual,
        final_state: post.state,
        warnings,
        timing_ms: start.elapsed().as_secs_f64() * 1e3,
    })
}
