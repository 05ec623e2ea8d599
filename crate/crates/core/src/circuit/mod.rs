//! Register-aware circuit representation and the builders for each pipeline
//! stage: initial-condition loading, phase estimation, the damping chain and
//! the uncompute.

mod builders;

use std::fmt;
use std::sync::Arc;

use crate::numerics::{ComplexMatrix, NumericsError, C64};

pub use builders::{
    adjoint_fragment, assemble_full_circuit, build_ic_prep, build_m, build_m_from_spectrum,
    build_qft, build_qpe, build_sim_ad_chain, eigenphase, nearest_grid_index, theta_k, thetas,
    QftFragment,
};

/// Tolerance for the unitarity check on controlled-block payloads.
pub const UNITARY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CircuitError {
    #[error("spectral norm must be positive, got {0}")]
    ZeroNorm(f64),
    #[error("time must be non-negative, got {0}")]
    NegativeTime(f64),
    #[error("expected {expected} rotation angles, got {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("matrix is not unitary (max |UU† - I| = {deviation:e})")]
    NonUnitary { deviation: f64 },
    #[error("qubit {qubit} out of range for {total} qubits")]
    IndexOutOfRange { qubit: usize, total: usize },
    #[error("qubit {0} used twice in one gate")]
    DuplicateQubit(usize),
    #[error("register of {qubits} qubits cannot hold dimension {dim}")]
    RegisterTooSmall { qubits: usize, dim: usize },
    #[error("stage {found:?} cannot follow stage {last:?}")]
    StageOrder { last: Stage, found: Stage },
    #[error("gate has no unitary adjoint: {0}")]
    NoAdjoint(String),
    #[error("phase register size must be in 1..=30, got {0}")]
    InvalidRegisterSize(usize),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Register {
    Work,
    Phase,
    Environment,
}

/// Qubit layout: work qubits occupy the low bits of a basis index, then the
/// phase register, then the environment register. Within a register, qubit
/// `k` carries weight `2^k`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RegisterLayout {
    n_work: usize,
    l_phase: usize,
}

impl RegisterLayout {
    pub fn new(n_work: usize, l_phase: usize) -> Result<Self, CircuitError> {
        if n_work == 0 {
            return Err(CircuitError::RegisterTooSmall { qubits: 0, dim: 1 });
        }
        if l_phase == 0 || l_phase > 30 {
            return Err(CircuitError::InvalidRegisterSize(l_phase));
        }
        Ok(Self { n_work, l_phase })
    }

    /// Smallest layout whose work register holds `dim` amplitudes.
    pub fn for_dimension(dim: usize, l_phase: usize) -> Result<Self, CircuitError> {
        let n_work = dim.max(2).next_power_of_two().trailing_zeros() as usize;
        Self::new(n_work, l_phase)
    }

    pub fn n_work(&self) -> usize {
        self.n_work
    }

    pub fn l_phase(&self) -> usize {
        self.l_phase
    }

    pub fn l_env(&self) -> usize {
        self.l_phase
    }

    pub fn total(&self) -> usize {
        self.n_work + 2 * self.l_phase
    }

    pub fn work_dim(&self) -> usize {
        1 << self.n_work
    }

    /// `L = 2^l`.
    pub fn phase_dim(&self) -> usize {
        1 << self.l_phase
    }

    pub fn work_qubit(&self, i: usize) -> usize {
        debug_assert!(i < self.n_work);
        i
    }

    pub fn phase_qubit(&self, k: usize) -> usize {
        debug_assert!(k < self.l_phase);
        self.n_work + k
    }

    pub fn env_qubit(&self, k: usize) -> usize {
        debug_assert!(k < self.l_phase);
        self.n_work + self.l_phase + k
    }

    pub fn qubits(&self, register: Register) -> Vec<usize> {
        match register {
            Register::Work => (0..self.n_work).collect(),
            Register::Phase => (0..self.l_phase).map(|k| self.phase_qubit(k)).collect(),
            Register::Environment => (0..self.l_phase).map(|k| self.env_qubit(k)).collect(),
        }
    }

    pub fn register_of(&self, qubit: usize) -> Option<(Register, usize)> {
        if qubit < self.n_work {
            Some((Register::Work, qubit))
        } else if qubit < self.n_work + self.l_phase {
            Some((Register::Phase, qubit - self.n_work))
        } else if qubit < self.total() {
            Some((Register::Environment, qubit - self.n_work - self.l_phase))
        } else {
            None
        }
    }
}

impl fmt::Display for RegisterLayout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "work[0..{}] phase[{}..{}] env[{}..{}]",
            self.n_work,
            self.n_work,
            self.n_work + self.l_phase,
            self.n_work + self.l_phase,
            self.total()
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum EigenvalueMode {
    /// All eigenvalues strictly positive; `M = exp(-i 2π A/‖A‖)`.
    RestrictedPositive,
    /// Any Hermitian spectrum; `[-‖A‖, ‖A‖]` is mapped onto one lap of the circle.
    GeneralHermitian,
}

impl EigenvalueMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::RestrictedPositive => "restricted",
            Self::GeneralHermitian => "general",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Gate {
    Hadamard(usize),
    /// `diag(1, e^{i angle})` on `target`, optionally controlled.
    PhaseRot {
        control: Option<usize>,
        target: usize,
        angle: f64,
    },
    Cnot {
        control: usize,
        target: usize,
    },
    /// `Ry(θ) = exp(-i θ σ_y / 2)` on `target` when `control` is set.
    ControlledRy {
        control: usize,
        target: usize,
        theta: f64,
    },
    /// Dense unitary on `targets` (first target is the least significant bit).
    ControlledUnitary {
        control: usize,
        targets: Vec<usize>,
        unitary: Arc<ComplexMatrix>,
    },
    /// Loads `amplitudes` into `targets`, which must be in `|0…0⟩`.
    StatePrep {
        targets: Vec<usize>,
        amplitudes: Vec<C64>,
    },
}

impl Gate {
    pub fn controlled_unitary(
        control: usize,
        targets: Vec<usize>,
        unitary: Arc<ComplexMatrix>,
    ) -> Result<Self, CircuitError> {
        if unitary.dim() != 1 << targets.len() {
            return Err(CircuitError::RegisterTooSmall {
                qubits: targets.len(),
                dim: unitary.dim(),
            });
        }
        let deviation = unitary.unitarity_deviation();
        if deviation > UNITARY_TOL {
            return Err(CircuitError::NonUnitary { deviation });
        }
        Ok(Self::ControlledUnitary {
            control,
            targets,
            unitary,
        })
    }

    pub fn qubits(&self) -> Vec<usize> {
        match self {
            Gate::Hadamard(q) => vec![*q],
            Gate::PhaseRot {
                control, target, ..
            } => control.iter().copied().chain([*target]).collect(),
            Gate::Cnot { control, target } | Gate::ControlledRy { control, target, .. } => {
                vec![*control, *target]
            }
            Gate::ControlledUnitary {
                control, targets, ..
            } => std::iter::once(*control).chain(targets.iter().copied()).collect(),
            Gate::StatePrep { targets, .. } => targets.clone(),
        }
    }

    pub fn validate(&self, total: usize) -> Result<(), CircuitError> {
        let qubits = self.qubits();
        for (i, &q) in qubits.iter().enumerate() {
            if q >= total {
                return Err(CircuitError::IndexOutOfRange { qubit: q, total });
            }
            if qubits[..i].contains(&q) {
                return Err(CircuitError::DuplicateQubit(q));
            }
        }
        match self {
            Gate::ControlledUnitary {
                targets, unitary, ..
            } => {
                if unitary.dim() != 1 << targets.len() {
                    return Err(CircuitError::RegisterTooSmall {
                        qubits: targets.len(),
                        dim: unitary.dim(),
                    });
                }
                let deviation = unitary.unitarity_deviation();
                if deviation > UNITARY_TOL {
                    return Err(CircuitError::NonUnitary { deviation });
                }
            }
            Gate::StatePrep {
                targets,
                amplitudes,
            } => {
                if amplitudes.len() != 1 << targets.len() {
                    return Err(CircuitError::RegisterTooSmall {
                        qubits: targets.len(),
                        dim: amplitudes.len(),
                    });
                }
            }
            _ => {}
        }
        Ok(())
    }

    /// The inverse gate. State preparation is not a unitary on the full
    /// register and has none.
    pub fn adjoint(&self) -> Result<Gate, CircuitError> {
        Ok(match self {
            Gate::Hadamard(q) => Gate::Hadamard(*q),
            Gate::PhaseRot {
                control,
                target,
                angle,
            } => Gate::PhaseRot {
                control: *control,
                target: *target,
                angle: -angle,
            },
            Gate::Cnot { control, target } => Gate::Cnot {
                control: *control,
                target: *target,
            },
            Gate::ControlledRy {
                control,
                target,
                theta,
            } => Gate::ControlledRy {
                control: *control,
                target: *target,
                theta: -theta,
            },
            Gate::ControlledUnitary {
                control,
                targets,
                unitary,
            } => Gate::ControlledUnitary {
                control: *control,
                targets: targets.clone(),
                unitary: Arc::new(unitary.adjoint()),
            },
            Gate::StatePrep { .. } => return Err(CircuitError::NoAdjoint("StatePrep".into())),
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Gate::Hadamard(_) => "H",
            Gate::PhaseRot { control: None, .. } => "P",
            Gate::PhaseRot { .. } => "CP",
            Gate::Cnot { .. } => "CNOT",
            Gate::ControlledRy { .. } => "CRy",
            Gate::ControlledUnitary { .. } => "CU",
            Gate::StatePrep { .. } => "PREP",
        }
    }
}

/// Pipeline stage, in execution order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Stage {
    IcPrep,
    Qpe,
    SimAd,
    InvQpe,
}

#[derive(Clone, Debug)]
pub struct TaggedGate {
    pub stage: Stage,
    pub gate: Gate,
}

/// Ordered gate list over a fixed layout. Stage tags never go backwards.
#[derive(Clone, Debug)]
pub struct Circuit {
    layout: RegisterLayout,
    gates: Vec<TaggedGate>,
}

impl Circuit {
    pub fn new(layout: RegisterLayout) -> Self {
        Self {
            layout,
            gates: Vec::new(),
        }
    }

    pub fn layout(&self) -> RegisterLayout {
        self.layout
    }

    pub fn gates(&self) -> &[TaggedGate] {
        &self.gates
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub fn push(&mut self, stage: Stage, gate: Gate) -> Result<(), CircuitError> {
        if let Some(last) = self.gates.last() {
            if stage < last.stage {
                return Err(CircuitError::StageOrder {
                    last: last.stage,
                    found: stage,
                });
            }
        }
        gate.validate(self.layout.total())?;
        self.gates.push(TaggedGate { stage, gate });
        Ok(())
    }

    pub fn extend<I>(&mut self, stage: Stage, gates: I) -> Result<(), CircuitError>
    where
        I: IntoIterator<Item = Gate>,
    {
        for g in gates {
            self.push(stage, g)?;
        }
        Ok(())
    }

    pub fn stage(&self, stage: Stage) -> impl Iterator<Item = &Gate> {
        self.gates
            .iter()
            .filter(move |g| g.stage == stage)
            .map(|g| &g.gate)
    }

    pub fn stage_len(&self, stage: Stage) -> usize {
        self.stage(stage).count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout_index_map_is_bijective() {
        let layout = RegisterLayout::new(2, 3).unwrap();
        let mut seen = vec![false; layout.total()];
        for r in [Register::Work, Register::Phase, Register::Environment] {
            for q in layout.qubits(r) {
                assert!(!seen[q]);
                seen[q] = true;
                assert_eq!(layout.register_of(q).unwrap().0, r);
            }
        }
        assert!(seen.iter().all(|&s| s));
        assert_eq!(layout.total(), 8);
        assert!(layout.register_of(8).is_none());
    }

    #[test]
    fn layout_rejects_empty_registers() {
        assert!(RegisterLayout::new(0, 2).is_err());
        assert!(RegisterLayout::new(1, 0).is_err());
        assert_eq!(RegisterLayout::for_dimension(3, 2).unwrap().n_work(), 2);
        assert_eq!(RegisterLayout::for_dimension(1, 2).unwrap().n_work(), 1);
    }

    #[test]
    fn gate_validation() {
        assert!(matches!(
            Gate::Cnot { control: 1, target: 1 }.validate(3),
            Err(CircuitError::DuplicateQubit(1))
        ));
        assert!(matches!(
            Gate::Hadamard(5).validate(3),
            Err(CircuitError::IndexOutOfRange { qubit: 5, total: 3 })
        ));
        let bad = Arc::new(ComplexMatrix::from_real_diag(&[1.0, 2.0]));
        assert!(matches!(
            Gate::controlled_unitary(0, vec![1], bad),
            Err(CircuitError::NonUnitary { .. })
        ));
    }

    #[test]
    fn stage_order_enforced() {
        let mut c = Circuit::new(RegisterLayout::new(1, 1).unwrap());
        c.push(Stage::SimAd, Gate::Hadamard(0)).unwrap();
        assert!(matches!(
            c.push(Stage::Qpe, Gate::Hadamard(0)),
            Err(CircuitError::StageOrder { .. })
        ));
    }

    #[test]
    fn adjoint_negates_angles() {
        let g = Gate::ControlledRy {
            control: 0,
            target: 1,
            theta: 0.3,
        };
        assert_eq!(
            g.adjoint().unwrap(),
            Gate::ControlledRy {
                control: 0,
                target: 1,
                theta: -0.3
            }
        );
        let prep = Gate::StatePrep {
            targets: vec![0],
            amplitudes: vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0)],
        };
        assert!(prep.adjoint().is_err());
    }
}
