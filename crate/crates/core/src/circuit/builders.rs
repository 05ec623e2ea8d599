use std::f64::consts::PI;
use std::sync::Arc;

use super::{Circuit, CircuitError, EigenvalueMode, Gate, RegisterLayout, Stage};
use crate::numerics::{hermitian_eig, ComplexMatrix, ComplexVector, SpectralData, C64};

/// Phase `φ ∈ [0, 1)` with which eigenvalue `a` appears in the spectrum of
/// `M`, i.e. `M v = e^{i 2π φ} v`.
pub fn eigenphase(a: f64, norm_a: f64, mode: EigenvalueMode, big_l: usize) -> f64 {
    let a_bar = a / norm_a;
    match mode {
        EigenvalueMode::RestrictedPositive => (1.0 - a_bar).rem_euclid(1.0),
        EigenvalueMode::GeneralHermitian => {
            let l = big_l as f64;
            ((l - 1.0) / (2.0 * l) * (1.0 - a_bar)).rem_euclid(1.0)
        }
    }
}

/// Nearest phase-register basis state for phase `φ`, modulo `L`.
pub fn nearest_grid_index(phi: f64, big_l: usize) -> usize {
    ((phi * big_l as f64).round() as usize) % big_l
}

/// The phase-estimation unitary for `A`.
///
/// Restricted: `exp(-i2π A/‖A‖)`. General:
/// `exp(-i2π((L-1)/(2L) A/‖A‖ + (L+1)/(2L) I))`. In both cases `a = ‖A‖`
/// maps to phase 0.
pub fn build_m(
    a: &ComplexMatrix,
    norm_a: f64,
    mode: EigenvalueMode,
    big_l: usize,
) -> Result<ComplexMatrix, CircuitError> {
    let spec = hermitian_eig(a, crate::numerics::HERMITIAN_TOL)?;
    build_m_from_spectrum(&spec, norm_a, mode, big_l)
}

pub fn build_m_from_spectrum(
    spec: &SpectralData,
    norm_a: f64,
    mode: EigenvalueMode,
    big_l: usize,
) -> Result<ComplexMatrix, CircuitError> {
    if norm_a.is_nan() || norm_a <= 0.0 {
        return Err(CircuitError::ZeroNorm(norm_a));
    }
    let l = big_l as f64;
    let m = spec.apply_function(|a| {
        let a_bar = a / norm_a;
        let exponent = match mode {
            EigenvalueMode::RestrictedPositive => a_bar,
            EigenvalueMode::GeneralHermitian => {
                (l - 1.0) / (2.0 * l) * a_bar + (l + 1.0) / (2.0 * l)
            }
        };
        C64::from_polar(1.0, -2.0 * PI * exponent)
    });
    let deviation = m.unitarity_deviation();
    if deviation > super::UNITARY_TOL {
        return Err(CircuitError::NonUnitary { deviation });
    }
    Ok(m)
}

/// Rotation angle of the `k`-th damping block, chosen so that
/// `cos(θ_k/2)` is the per-qubit survival amplitude.
pub fn theta_k(
    norm_a: f64,
    t: f64,
    big_l: usize,
    k: usize,
    mode: EigenvalueMode,
) -> Result<f64, CircuitError> {
    if t.is_nan() || t < 0.0 {
        return Err(CircuitError::NegativeTime(t));
    }
    let l = big_l as f64;
    let weight = f64::powi(2.0, k as i32);
    let rate = match mode {
        EigenvalueMode::RestrictedPositive => norm_a * 2.0 * weight * t / l,
        EigenvalueMode::GeneralHermitian => norm_a * 4.0 * weight * t / (l - 1.0),
    };
    Ok((2.0 * (-rate).exp() - 1.0).clamp(-1.0, 1.0).acos())
}

/// All `l` damping angles, index `k` for phase qubit `k`.
pub fn thetas(
    norm_a: f64,
    t: f64,
    l: usize,
    mode: EigenvalueMode,
) -> Result<Vec<f64>, CircuitError> {
    let big_l = 1usize << l;
    (0..l).map(|k| theta_k(norm_a, t, big_l, k, mode)).collect()
}

/// Loads `x0 / ‖x0‖`, zero-padded, onto the work register.
pub fn build_ic_prep(x0: &ComplexVector, layout: &RegisterLayout) -> Result<Vec<Gate>, CircuitError> {
    if x0.dim() > layout.work_dim() {
        return Err(CircuitError::RegisterTooSmall {
            qubits: layout.n_work(),
            dim: x0.dim(),
        });
    }
    let amplitudes = x0.normalized()?.padded(layout.work_dim()).into_vec();
    Ok(vec![Gate::StatePrep {
        targets: layout.qubits(super::Register::Work),
        amplitudes,
    }])
}

/// A swap-free QFT. The output qubit order is reversed relative to the
/// textbook transform; `relabel[m]` is the physical qubit that holds output
/// bit `m` (forward) or must hold input bit `m` (inverse).
#[derive(Clone, Debug)]
pub struct QftFragment {
    pub gates: Vec<Gate>,
    pub relabel: Vec<usize>,
}

/// QFT on `qubits` (`qubits[0]` least significant): Hadamard plus a ladder
/// of controlled phase rotations, `Θ(l²)` gates.
pub fn build_qft(qubits: &[usize], inverse: bool) -> QftFragment {
    let l = qubits.len();
    let mut gates = Vec::with_capacity(l * (l + 1) / 2);
    for j in (0..l).rev() {
        gates.push(Gate::Hadamard(qubits[j]));
        for m in (0..j).rev() {
            gates.push(Gate::PhaseRot {
                control: Some(qubits[m]),
                target: qubits[j],
                angle: PI / f64::powi(2.0, (j - m) as i32),
            });
        }
    }
    if inverse {
        gates = gates
            .iter()
            .rev()
            .map(|g| g.adjoint().expect("QFT gates are unitary"))
            .collect();
    }
    let relabel = (0..l).map(|m| qubits[l - 1 - m]).collect();
    QftFragment { gates, relabel }
}

/// Phase estimation of `M` on the work register.
///
/// The controlled `M^{2^k}` blocks use powers precomputed by repeated
/// squaring. Because the inverse QFT is swap-free, the block for `M^{2^k}`
/// is controlled by the qubit the relabeling assigns to bit `k`; the phase
/// register then ends in natural order, phase qubit `k` holding weight `2^k`.
pub fn build_qpe(m: &ComplexMatrix, layout: &RegisterLayout) -> Result<Vec<Gate>, CircuitError> {
    if m.dim() > layout.work_dim() {
        return Err(CircuitError::RegisterTooSmall {
            qubits: layout.n_work(),
            dim: m.dim(),
        });
    }
    let deviation = m.unitarity_deviation();
    if deviation > super::UNITARY_TOL {
        return Err(CircuitError::NonUnitary { deviation });
    }
    let phase = layout.qubits(super::Register::Phase);
    let work = layout.qubits(super::Register::Work);
    let iqft = build_qft(&phase, true);

    let mut gates: Vec<Gate> = phase.iter().map(|&q| Gate::Hadamard(q)).collect();
    let mut power = m.pad_with_identity(layout.work_dim());
    for k in 0..layout.l_phase() {
        if k > 0 {
            power = power.matmul(&power);
        }
        gates.push(Gate::controlled_unitary(
            iqft.relabel[k],
            work.clone(),
            Arc::new(power.clone()),
        )?);
    }
    gates.extend(iqft.gates);
    Ok(gates)
}

/// Damping chain: for each `k`, `CRy(phase_k → env_k, θ_k)` then
/// `CNOT(env_k → phase_k)`. Post-selecting `env_k = 0` applies
/// `diag(1, cos(θ_k/2))` to phase qubit `k`.
pub fn build_sim_ad_chain(
    thetas: &[f64],
    layout: &RegisterLayout,
) -> Result<Vec<Gate>, CircuitError> {
    if thetas.len() != layout.l_phase() {
        return Err(CircuitError::LengthMismatch {
            expected: layout.l_phase(),
            found: thetas.len(),
        });
    }
    let mut gates = Vec::with_capacity(2 * thetas.len());
    for (k, &theta) in thetas.iter().enumerate() {
        let (p, e) = (layout.phase_qubit(k), layout.env_qubit(k));
        gates.push(Gate::ControlledRy {
            control: p,
            target: e,
            theta,
        });
        gates.push(Gate::Cnot {
            control: e,
            target: p,
        });
    }
    Ok(gates)
}

/// Gate-wise adjoint in reverse order.
pub fn adjoint_fragment(gates: &[Gate]) -> Result<Vec<Gate>, CircuitError> {
    gates.iter().rev().map(Gate::adjoint).collect()
}

/// IC preparation → QPE → damping chain → inverse QPE.
pub fn assemble_full_circuit(
    x0: &ComplexVector,
    m: &ComplexMatrix,
    thetas: &[f64],
    layout: RegisterLayout,
) -> Result<Circuit, CircuitError> {
    let qpe = build_qpe(m, &layout)?;
    let inv_qpe = adjoint_fragment(&qpe)?;
    let mut circuit = Circuit::new(layout);
    circuit.extend(Stage::IcPrep, build_ic_prep(x0, &layout)?)?;
    circuit.extend(Stage::Qpe, qpe)?;
    circuit.extend(Stage::SimAd, build_sim_ad_chain(thetas, &layout)?)?;
    circuit.extend(Stage::InvQpe, inv_qpe)?;
    Ok(circuit)
}
