//! Exact dense statevector simulation with post-selection, sampling and
//! partial traces.

mod density;

use rand::Rng;

use crate::circuit::{Circuit, CircuitError, Gate, Register, RegisterLayout};
use crate::numerics::{ComplexMatrix, NumericsError, C64, ZERO};

pub use density::DensityMatrix;

/// Below this a projected probability counts as an impossible outcome:
/// amplitudes of order 1e-12 are indistinguishable from accumulated rounding.
pub const PROBABILITY_FLOOR: f64 = 1e-24;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EngineError {
    #[error("qubit {qubit} out of range for {total} qubits")]
    IndexOutOfRange { qubit: usize, total: usize },
    #[error("post-selection outcome is impossible (probability {probability:e})")]
    ImpossibleOutcome { probability: f64 },
    #[error("state preparation requires its target register in |0…0⟩ (stray weight {weight:e})")]
    StatePrepPrecondition { weight: f64 },
    #[error("expected {expected} amplitudes, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

/// Neumaier-compensated sum.
pub(crate) fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// A set of qubits, kept sorted. Outcome bit `r` of a selection refers to
/// the `r`-th smallest qubit index.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Selector(Vec<usize>);

impl Selector {
    pub fn registers(layout: &RegisterLayout, registers: &[Register]) -> Self {
        let mut q: Vec<usize> = registers.iter().flat_map(|&r| layout.qubits(r)).collect();
        q.sort_unstable();
        q.dedup();
        Self(q)
    }

    pub fn qubits(mut qubits: Vec<usize>) -> Self {
        qubits.sort_unstable();
        qubits.dedup();
        Self(qubits)
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    fn mask(&self) -> usize {
        self.0.iter().fold(0, |m, &q| m | (1 << q))
    }

    /// Packs the selected bits of a full basis index into a local index.
    fn extract(&self, index: usize) -> usize {
        self.0
            .iter()
            .enumerate()
            .fold(0, |acc, (r, &q)| acc | (((index >> q) & 1) << r))
    }

    fn validate(&self, total: usize) -> Result<(), EngineError> {
        match self.0.iter().find(|&&q| q >= total) {
            Some(&qubit) => Err(EngineError::IndexOutOfRange { qubit, total }),
            None => Ok(()),
        }
    }
}

#[derive(Clone, Debug)]
pub struct PostselectOutcome {
    /// Renormalised.
    pub state: StateVector,
    /// Squared norm of the projected vector before renormalisation.
    pub probability: f64,
}

/// `2^total` amplitudes over a [`RegisterLayout`].
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    layout: RegisterLayout,
    amps: Vec<C64>,
}

impl StateVector {
    /// `|0…0⟩` on every register.
    pub fn zero(layout: RegisterLayout) -> Self {
        let mut amps = vec![ZERO; 1 << layout.total()];
        amps[0] = C64::new(1.0, 0.0);
        Self { layout, amps }
    }

    pub fn from_amplitudes(layout: RegisterLayout, amps: Vec<C64>) -> Result<Self, EngineError> {
        let expected = 1 << layout.total();
        if amps.len() != expected {
            return Err(EngineError::DimensionMismatch {
                expected,
                found: amps.len(),
            });
        }
        Ok(Self { layout, amps })
    }

    pub fn layout(&self) -> RegisterLayout {
        self.layout
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        compensated_sum(self.amps.iter().map(|z| z.norm_sqr()))
    }

    pub fn apply_gate(&mut self, gate: &Gate) -> Result<(), EngineError> {
        gate.validate(self.layout.total())?;
        match gate {
            Gate::Hadamard(q) => {
                let h = std::f64::consts::FRAC_1_SQRT_2;
                self.apply_single(*q, 0, [[h, h], [h, -h]].map(|r| r.map(|x| C64::new(x, 0.0))));
            }
            Gate::PhaseRot {
                control,
                target,
                angle,
            } => {
                let phase = C64::from_polar(1.0, *angle);
                let mask = (1 << target) | control.map_or(0, |c| 1 << c);
                for (i, a) in self.amps.iter_mut().enumerate() {
                    if i & mask == mask {
                        *a *= phase;
                    }
                }
            }
            Gate::Cnot { control, target } => {
                let (cbit, tbit) = (1 << control, 1 << target);
                for i in 0..self.amps.len() {
                    if i & cbit != 0 && i & tbit == 0 {
                        self.amps.swap(i, i | tbit);
                    }
                }
            }
            Gate::ControlledRy {
                control,
                target,
                theta,
            } => {
                let (s, c) = (theta / 2.0).sin_cos();
                let m = [[c, -s], [s, c]].map(|r| r.map(|x| C64::new(x, 0.0)));
                self.apply_single(*target, 1 << control, m);
            }
            Gate::ControlledUnitary {
                control,
                targets,
                unitary,
            } => self.apply_block(Some(*control), targets, unitary),
            Gate::StatePrep {
                targets,
                amplitudes,
            } => self.prepare(targets, amplitudes)?,
        }
        Ok(())
    }

    /// 2×2 kernel on `target`, restricted to indices where every bit of
    /// `control_mask` is set.
    fn apply_single(&mut self, target: usize, control_mask: usize, m: [[C64; 2]; 2]) {
        let tbit = 1 << target;
        for i in 0..self.amps.len() {
            if i & tbit != 0 || i & control_mask != control_mask {
                continue;
            }
            let j = i | tbit;
            let (a, b) = (self.amps[i], self.amps[j]);
            self.amps[i] = m[0][0] * a + m[0][1] * b;
            self.amps[j] = m[1][0] * a + m[1][1] * b;
        }
    }

    fn block_offsets(targets: &[usize]) -> Vec<usize> {
        (0..1usize << targets.len())
            .map(|j| {
                targets
                    .iter()
                    .enumerate()
                    .fold(0, |acc, (r, &q)| acc | (((j >> r) & 1) << q))
            })
            .collect()
    }

    fn apply_block(&mut self, control: Option<usize>, targets: &[usize], u: &ComplexMatrix) {
        let offsets = Self::block_offsets(targets);
        let tmask = targets.iter().fold(0, |m, &q| m | (1 << q));
        let cmask = control.map_or(0, |c| 1 << c);
        let dim = offsets.len();
        let mut local = vec![ZERO; dim];
        for base in 0..self.amps.len() {
            if base & tmask != 0 || base & cmask != cmask {
                continue;
            }
            for (slot, &off) in local.iter_mut().zip(&offsets) {
                *slot = self.amps[base | off];
            }
            for (r, &off) in offsets.iter().enumerate() {
                self.amps[base | off] = u.row(r).iter().zip(&local).map(|(a, b)| a * b).sum();
            }
        }
    }

    fn prepare(&mut self, targets: &[usize], amplitudes: &[C64]) -> Result<(), EngineError> {
        let offsets = Self::block_offsets(targets);
        let tmask = targets.iter().fold(0, |m, &q| m | (1 << q));
        let stray = compensated_sum(
            self.amps
                .iter()
                .enumerate()
                .filter(|(i, _)| i & tmask != 0)
                .map(|(_, z)| z.norm_sqr()),
        );
        if stray > 1e-24 {
            return Err(EngineError::StatePrepPrecondition { weight: stray });
        }
        for base in 0..self.amps.len() {
            if base & tmask != 0 {
                continue;
            }
            let a = self.amps[base];
            for (&off, &amp) in offsets.iter().zip(amplitudes) {
                self.amps[base | off] = a * amp;
            }
        }
        Ok(())
    }

    pub fn run_gates(&mut self, gates: &[Gate]) -> Result<(), EngineError> {
        gates.iter().try_for_each(|g| self.apply_gate(g))
    }

    pub fn run_circuit(&mut self, circuit: &Circuit) -> Result<(), EngineError> {
        if circuit.layout() != self.layout {
            return Err(EngineError::DimensionMismatch {
                expected: 1 << self.layout.total(),
                found: 1 << circuit.layout().total(),
            });
        }
        circuit
            .gates()
            .iter()
            .try_for_each(|g| self.apply_gate(&g.gate))
    }

    /// Probability of each outcome of the selected qubits.
    pub fn marginal_probabilities(&self, selector: &Selector) -> Vec<f64> {
        let mut buckets: Vec<Vec<f64>> = vec![Vec::new(); 1 << selector.len()];
        for (i, z) in self.amps.iter().enumerate() {
            buckets[selector.extract(i)].push(z.norm_sqr());
        }
        buckets.into_iter().map(compensated_sum).collect()
    }

    /// Projects every selected qubit onto `|0⟩` and renormalises.
    pub fn postselect_zeros(&self, selector: &Selector) -> Result<PostselectOutcome, EngineError> {
        selector.validate(self.layout.total())?;
        self.project(selector, 0)
    }

    fn project(&self, selector: &Selector, outcome: usize) -> Result<PostselectOutcome, EngineError> {
        let mut amps: Vec<C64> = self
            .amps
            .iter()
            .enumerate()
            .map(|(i, &z)| if selector.extract(i) == outcome { z } else { ZERO })
            .collect();
        let probability = compensated_sum(amps.iter().map(|z| z.norm_sqr()));
        if !(probability >= PROBABILITY_FLOOR) {
            return Err(EngineError::ImpossibleOutcome { probability });
        }
        let scale = 1.0 / probability.sqrt();
        amps.iter_mut().for_each(|z| *z *= scale);
        Ok(PostselectOutcome {
            state: Self {
                layout: self.layout,
                amps,
            },
            probability,
        })
    }

    /// Measures the selected qubits once. Returns the outcome (bit `r` for the
    /// `r`-th selected qubit) and the collapsed, renormalised state.
    pub fn sample_measurement<R: Rng + ?Sized>(
        &self,
        selector: &Selector,
        rng: &mut R,
    ) -> Result<(usize, StateVector), EngineError> {
        selector.validate(self.layout.total())?;
        let probs = self.marginal_probabilities(selector);
        let outcome = draw(&cumulative(&probs), rng);
        let collapsed = self.project(selector, outcome)?;
        Ok((outcome, collapsed.state))
    }

    /// Draws `shots` independent outcomes from the marginal distribution of
    /// the selected qubits without collapsing `self`.
    pub fn sample_outcomes<R: Rng + ?Sized>(
        &self,
        selector: &Selector,
        shots: usize,
        rng: &mut R,
    ) -> Result<Vec<usize>, EngineError> {
        selector.validate(self.layout.total())?;
        let cdf = cumulative(&self.marginal_probabilities(selector));
        Ok((0..shots).map(|_| draw(&cdf, rng)).collect())
    }

    /// Partial trace over every qubit not in `selector`.
    pub fn reduced_density(&self, selector: &Selector) -> Result<DensityMatrix, EngineError> {
        selector.validate(self.layout.total())?;
        let kept_dim = 1usize << selector.len();
        let rest: Vec<usize> = (0..self.layout.total())
            .filter(|q| !selector.as_slice().contains(q))
            .collect();
        let rest_sel = Selector(rest);
        let rest_dim = 1usize << rest_sel.len();
        // psi[rest][kept]
        let mut psi = vec![ZERO; rest_dim * kept_dim];
        for (i, &z) in self.amps.iter().enumerate() {
            psi[rest_sel.extract(i) * kept_dim + selector.extract(i)] = z;
        }
        let mut rho = ComplexMatrix::zeros(kept_dim);
        for r in 0..rest_dim {
            let row = &psi[r * kept_dim..(r + 1) * kept_dim];
            for (a, &za) in row.iter().enumerate() {
                if za == ZERO {
                    continue;
                }
                for (b, &zb) in row.iter().enumerate() {
                    rho[(a, b)] += za * zb.conj();
                }
            }
        }
        Ok(DensityMatrix::new(rho)?)
    }

    /// `⟨ψ| O |ψ⟩` for an observable on the selected qubits.
    pub fn expectation_value(
        &self,
        selector: &Selector,
        observable: &ComplexMatrix,
    ) -> Result<f64, EngineError> {
        self.reduced_density(selector)?.expectation(observable)
    }

    /// Population of every basis state in which some selected qubit is `1`.
    pub fn excited_population(&self, selector: &Selector) -> f64 {
        let mask = selector.mask();
        compensated_sum(
            self.amps
                .iter()
                .enumerate()
                .filter(|(i, _)| i & mask != 0)
                .map(|(_, z)| z.norm_sqr()),
        )
    }
}

fn cumulative(probs: &[f64]) -> Vec<f64> {
    let total: f64 = compensated_sum(probs.iter().copied());
    let mut acc = 0.0;
    probs
        .iter()
        .map(|p| {
            acc += p / total;
            acc
        })
        .collect()
}

fn draw<R: Rng + ?Sized>(cdf: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    cdf.iter()
        .position(|&c| u < c)
        .unwrap_or_else(|| cdf.iter().rposition(|&c| c > 0.0).unwrap_or(0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{build_qft, build_sim_ad_chain};
    use crate::oracle::instances::{random_hermitian, random_state, random_unitary};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::sync::Arc;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn layout(n: usize, l: usize) -> RegisterLayout {
        RegisterLayout::new(n, l).unwrap()
    }

    fn basis(layout: RegisterLayout, index: usize) -> StateVector {
        let mut amps = vec![ZERO; 1 << layout.total()];
        amps[index] = c(1.0);
        StateVector::from_amplitudes(layout, amps).unwrap()
    }

    #[test]
    fn hadamard_on_zero() {
        let mut s = StateVector::zero(layout(1, 1));
        s.apply_gate(&Gate::Hadamard(0)).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((s.amplitudes()[0] - c(h)).norm() < 1e-15);
        assert!((s.amplitudes()[1] - c(h)).norm() < 1e-15);
    }

    #[test]
    fn cnot_flips_target() {
        // |10> with qubit 1 as control: index 0b10 -> 0b11
        let mut s = basis(layout(1, 1), 0b010);
        s.apply_gate(&Gate::Cnot { control: 1, target: 0 }).unwrap();
        assert_eq!(s.amplitudes()[0b011], c(1.0));
    }

    #[test]
    fn out_of_range_gate() {
        let mut s = StateVector::zero(layout(1, 1));
        assert!(matches!(
            s.apply_gate(&Gate::Hadamard(7)),
            Err(EngineError::Circuit(CircuitError::IndexOutOfRange { .. }))
        ));
    }

    #[test]
    fn random_block_preserves_norm() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let lay = layout(1, 1);
        let mut s = StateVector::from_amplitudes(lay, random_state(&mut rng, 8)).unwrap();
        let u = Arc::new(random_unitary(&mut rng, 4));
        s.apply_gate(&Gate::controlled_unitary(2, vec![0, 1], u).unwrap())
            .unwrap();
        assert!((s.norm_sqr() - 1.0).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn every_gate_preserves_norm(seed in any::<u64>(), kind in 0usize..5, angle in -7.0f64..7.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let lay = layout(2, 2);
            let mut s = StateVector::from_amplitudes(lay, random_state(&mut rng, 64)).unwrap();
            let gate = match kind {
                0 => Gate::Hadamard(3),
                1 => Gate::PhaseRot { control: Some(1), target: 4, angle },
                2 => Gate::Cnot { control: 5, target: 0 },
                3 => Gate::ControlledRy { control: 2, target: 4, theta: angle },
                _ => Gate::controlled_unitary(3, vec![0, 1], Arc::new(random_unitary(&mut rng, 4))).unwrap(),
            };
            s.apply_gate(&gate).unwrap();
            prop_assert!((s.norm_sqr() - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn empty_circuit_is_noop() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let lay = layout(1, 1);
        let amps = random_state(&mut rng, 8);
        let mut s = StateVector::from_amplitudes(lay, amps.clone()).unwrap();
        s.run_circuit(&Circuit::new(lay)).unwrap();
        assert_eq!(s.amplitudes(), &amps[..]);
    }

    #[test]
    fn qft_round_trip_through_run_gates() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let lay = layout(3, 1);
        let amps = random_state(&mut rng, 32);
        let mut s = StateVector::from_amplitudes(lay, amps.clone()).unwrap();
        let q = lay.qubits(Register::Work);
        s.run_gates(&build_qft(&q, false).gates).unwrap();
        s.run_gates(&build_qft(&q, true).gates).unwrap();
        for (a, b) in s.amplitudes().iter().zip(&amps) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn state_prep_requires_zero_register() {
        let mut s = basis(layout(1, 1), 1);
        let err = s.apply_gate(&Gate::StatePrep {
            targets: vec![0],
            amplitudes: vec![c(0.6), c(0.8)],
        });
        assert!(matches!(err, Err(EngineError::StatePrepPrecondition { .. })));
    }

    #[test]
    fn postselect_product_state() {
        let lay = layout(1, 1);
        let mut s = StateVector::zero(lay);
        s.apply_gate(&Gate::Hadamard(0)).unwrap();
        let env = Selector::registers(&lay, &[Register::Environment]);
        let out = s.postselect_zeros(&env).unwrap();
        assert!((out.probability - 1.0).abs() < 1e-15);
        assert_eq!(out.state, s);
    }

    #[test]
    fn postselect_half() {
        let lay = layout(1, 1);
        let e = lay.env_qubit(0);
        // (|0>_env|0> + |1>_env|1>)/√2 on (env, work)
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let mut amps = vec![ZERO; 8];
        amps[0] = c(h);
        amps[(1 << e) | 1] = c(h);
        let s = StateVector::from_amplitudes(lay, amps).unwrap();
        let out = s
            .postselect_zeros(&Selector::registers(&lay, &[Register::Environment]))
            .unwrap();
        assert!((out.probability - 0.5).abs() < 1e-15);
        assert!((out.state.amplitudes()[0] - c(1.0)).norm() < 1e-15);
    }

    #[test]
    fn postselect_impossible() {
        let lay = layout(1, 1);
        let s = basis(lay, 1 << lay.env_qubit(0));
        assert!(matches!(
            s.postselect_zeros(&Selector::registers(&lay, &[Register::Environment])),
            Err(EngineError::ImpossibleOutcome { .. })
        ));
    }

    #[test]
    fn postselect_probability_is_kept_weight() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let lay = layout(2, 2);
        let s = StateVector::from_amplitudes(lay, random_state(&mut rng, 64)).unwrap();
        let sel = Selector::registers(&lay, &[Register::Environment, Register::Phase]);
        let out = s.postselect_zeros(&sel).unwrap();
        let expect: f64 = (0..4).map(|i| s.amplitudes()[i].norm_sqr()).sum();
        assert!((out.probability - expect).abs() < 1e-15);
        assert!((out.state.norm_sqr() - 1.0).abs() < 1e-14);
    }

    /// Post-selecting each environment qubit right after its damping block
    /// matches a single post-selection at the end.
    #[test]
    fn deferred_measurement_equivalence() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let lay = layout(1, 3);
        let thetas = [0.4, 1.1, 2.5];
        let mut sub = random_state(&mut rng, 16);
        sub.resize(1 << lay.total(), ZERO);
        let init = StateVector::from_amplitudes(lay, sub).unwrap();
        let chain = build_sim_ad_chain(&thetas, &lay).unwrap();

        let mut deferred = init.clone();
        deferred.run_gates(&chain).unwrap();
        let end = deferred
            .postselect_zeros(&Selector::registers(&lay, &[Register::Environment]))
            .unwrap();

        let mut step = init;
        let mut prob = 1.0;
        for k in 0..3 {
            step.run_gates(&chain[2 * k..2 * k + 2]).unwrap();
            let out = step
                .postselect_zeros(&Selector::qubits(vec![lay.env_qubit(k)]))
                .unwrap();
            prob *= out.probability;
            step = out.state;
        }
        assert!((prob - end.probability).abs() < 1e-12);
        for (a, b) in step.amplitudes().iter().zip(end.state.amplitudes()) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn basis_state_measurement_is_certain() {
        let lay = layout(2, 1);
        let s = basis(lay, 0b1_0_10);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let (bits, collapsed) = s
            .sample_measurement(&Selector::registers(&lay, &[Register::Work]), &mut rng)
            .unwrap();
        assert_eq!(bits, 0b10);
        assert_eq!(collapsed, s);
    }

    #[test]
    fn sampled_frequency_within_binomial_band() {
        let lay = layout(1, 1);
        let mut s = StateVector::zero(lay);
        s.apply_gate(&Gate::Hadamard(0)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let outcomes = s
            .sample_outcomes(&Selector::qubits(vec![0]), 10_000, &mut rng)
            .unwrap();
        let zeros = outcomes.iter().filter(|&&o| o == 0).count() as f64 / 1e4;
        assert!((zeros - 0.5).abs() <= 3.0 * 0.005);
    }

    #[test]
    fn sampling_is_deterministic_for_seed() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let lay = layout(2, 1);
        let s = StateVector::from_amplitudes(lay, random_state(&mut rng, 16)).unwrap();
        let sel = Selector::registers(&lay, &[Register::Work, Register::Phase]);
        let a = s
            .sample_outcomes(&sel, 500, &mut ChaCha8Rng::seed_from_u64(99))
            .unwrap();
        let b = s
            .sample_outcomes(&sel, 500, &mut ChaCha8Rng::seed_from_u64(99))
            .unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn reduced_density_of_product_state() {
        let lay = layout(1, 1);
        let mut s = StateVector::zero(lay);
        s.apply_gate(&Gate::Hadamard(0)).unwrap();
        s.apply_gate(&Gate::Hadamard(2)).unwrap();
        let rho = s
            .reduced_density(&Selector::registers(&lay, &[Register::Work]))
            .unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert!((rho.matrix()[(i, j)] - c(0.5)).norm() < 1e-15);
            }
        }
        assert!((rho.purity() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn reduced_density_of_bell_pair() {
        let lay = layout(1, 1);
        let mut s = StateVector::zero(lay);
        s.apply_gate(&Gate::Hadamard(0)).unwrap();
        s.apply_gate(&Gate::Cnot { control: 0, target: 1 }).unwrap();
        let rho = s.reduced_density(&Selector::qubits(vec![0])).unwrap();
        let half = ComplexMatrix::identity(2).scale(c(0.5));
        assert!(rho.matrix().max_abs_diff(&half) < 1e-12);
    }

    #[test]
    fn reduced_density_trace_is_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let lay = layout(2, 2);
        let s = StateVector::from_amplitudes(lay, random_state(&mut rng, 64)).unwrap();
        for regs in [
            vec![Register::Work],
            vec![Register::Phase, Register::Environment],
            vec![Register::Work, Register::Environment],
        ] {
            let rho = s.reduced_density(&Selector::registers(&lay, &regs)).unwrap();
            assert!((rho.matrix().trace() - c(1.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn expectation_examples() {
        let lay = layout(1, 1);
        let s = StateVector::zero(lay);
        let sel = Selector::qubits(vec![0]);
        assert!((s.expectation_value(&sel, &ComplexMatrix::identity(2)).unwrap() - 1.0).abs() < 1e-15);
        let z = ComplexMatrix::from_real_diag(&[1.0, -1.0]);
        assert!((s.expectation_value(&sel, &z).unwrap() - 1.0).abs() < 1e-15);
        let bad = ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0]]).unwrap();
        assert!(s.expectation_value(&sel, &bad).is_err());
    }

    #[test]
    fn expectation_matches_quadratic_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let lay = layout(2, 1);
        let amps = random_state(&mut rng, 16);
        // all amplitude on work register with the rest |0>: use a pure work state
        let mut pure = vec![ZERO; 16];
        pure[..4].copy_from_slice(&amps[..4]);
        let norm: f64 = pure.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        pure.iter_mut().for_each(|z| *z /= norm);
        let s = StateVector::from_amplitudes(lay, pure.clone()).unwrap();
        let obs = random_hermitian(&mut rng, 4, 1.0);
        let psi = crate::numerics::ComplexVector::new(pure[..4].to_vec()).unwrap();
        let direct = psi.inner(&obs.mat_vec(&psi)).re;
        let got = s
            .expectation_value(&Selector::registers(&lay, &[Register::Work]), &obs)
            .unwrap();
        assert!((got - direct).abs() < 1e-12);
    }

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let v = [1.0, 1e-16, 1e-16, 1e-16, 1e-16, -1.0];
        assert!((compensated_sum(v) - 4e-16).abs() < 1e-30);
    }
}
