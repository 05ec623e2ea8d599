//! Exact statevector simulation of an amplitude-damping quantum algorithm
//! for homogeneous linear ODEs `dx/dt = A x` with Hermitian `A`.
//!
//! The pipeline loads `x0` on a work register, writes eigenphases of a
//! unitary built from `A` into a phase register, damps each phase qubit
//! through an environment qubit, and uncomputes the phase estimation.
//! Post-selecting the environment on all zeros leaves the work register
//! proportional to `e^{At} x0`.

pub mod circuit;
pub mod cli;
pub mod numerics;
pub mod oracle;
pub mod solver;
pub mod statevector;
