//! Energy extrapolation for quantum optimization on a classical simulator.
//!
//! The crate simulates three ground-state algorithms (quantum annealing,
//! the variational quantum eigensolver, and quantum imaginary-time evolution)
//! and estimates the exact ground energy from their imperfect outputs in two
//! ways:
//!
//! - **infinite-time**: regress annealing energies against `t_a⁻²` and read
//!   off the intercept;
//! - **zero-variance**: regress energies against the energy variance
//!   `⟨H²⟩ − ⟨H⟩²` and read off the intercept, where the state must be an
//!   eigenstate.
//!
//! Module map:
//!
//! - [`hamiltonian`]: Pauli algebra and model builders (TFIM, XYZ, random-field Ising)
//! - [`simulator`]: statevector / density-matrix kernels, depolarizing channels
//! - [`spectral`]: exact diagonalization and the residual-state moment analysis
//! - [`annealer`]: Schrödinger evolution, sweeps, adaptive extrapolation loop
//! - [`adiabatic_theory`]: first-order transition amplitudes and the `A/t_a²` law
//! - [`vqe`]: ansätze, optimizers, trace recording, noisy evaluation
//! - [`qite`]: imaginary-time evolution with local unitary updates
//! - [`extrapolation`]: regressions, trace filtering, ERR, robustness sweeps

pub mod adiabatic_theory;
pub mod annealer;
pub mod error;
pub mod extrapolation;
pub mod hamiltonian;
pub mod qite;
pub mod rng;
pub mod simulator;
pub mod spectral;
pub mod vqe;

pub use error::{Error, Result};
pub use extrapolation::{EnergyVariancePoint, ErrReport, FitResult};
pub use hamiltonian::{Pauli, PauliString, PauliSum, PauliTerm};
pub use simulator::{DensityMatrix, GateOp, Observable, QuantumState, StateVector};
pub use spectral::{MomentPair, ResidualDecomposition, Spectrum};
