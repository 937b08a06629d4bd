//! Fixtures shared by the benchmark targets.

use qextra_core::hamiltonian::{tfim, PauliSum};
use qextra_core::rng::rng_from_seed;
use qextra_core::simulator::{DensityMatrix, StateVector};

/// Periodic `J = h = 1` transverse-field Ising chain.
pub fn tfim_chain(n: usize) -> PauliSum {
    tfim(n, 1.0, 1.0, true).expect("valid size")
}

pub fn random_state(n: usize, seed: u64) -> StateVector {
    StateVector::random(n, &mut rng_from_seed(seed))
}

pub fn random_pure_density(n: usize, seed: u64) -> DensityMatrix {
    DensityMatrix::from_pure(&random_state(n, seed))
}
