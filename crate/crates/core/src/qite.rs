//! Quantum imaginary-time evolution with two-qubit unitary updates.
//!
//! Each Trotter step sweeps the local terms `h[j]` in order. For every term
//! the normalized non-unitary step `e^{−Δτ h[j]}/c` is replaced by
//! `e^{−iΔτ A}`, where `A = Σ_I a_I σ_I` spans the non-identity Paulis of a
//! two-qubit domain and `a` solves the least-squares problem
//!
//! `min ‖(e^{−Δτ h}/c − (1 − iΔτA))|ψ⟩‖²`,
//!
//! i.e. `(Re S + λ) a = −Im⟨σ_I e^{−Δτ h}⟩ / (cΔτ)` with `S_IJ = ⟨σ_I σ_J⟩`.
//! All expectation values come from the reduced density matrix of the domain.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{check_dims, invalid, Error, Result};
use crate::hamiltonian::{Pauli, PauliString, PauliSum, PauliTerm};
use crate::rng::derived_rng;
use crate::simulator::{GateOp, Observable, QuantumState, StateVector};
use crate::vqe::NoiseSpec;

pub const DEFAULT_DTAU: f64 = 0.1;
pub const DEFAULT_REGULARIZATION: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QiteConfig {
    pub dtau: f64,
    /// Number of Trotter steps.
    pub steps: usize,
    pub reg_lambda: f64,
    pub noise: Option<NoiseSpec>,
}

impl QiteConfig {
    pub fn new(dtau: f64, steps: usize) -> Self {
        Self { dtau, steps, reg_lambda: DEFAULT_REGULARIZATION, noise: None }
    }

    /// Total imaginary time `β = p·Δτ`.
    pub fn beta(&self) -> f64 {
        self.dtau * self.steps as f64
    }

    pub fn validate(&self) -> Result<()> {
        if self.steps == 0 || !(self.dtau > 0.0) || !(self.reg_lambda >= 0.0) {
            return Err(invalid("QITE needs steps >= 1, dtau > 0 and reg_lambda >= 0"));
        }
        if let Some(ns) = &self.noise {
            ns.validate()?;
        }
        Ok(())
    }
}

/// `A = Σ_I coeffs[I]·σ_I` over the non-identity Paulis of `domain`; the
/// Pauli with local index `I` has factor `(I >> 2k) & 3` (0 = I, 1 = X,
/// 2 = Y, 3 = Z) on `domain[k]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalGenerator {
    pub domain: Vec<usize>,
    pub coeffs: Vec<f64>,
    /// Normalization `c = ⟨e^{−2Δτ h}⟩^{1/2}`.
    pub norm: f64,
    /// Least-squares residual `‖(e^{−Δτh}/c − (1 − iΔτA))ψ‖²`.
    pub residual: f64,
}

fn pauli_matrix(p: Pauli) -> [Complex64; 4] {
    let (o, z, i) = (Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0), Complex64::new(0.0, 1.0));
    match p {
        Pauli::I => [o, z, z, o],
        Pauli::X => [z, o, o, z],
        Pauli::Y => [z, -i, i, z],
        Pauli::Z => [o, z, z, -o],
    }
}

const PAULIS: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];

/// Local matrix of a Pauli word over `k` domain qubits (factor of qubit `m`
/// given by `word[m]`), in the basis with local bit `m` = `domain[m]`.
fn local_pauli(word: &[Pauli]) -> DMatrix<Complex64> {
    let d = 1usize << word.len();
    DMatrix::from_fn(d, d, |r, c| {
        word.iter().enumerate().fold(Complex64::new(1.0, 0.0), |acc, (m, &p)| {
            let pm = pauli_matrix(p);
            acc * pm[2 * ((r >> m) & 1) + ((c >> m) & 1)]
        })
    })
}

fn basis_words(k: usize) -> Vec<Vec<Pauli>> {
    (1..1usize << (2 * k)).map(|idx| (0..k).map(|m| PAULIS[(idx >> (2 * m)) & 3]).collect()).collect()
}

/// Two-qubit domain of a term: its own support if it has two qubits, else
/// the qubit and its right neighbour (left neighbour at the chain end).
pub fn domain_for(term: &PauliString) -> Result<Vec<usize>> {
    let support = term.support_qubits();
    let n = term.n();
    match support.as_slice() {
        [a, b] => Ok(vec![*a, *b]),
        [q] if n == 1 => Ok(vec![*q]),
        [q] if q + 1 < n => Ok(vec![*q, q + 1]),
        [q] => Ok(vec![q - 1, *q]),
        [] => Err(invalid("identity term has no domain")),
        _ => Err(invalid(format!("term {term} acts on more than two qubits"))),
    }
}

fn trace_product(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> Complex64 {
    // tr(AB)
    let d = a.nrows();
    (0..d).flat_map(|r| (0..d).map(move |c| (r, c))).map(|(r, c)| a[(r, c)] * b[(c, r)]).sum()
}

/// Solve for the generator that best reproduces `e^{−Δτ h}/c` on `state`.
pub fn solve_local_generator(
    state: &QuantumState,
    term: &PauliTerm,
    dtau: f64,
    reg_lambda: f64,
) -> Result<LocalGenerator> {
    check_dims(state.n(), term.string.n())?;
    state.check_normalized()?;
    if !(dtau > 0.0) {
        return Err(invalid("dtau must be positive"));
    }
    let domain = domain_for(&term.string)?;
    let k = domain.len();
    let d = 1usize << k;
    let rho = state.reduced(&domain)?;
    let term_word: Vec<Pauli> = domain.iter().map(|&q| term.string.factor(q)).collect();
    let p_local = local_pauli(&term_word);
    // e^{−Δτ c P} = cosh(Δτc) I − sinh(Δτc) P
    let x = dtau * term.coeff;
    let propagator = DMatrix::<Complex64>::identity(d, d) * Complex64::from(x.cosh()) - &p_local * Complex64::from(x.sinh());
    let c2 = (2.0 * x).cosh() - (2.0 * x).sinh() * trace_product(&rho, &p_local).re;
    if !(c2 > 0.0) {
        return Err(Error::Degenerate("imaginary-time step annihilates the state".into()));
    }
    let c = c2.sqrt();
    let words = basis_words(k);
    let sigmas: Vec<DMatrix<Complex64>> = words.iter().map(|w| local_pauli(w)).collect();
    let m = sigmas.len();
    let rho_sigma: Vec<DMatrix<Complex64>> = sigmas.iter().map(|s| &rho * s).collect();
    let mut gram = DMatrix::<f64>::zeros(m, m);
    let mut rhs = DVector::<f64>::zeros(m);
    for i in 0..m {
        for j in i..m {
            let v = trace_product(&rho_sigma[i], &sigmas[j]).re;
            gram[(i, j)] = v;
            gram[(j, i)] = v;
        }
        rhs[i] = -trace_product(&rho_sigma[i], &propagator).im / (c * dtau);
    }
    let mut system = gram.clone();
    for i in 0..m {
        system[(i, i)] += reg_lambda;
    }
    let coeffs = system
        .clone()
        .cholesky()
        .map(|ch| ch.solve(&rhs))
        .or_else(|| system.lu().solve(&rhs))
        .ok_or_else(|| Error::Degenerate("QITE linear system is singular".into()))?;
    let e_prop = trace_product(&rho, &propagator).re;
    let quad = coeffs.dot(&(&gram * &coeffs));
    let residual = (2.0 - 2.0 * e_prop / c + dtau * dtau * quad - 2.0 * dtau * coeffs.dot(&rhs)).max(0.0);
    Ok(LocalGenerator { domain, coeffs: coeffs.iter().copied().collect(), norm: c, residual })
}

impl LocalGenerator {
    /// `A` as a local matrix.
    pub fn matrix(&self) -> DMatrix<Complex64> {
        let k = self.domain.len();
        let d = 1usize << k;
        basis_words(k)
            .iter()
            .zip(&self.coeffs)
            .fold(DMatrix::zeros(d, d), |acc, (w, &a)| acc + local_pauli(w) * Complex64::from(a))
    }

    /// `e^{−iΔτA}` as a gate on the domain.
    pub fn unitary(&self, dtau: f64) -> Result<GateOp> {
        let a = self.matrix();
        let eig = a.clone().symmetric_eigen();
        let d = a.nrows();
        let phases = DMatrix::from_diagonal(&DVector::from_iterator(
            d,
            eig.eigenvalues.iter().map(|&l| Complex64::from_polar(1.0, -dtau * l)),
        ));
        let u = &eig.eigenvectors * phases * eig.eigenvectors.adjoint();
        let row_major: Vec<Complex64> = (0..d).flat_map(|r| (0..d).map(move |c| (r, c))).map(|rc| u[rc]).collect();
        GateOp::new(self.domain.clone(), row_major)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    pub energy: f64,
    pub variance: f64,
}

#[derive(Debug, Clone)]
pub struct QiteOutcome {
    pub records: Vec<StepRecord>,
    pub final_state: QuantumState,
}

/// Run `cfg.steps` Trotter steps from `initial`, recording `(E, Δvar)` after
/// each full sweep over the terms of `h` (in their stored order).
pub fn qite_run(h: &PauliSum, cfg: &QiteConfig, initial: &StateVector) -> Result<QiteOutcome> {
    cfg.validate()?;
    check_dims(h.n(), initial.n())?;
    initial.check_normalized()?;
    let obs = Observable::new(h);
    let terms: Vec<&PauliTerm> = h.terms().iter().filter(|t| !t.string.is_identity()).collect();
    let eps = cfg.noise.map_or(0.0, |ns| ns.eps);
    let mut state = QuantumState::Pure(initial.clone());
    if eps > 0.0 {
        state = QuantumState::Mixed(state.into_mixed());
    }
    let mut records = Vec::with_capacity(cfg.steps);
    for step in 1..=cfg.steps {
        for term in &terms {
            let gen = solve_local_generator(&state, term, cfg.dtau, cfg.reg_lambda)?;
            state.apply_gate(&gen.unitary(cfg.dtau)?)?;
            if eps > 0.0 && gen.domain.len() == 2 {
                state.depolarize(&gen.domain, eps)?;
            }
        }
        let (mut energy, mut variance) = obs.energy_and_variance(&state)?;
        if let Some(ns) = cfg.noise.filter(|ns| ns.sigma > 0.0) {
            let mut rng = derived_rng(ns.seed, &[step as u64]);
            energy += ns.sigma * rng.sample::<f64, _>(StandardNormal);
            variance = (variance + ns.sigma * rng.sample::<f64, _>(StandardNormal)).max(0.0);
        }
        records.push(StepRecord { step, energy, variance });
    }
    Ok(QiteOutcome { records, final_state: state })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::tfim;
    use crate::rng::rng_from_seed;
    use crate::simulator::apply_pauli_sum;
    use approx::assert_abs_diff_eq;

    fn exact_step(psi: &StateVector, term: &PauliTerm, dtau: f64) -> StateVector {
        // e^{−Δτ c P}ψ = cosh ψ − sinh Pψ
        let x = dtau * term.coeff;
        let p = PauliSum::new(psi.n(), [PauliTerm::new(1.0, term.string)]).unwrap();
        let pp = apply_pauli_sum(&p, psi).unwrap();
        let amps = psi.amps().iter().zip(pp.amps()).map(|(a, b)| a * x.cosh() - b * x.sinh()).collect();
        let mut out = StateVector::new(psi.n(), amps).unwrap();
        out.normalize();
        out
    }

    #[test]
    fn single_term_step_matches_exact() {
        let mut rng = rng_from_seed(5);
        let rest = StateVector::random(2, &mut rng);
        let plus = StateVector::plus_state(1);
        let amps = (0..8).map(|b| plus.amps()[b & 1] * rest.amps()[b >> 1]).collect();
        let psi = StateVector::new(3, amps).unwrap();
        let term: PauliTerm = PauliTerm::new(-1.0, "ZII".parse().unwrap());
        let dtau = 0.01;
        let state = QuantumState::Pure(psi.clone());
        let gen = solve_local_generator(&state, &term, dtau, 1e-8).unwrap();
        let mut evolved = state.clone();
        evolved.apply_gate(&gen.unitary(dtau).unwrap()).unwrap();
        let QuantumState::Pure(out) = evolved else { panic!() };
        let exact = exact_step(&psi, &term, dtau);
        assert!(1.0 - out.inner(&exact).unwrap().norm_sqr() < 1e-6);
        assert_abs_diff_eq!(gen.norm, (2.0 * dtau).cosh().sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn fixed_point_has_zero_generator() {
        let psi = StateVector::zero_state(2);
        let term = PauliTerm::new(-1.0, "ZI".parse().unwrap());
        let gen = solve_local_generator(&QuantumState::Pure(psi), &term, 0.1, 1e-8).unwrap();
        let norm: f64 = gen.coeffs.iter().map(|a| a * a).sum::<f64>().sqrt();
        assert!(norm < 1e-6);
    }

    #[test]
    fn single_qubit_relaxes() {
        let h: PauliSum = "-1 Z".parse().unwrap();
        let out = qite_run(&h, &QiteConfig::new(0.1, 60), &StateVector::plus_state(1)).unwrap();
        assert!(out.records.last().unwrap().energy < -0.999);
    }

    #[test]
    fn noiseless_energy_is_nonincreasing() {
        // Two-qubit domains track imaginary time up to β ≈ 0.3 on these chains.
        for (n, dtau, steps) in [(4, 0.1, 3), (4, 0.05, 6), (8, 0.1, 3), (8, 0.05, 6)] {
            let h = tfim(n, 1.0, 1.0, true).unwrap();
            let out = qite_run(&h, &QiteConfig::new(dtau, steps), &StateVector::plus_state(n)).unwrap();
            let mut prev = -(n as f64);
            for r in &out.records {
                assert!(r.energy <= prev + 1e-8, "{:?}", out.records);
                prev = r.energy;
            }
        }
    }

    #[test]
    fn domains() {
        let s: PauliString = "IIX".parse().unwrap();
        assert_eq!(domain_for(&s).unwrap(), vec![1, 2]);
        let s: PauliString = "XII".parse().unwrap();
        assert_eq!(domain_for(&s).unwrap(), vec![0, 1]);
        let s: PauliString = "ZIZ".parse().unwrap();
        assert_eq!(domain_for(&s).unwrap(), vec![0, 2]);
        assert!(domain_for(&"XXX".parse().unwrap()).is_err());
    }
}
