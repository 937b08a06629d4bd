//! Independent dense oracles and property checks shared by the integration
//! suites.
#![allow(dead_code)]

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;
use proptest::test_runner::{Config, TestCaseError, TestRunner};
use rand::Rng;

use qextra_core::extrapolation::ols;
use qextra_core::hamiltonian::{Pauli, PauliString, PauliSum, PauliTerm};
use qextra_core::rng::rng_from_seed;
use qextra_core::simulator::{apply_depolarizing, DensityMatrix, Observable, QuantumState, StateVector};

pub type CMat = DMatrix<Complex64>;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn pauli_2x2(p: Pauli) -> CMat {
    match p {
        Pauli::I => CMat::from_row_slice(2, 2, &[c(1., 0.), c(0., 0.), c(0., 0.), c(1., 0.)]),
        Pauli::X => CMat::from_row_slice(2, 2, &[c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.)]),
        Pauli::Y => CMat::from_row_slice(2, 2, &[c(0., 0.), c(0., -1.), c(0., 1.), c(0., 0.)]),
        Pauli::Z => CMat::from_row_slice(2, 2, &[c(1., 0.), c(0., 0.), c(0., 0.), c(-1., 0.)]),
    }
}

/// Kronecker product with qubit 0 as the least significant index.
pub fn kron_word(word: &[Pauli]) -> CMat {
    word.iter().fold(CMat::identity(1, 1), |acc, &p| pauli_2x2(p).kronecker(&acc))
}

pub fn dense_string(s: &PauliString) -> CMat {
    let word: Vec<Pauli> = (0..s.n()).map(|q| s.factor(q)).collect();
    kron_word(&word)
}

pub fn dense_sum(h: &PauliSum) -> CMat {
    let d = 1usize << h.n();
    h.terms().iter().fold(CMat::zeros(d, d), |acc, t| acc + dense_string(&t.string) * c(t.coeff, 0.0))
}

pub fn column(psi: &StateVector) -> CMat {
    CMat::from_column_slice(psi.dim(), 1, psi.amps())
}

/// Ground energy of the periodic `J = h = 1` TFIM from the free-fermion
/// solution (even-parity sector, antiperiodic momenta).
pub fn tfim_free_fermion_ground(n: usize) -> f64 {
    -(0..n).map(|m| 2.0 * (PI * (2 * m + 1) as f64 / (2 * n) as f64).cos().abs()).sum::<f64>()
}

/// Lowest eigenvalue and eigenvector of a dense Hermitian matrix.
pub fn dense_ground(m: &CMat) -> (f64, Vec<f64>) {
    let eig = m.clone().symmetric_eigen();
    let mut v: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    v.sort_by(f64::total_cmp);
    (v[0], v)
}

pub fn random_word(rng: &mut impl Rng, n: usize) -> Vec<Pauli> {
    const P: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];
    (0..n).map(|_| P[rng.gen_range(0..4)]).collect()
}

pub fn string_of(word: &[Pauli]) -> PauliString {
    let factors: Vec<(usize, Pauli)> = word.iter().copied().enumerate().collect();
    PauliString::from_factors(word.len(), &factors).unwrap()
}

/// Traceless random Hamiltonian with `terms` non-identity strings.
pub fn random_hamiltonian(rng: &mut impl Rng, n: usize, terms: usize) -> PauliSum {
    let mut out = Vec::new();
    while out.len() < terms {
        let w = random_word(rng, n);
        if w.iter().all(|&p| p == Pauli::I) {
            continue;
        }
        out.push(PauliTerm::new(rng.gen_range(-1.0..1.0), string_of(&w)));
    }
    PauliSum::new(n, out).unwrap()
}

/// Random mixed state: a convex mixture of three random pure states.
pub fn random_density(rng: &mut impl Rng, n: usize) -> DensityMatrix {
    let d = 1usize << n;
    let w: Vec<f64> = (0..3).map(|_| rng.gen_range(0.1..1.0)).collect();
    let total: f64 = w.iter().sum();
    let mut m = CMat::zeros(d, d);
    for wk in w {
        let v = column(&StateVector::random(n, rng));
        m += &v * v.adjoint() * c(wk / total, 0.0);
    }
    DensityMatrix::from_dense(&m).unwrap()
}

/// `(1−ε)ρ + ε/4^k Σ_P PρP†` over all Pauli words on `targets`.
pub fn kraus_depolarize(rho: &CMat, n: usize, targets: &[usize], eps: f64) -> CMat {
    let k = targets.len();
    let mut twirl = CMat::zeros(rho.nrows(), rho.ncols());
    const P: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];
    for idx in 0..1usize << (2 * k) {
        let mut word = vec![Pauli::I; n];
        for (m, &q) in targets.iter().enumerate() {
            word[q] = P[(idx >> (2 * m)) & 3];
        }
        let op = kron_word(&word);
        twirl += &op * rho * op.adjoint();
    }
    rho * c(1.0 - eps, 0.0) + twirl * c(eps / (1usize << (2 * k)) as f64, 0.0)
}

pub fn max_abs(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn fail(msg: String) -> TestCaseError {
    TestCaseError::fail(msg)
}

pub fn runner(cases: u32) -> TestRunner {
    TestRunner::new(Config { cases, failure_persistence: None, ..Config::default() })
}

// ---------------------------------------------------------------------------
// Property checks. Each takes a seed and draws its own instance, so the same
// check drives both the proptest suite and the acceptance summary.

/// String product, commutation and state action agree with dense matrices.
pub fn check_pauli_algebra(seed: u64) -> Result<(), TestCaseError> {
    let mut rng = rng_from_seed(seed);
    let n = rng.gen_range(1..=4);
    let (wa, wb) = (random_word(&mut rng, n), random_word(&mut rng, n));
    let (a, b) = (string_of(&wa), string_of(&wb));
    let (da, db) = (kron_word(&wa), kron_word(&wb));
    let (phase, prod) = a.mul(&b).unwrap();
    let err = max_abs(&(dense_string(&prod) * phase - &da * &db));
    if err > 1e-10 {
        return Err(fail(format!("product {a}·{b}: error {err}")));
    }
    let comm = max_abs(&(&da * &db - &db * &da));
    if a.commutes_with(&b) != (comm < 1e-10) {
        return Err(fail(format!("commutation of {a} and {b}")));
    }
    let h = random_hamiltonian(&mut rng, n, 4);
    let psi = StateVector::random(n, &mut rng);
    let got = qextra_core::simulator::apply_pauli_sum(&h, &psi).unwrap();
    let want = dense_sum(&h) * column(&psi);
    let err = got.amps().iter().zip(want.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
    if err > 1e-10 {
        return Err(fail(format!("H|ψ⟩ mismatch {err}")));
    }
    let err = max_abs(&(h.to_dense() - dense_sum(&h)));
    if err > 1e-10 {
        return Err(fail(format!("dense form mismatch {err}")));
    }
    Ok(())
}

/// `Δvar ≥ 0` everywhere and `Δvar = 0` exactly on eigenstates.
pub fn check_variance(seed: u64) -> Result<(), TestCaseError> {
    let mut rng = rng_from_seed(seed);
    let n = rng.gen_range(1..=4);
    let h = random_hamiltonian(&mut rng, n, 5);
    let obs = Observable::new(&h);
    let psi = StateVector::random(n, &mut rng);
    let (e, v) = obs.energy_and_variance(&QuantumState::Pure(psi.clone())).unwrap();
    if v < 0.0 {
        return Err(fail(format!("negative variance {v}")));
    }
    // Δvar = ‖(H − E)ψ‖², computed densely.
    let hm = dense_sum(&h);
    let col = column(&psi);
    let r = &hm * &col - &col * c(e, 0.0);
    let direct: f64 = r.iter().map(|z| z.norm_sqr()).sum();
    if (direct - v).abs() > 1e-9 {
        return Err(fail(format!("variance {v} vs residual norm {direct}")));
    }
    let eig = hm.clone().symmetric_eigen();
    let k = rng.gen_range(0..eig.eigenvalues.len());
    let amps: Vec<Complex64> = eig.eigenvectors.column(k).iter().copied().collect();
    let phi = StateVector::new(n, amps).unwrap();
    let (e, v) = obs.energy_and_variance(&QuantumState::Pure(phi)).unwrap();
    if v > 1e-9 || (e - eig.eigenvalues[k]).abs() > 1e-9 {
        return Err(fail(format!("eigenstate {k}: E = {e}, Δvar = {v}")));
    }
    let rho = random_density(&mut rng, n);
    let (_, v) = obs.energy_and_variance(&QuantumState::Mixed(rho)).unwrap();
    if v < 0.0 {
        return Err(fail(format!("negative mixed-state variance {v}")));
    }
    Ok(())
}

/// Affine equivariance, exact recovery and residual orthogonality of OLS.
pub fn check_ols(seed: u64) -> Result<(), TestCaseError> {
    let mut rng = rng_from_seed(seed);
    let m = rng.gen_range(3..10);
    let xs: Vec<f64> = (0..m).map(|k| k as f64 + rng.gen_range(0.0..0.5)).collect();
    let ys: Vec<f64> = (0..m).map(|_| rng.gen_range(-5.0..5.0)).collect();
    let base = ols(&xs, &ys).unwrap();
    let (delta, kappa) = (rng.gen_range(-10.0..10.0), rng.gen_range(0.1..10.0));
    let shifted = ols(&xs, &ys.iter().map(|y| y + delta).collect::<Vec<_>>()).unwrap();
    let scaled = ols(&xs, &ys.iter().map(|y| y * kappa).collect::<Vec<_>>()).unwrap();
    let tol = 1e-10 * (1.0 + base.alpha0.abs() + base.alpha1.abs());
    if (shifted.alpha0 - base.alpha0 - delta).abs() > tol * 10.0 || (shifted.alpha1 - base.alpha1).abs() > tol {
        return Err(fail(format!("shift equivariance: {base:?} vs {shifted:?}")));
    }
    if (scaled.alpha0 - kappa * base.alpha0).abs() > tol * kappa || (scaled.alpha1 - kappa * base.alpha1).abs() > tol * kappa
    {
        return Err(fail(format!("scale equivariance: {base:?} vs {scaled:?}")));
    }
    let (a0, a1) = (rng.gen_range(-20.0..0.0), rng.gen_range(-2.0..2.0));
    let exact: Vec<f64> = xs.iter().map(|x| a0 + a1 * x).collect();
    let f = ols(&xs, &exact).unwrap();
    if (f.alpha0 - a0).abs() > 1e-12 * (1.0 + a0.abs()) * 10.0 || (f.alpha1 - a1).abs() > 1e-12 * 10.0 {
        return Err(fail(format!("exact recovery: ({a0}, {a1}) vs {f:?}")));
    }
    let res: Vec<f64> = xs.iter().zip(&ys).map(|(x, y)| y - base.alpha0 - base.alpha1 * x).collect();
    let s0: f64 = res.iter().sum();
    let s1: f64 = res.iter().zip(&xs).map(|(r, x)| r * x).sum();
    if s0.abs() > 1e-10 || s1.abs() > 1e-10 {
        return Err(fail(format!("residual orthogonality: Σr = {s0}, Σr·x = {s1}")));
    }
    Ok(())
}

/// Local depolarizing preserves trace and Hermiticity and equals the
/// Pauli-twirl Kraus form.
pub fn check_channel(seed: u64) -> Result<(), TestCaseError> {
    let mut rng = rng_from_seed(seed);
    let n = rng.gen_range(2..=4);
    let rho = random_density(&mut rng, n);
    let a = rng.gen_range(0..n);
    let mut targets = vec![a];
    if rng.gen_bool(0.5) {
        let b = (a + rng.gen_range(1..n)) % n;
        targets.push(b);
    }
    let eps = rng.gen_range(0.0..=1.0);
    let dense_in = rho.to_dense();
    let out = apply_depolarizing(rho, &targets, eps).unwrap();
    let tr = out.trace();
    if (tr.re - 1.0).abs() > 1e-12 || tr.im.abs() > 1e-12 {
        return Err(fail(format!("trace {tr} after depolarizing {targets:?}")));
    }
    if out.hermiticity_error() > 1e-12 {
        return Err(fail("output not Hermitian".into()));
    }
    let want = kraus_depolarize(&dense_in, n, &targets, eps);
    let err = max_abs(&(out.to_dense() - want));
    if err > 1e-12 {
        return Err(fail(format!("Kraus mismatch {err} on {targets:?}, eps = {eps}")));
    }
    if out.min_eigenvalue() < -1e-12 {
        return Err(fail("output not positive semidefinite".into()));
    }
    Ok(())
}

/// Run a named check through proptest over random seeds.
pub fn run_property(cases: u32, check: fn(u64) -> Result<(), TestCaseError>) -> Result<(), String> {
    runner(cases).run(&any::<u64>(), check).map_err(|e| e.to_string())
}
