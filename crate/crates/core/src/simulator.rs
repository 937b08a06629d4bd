//! Statevector and density-matrix simulation.
//!
//! A density matrix over `n` qubits is stored row-major as a flat vector of
//! `4ⁿ` entries, so entry `(r, c)` lives at `r·2ⁿ + c`. Read as a `2n`-qubit
//! statevector, the row index occupies the high `n` bits: a gate `U` on qubit
//! `q` conjugates the matrix by acting with `U` on bit `q + n` and with `U*`
//! on bit `q`. All channel and gate kernels below rely on that identity.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{check_dims, invalid, Error, Result};
use crate::hamiltonian::{i_pow, PauliString, PauliSum};

/// Norm (or trace) deviation above which a state is rejected as unnormalized.
pub const NORM_TOLERANCE: f64 = 1e-6;

/// Negative variances within this distance of zero are roundoff and clamp to 0.
pub const VARIANCE_CLAMP: f64 = 1e-9;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[inline]
fn insert_zero_bit(k: usize, pos: usize) -> usize {
    let low = k & ((1usize << pos) - 1);
    ((k >> pos) << (pos + 1)) | low
}

/// Apply a row-major 2×2 matrix to bit `q` of `amps`.
pub(crate) fn apply_1q(amps: &mut [Complex64], q: usize, m: &[Complex64; 4]) {
    let stride = 1usize << q;
    let dim = amps.len();
    let mut base = 0;
    while base < dim {
        for i in base..base + stride {
            let j = i + stride;
            let a0 = amps[i];
            let a1 = amps[j];
            amps[i] = m[0] * a0 + m[1] * a1;
            amps[j] = m[2] * a0 + m[3] * a1;
        }
        base += 2 * stride;
    }
}

/// Apply a row-major 4×4 matrix to bits `(q0, q1)`; local index is `b(q0) + 2·b(q1)`.
pub(crate) fn apply_2q(amps: &mut [Complex64], q0: usize, q1: usize, m: &[Complex64; 16]) {
    let (lo, hi) = if q0 < q1 { (q0, q1) } else { (q1, q0) };
    let b0 = 1usize << q0;
    let b1 = 1usize << q1;
    for k in 0..amps.len() / 4 {
        let i = insert_zero_bit(insert_zero_bit(k, lo), hi);
        let idx = [i, i | b0, i | b1, i | b0 | b1];
        let a = [amps[idx[0]], amps[idx[1]], amps[idx[2]], amps[idx[3]]];
        for (r, &target) in idx.iter().enumerate() {
            let row = &m[4 * r..4 * r + 4];
            amps[target] = row[0] * a[0] + row[1] * a[1] + row[2] * a[2] + row[3] * a[3];
        }
    }
}

/// `e^{-iθP}` applied in place for a Pauli string `P` (`P² = I`).
pub(crate) fn apply_pauli_rotation(amps: &mut [Complex64], p: &PauliString, theta: f64) {
    let (s, c) = theta.sin_cos();
    let minus_i_sin = Complex64::new(0.0, -s);
    if p.is_diagonal() {
        let z = p.z_mask();
        let plus = Complex64::new(c, -s);
        let minus = Complex64::new(c, s);
        for (b, a) in amps.iter_mut().enumerate() {
            *a *= if (z & b as u64).count_ones() % 2 == 0 { plus } else { minus };
        }
        return;
    }
    let x = p.x_mask() as usize;
    // Visit each pair {b, b^x} once, from the member whose highest x-bit is clear.
    let top = 1usize << (usize::BITS - 1 - x.leading_zeros());
    for b in 0..amps.len() {
        if b & top != 0 {
            continue;
        }
        let b2 = b ^ x;
        let (ph1, _) = p.apply_to_basis(b); // P|b> = ph1 |b2>
        let (ph2, _) = p.apply_to_basis(b2); // P|b2> = ph2 |b>
        let a1 = amps[b];
        let a2 = amps[b2];
        amps[b] = c * a1 + minus_i_sin * ph2 * a2;
        amps[b2] = c * a2 + minus_i_sin * ph1 * a1;
    }
}

/// A pure state over `n` qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    pub fn new(n: usize, amps: Vec<Complex64>) -> Result<Self> {
        check_dims(1usize << n, amps.len())?;
        Ok(Self { n, amps })
    }

    /// `|0…0⟩`.
    pub fn zero_state(n: usize) -> Self {
        Self::basis(n, 0)
    }

    pub fn basis(n: usize, index: usize) -> Self {
        let mut amps = vec![ZERO; 1 << n];
        amps[index] = ONE;
        Self { n, amps }
    }

    /// `|+⟩^⊗n`, the ground state of `−Σ X_j`.
    pub fn plus_state(n: usize) -> Self {
        let dim = 1usize << n;
        let a = Complex64::new(1.0 / (dim as f64).sqrt(), 0.0);
        Self { n, amps: vec![a; dim] }
    }

    /// Haar-like random state from Gaussian amplitudes.
    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        let amps = (0..1usize << n)
            .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
            .collect();
        let mut s = Self { n, amps };
        s.normalize();
        s
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amps(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn amps_mut(&mut self) -> &mut [Complex64] {
        &mut self.amps
    }

    pub fn into_amps(self) -> Vec<Complex64> {
        self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn normalize(&mut self) {
        let norm = self.norm();
        if norm > 0.0 {
            self.amps.iter_mut().for_each(|a| *a /= norm);
        }
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &StateVector) -> Result<Complex64> {
        check_dims(self.dim(), other.dim())?;
        Ok(self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum())
    }

    pub fn check_normalized(&self) -> Result<()> {
        let deviation = (self.norm_sqr() - 1.0).abs();
        if deviation > NORM_TOLERANCE {
            return Err(Error::NotNormalized { deviation });
        }
        Ok(())
    }

    /// Rotate the global phase so the largest amplitude is real and positive.
    pub fn canonical_phase(&self) -> StateVector {
        let pivot = self
            .amps
            .iter()
            .copied()
            .max_by(|a, b| a.norm_sqr().total_cmp(&b.norm_sqr()))
            .unwrap_or(ONE);
        let phase = if pivot.norm() > 0.0 { pivot.conj() / pivot.norm() } else { ONE };
        StateVector { n: self.n, amps: self.amps.iter().map(|a| a * phase).collect() }
    }
}

/// A mixed state over `n` qubits (row-major, see the module docs).
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    n: usize,
    data: Vec<Complex64>,
}

impl DensityMatrix {
    pub fn from_pure(psi: &StateVector) -> Self {
        let dim = psi.dim();
        let mut data = vec![ZERO; dim * dim];
        for (r, a) in psi.amps.iter().enumerate() {
            for (c, b) in psi.amps.iter().enumerate() {
                data[r * dim + c] = a * b.conj();
            }
        }
        Self { n: psi.n, data }
    }

    pub fn maximally_mixed(n: usize) -> Self {
        let dim = 1usize << n;
        let mut data = vec![ZERO; dim * dim];
        for r in 0..dim {
            data[r * dim + r] = Complex64::new(1.0 / dim as f64, 0.0);
        }
        Self { n, data }
    }

    pub fn from_dense(m: &DMatrix<Complex64>) -> Result<Self> {
        let dim = m.nrows();
        if !dim.is_power_of_two() || m.ncols() != dim {
            return Err(invalid("density matrix must be square with power-of-two size"));
        }
        let n = dim.trailing_zeros() as usize;
        let mut data = vec![ZERO; dim * dim];
        for r in 0..dim {
            for c in 0..dim {
                data[r * dim + c] = m[(r, c)];
            }
        }
        Ok(Self { n, data })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        1usize << self.n
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        self.data[r * self.dim() + c]
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn trace(&self) -> Complex64 {
        let dim = self.dim();
        (0..dim).map(|r| self.data[r * dim + r]).sum()
    }

    pub fn purity(&self) -> f64 {
        self.data.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let dim = self.dim();
        DMatrix::from_row_slice(dim, dim, &self.data)
    }

    /// Largest `|ρ − ρ†|` entry.
    pub fn hermiticity_error(&self) -> f64 {
        let dim = self.dim();
        let mut worst = 0.0f64;
        for r in 0..dim {
            for c in r..dim {
                worst = worst.max((self.data[r * dim + c] - self.data[c * dim + r].conj()).norm());
            }
        }
        worst
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let m = self.to_dense();
        let h = (&m + m.adjoint()) * Complex64::new(0.5, 0.0);
        h.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn check_normalized(&self) -> Result<()> {
        let deviation = (self.trace() - ONE).norm();
        if deviation > NORM_TOLERANCE {
            return Err(Error::NotNormalized { deviation });
        }
        Ok(())
    }

    /// `tr(ρ P)` for a single Pauli string.
    pub fn pauli_expectation(&self, p: &PauliString) -> Complex64 {
        let dim = self.dim();
        let x = p.x_mask() as usize;
        // tr(ρP) = Σ_b ρ[b, b^x]·⟨b|P|b^x⟩
        (0..dim)
            .map(|b| {
                let (ph, _) = p.apply_to_basis(b ^ x);
                self.data[b * dim + (b ^ x)] * ph
            })
            .sum()
    }

    fn apply_gate(&mut self, gate: &GateOp) {
        let n = self.n;
        match gate.targets.as_slice() {
            &[q] => {
                let m = gate.matrix_1q();
                apply_1q(&mut self.data, q + n, &m);
                apply_1q(&mut self.data, q, &m.map(|a| a.conj()));
            }
            &[q0, q1] => {
                let m = gate.matrix_2q();
                if let Some(d) = diagonal_2q(&m) {
                    let dim = self.dim();
                    let local = |b: usize| ((b >> q0) & 1) | (((b >> q1) & 1) << 1);
                    for (r, row) in self.data.chunks_mut(dim).enumerate() {
                        let dr = d[local(r)];
                        for (c, x) in row.iter_mut().enumerate() {
                            *x *= dr * d[local(c)].conj();
                        }
                    }
                    return;
                }
                apply_2q(&mut self.data, q0 + n, q1 + n, &m);
                apply_2q(&mut self.data, q0, q1, &m.map(|a| a.conj()));
            }
            _ => unreachable!("gate arity validated at construction"),
        }
    }
}

fn diagonal_2q(m: &[Complex64; 16]) -> Option<[Complex64; 4]> {
    let off_diagonal_zero = (0..16).filter(|k| k % 5 != 0).all(|k| m[k] == ZERO);
    off_diagonal_zero.then(|| [m[0], m[5], m[10], m[15]])
}

/// A 1- or 2-qubit unitary. For two targets the local basis index is
/// `b(targets[0]) + 2·b(targets[1])`.
#[derive(Debug, Clone, PartialEq)]
pub struct GateOp {
    targets: Vec<usize>,
    matrix: Vec<Complex64>,
}

impl GateOp {
    pub fn new(targets: Vec<usize>, matrix: Vec<Complex64>) -> Result<Self> {
        let d = match targets.len() {
            1 => 2,
            2 if targets[0] != targets[1] => 4,
            2 => return Err(invalid("gate targets must be distinct")),
            k => return Err(invalid(format!("gates act on 1 or 2 qubits, got {k}"))),
        };
        check_dims(d * d, matrix.len())?;
        let m = DMatrix::from_row_slice(d, d, &matrix);
        let err = (m.adjoint() * &m - DMatrix::<Complex64>::identity(d, d)).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if err > 1e-10 {
            return Err(invalid(format!("gate matrix is not unitary (error {err:.3e})")));
        }
        Ok(Self { targets, matrix })
    }

    fn unchecked(targets: Vec<usize>, matrix: Vec<Complex64>) -> Self {
        Self { targets, matrix }
    }

    pub fn targets(&self) -> &[usize] {
        &self.targets
    }

    pub fn matrix(&self) -> &[Complex64] {
        &self.matrix
    }

    fn matrix_1q(&self) -> [Complex64; 4] {
        self.matrix.as_slice().try_into().expect("2x2 gate")
    }

    fn matrix_2q(&self) -> [Complex64; 16] {
        self.matrix.as_slice().try_into().expect("4x4 gate")
    }

    /// `e^{-iθX/2}`.
    pub fn rx(q: usize, theta: f64) -> Self {
        let (s, c) = (theta / 2.0).sin_cos();
        let mis = Complex64::new(0.0, -s);
        Self::unchecked(vec![q], vec![c.into(), mis, mis, c.into()])
    }

    /// `e^{-iθY/2}`.
    pub fn ry(q: usize, theta: f64) -> Self {
        let (s, c) = (theta / 2.0).sin_cos();
        Self::unchecked(vec![q], vec![c.into(), (-s).into(), s.into(), c.into()])
    }

    /// `e^{-iθZ/2}`.
    pub fn rz(q: usize, theta: f64) -> Self {
        let h = theta / 2.0;
        Self::unchecked(
            vec![q],
            vec![Complex64::from_polar(1.0, -h), ZERO, ZERO, Complex64::from_polar(1.0, h)],
        )
    }

    /// `e^{-iθ Z_a Z_b}` (note: no factor 1/2).
    pub fn rzz(a: usize, b: usize, theta: f64) -> Self {
        let even = Complex64::from_polar(1.0, -theta);
        let odd = Complex64::from_polar(1.0, theta);
        let mut m = vec![ZERO; 16];
        for (l, d) in [even, odd, odd, even].into_iter().enumerate() {
            m[5 * l] = d;
        }
        Self::unchecked(vec![a, b], m)
    }

    pub fn cnot(control: usize, target: usize) -> Self {
        // local index = b(control) + 2 b(target): swap |1,0> (1) and |1,1> (3)
        let mut m = vec![ZERO; 16];
        for (r, c) in [(0, 0), (1, 3), (2, 2), (3, 1)] {
            m[4 * r + c] = ONE;
        }
        Self::unchecked(vec![control, target], m)
    }

    pub fn hadamard(q: usize) -> Self {
        let h = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        Self::unchecked(vec![q], vec![h, h, h, -h])
    }

    /// Embed into the full `2ⁿ`-dimensional space (oracle use).
    pub fn to_dense(&self, n: usize) -> DMatrix<Complex64> {
        let dim = 1usize << n;
        let mut m = DMatrix::<Complex64>::zeros(dim, dim);
        for col in 0..dim {
            let mut v = vec![ZERO; dim];
            v[col] = ONE;
            apply_gate_vec(&mut v, self);
            for (row, a) in v.into_iter().enumerate() {
                m[(row, col)] = a;
            }
        }
        m
    }
}

fn apply_gate_vec(amps: &mut [Complex64], gate: &GateOp) {
    match gate.targets.as_slice() {
        &[q] => apply_1q(amps, q, &gate.matrix_1q()),
        &[q0, q1] => apply_2q(amps, q0, q1, &gate.matrix_2q()),
        _ => unreachable!("gate arity validated at construction"),
    }
}

fn check_targets(n: usize, targets: &[usize]) -> Result<()> {
    for (i, &q) in targets.iter().enumerate() {
        if q >= n {
            return Err(invalid(format!("target qubit {q} out of range for {n} qubits")));
        }
        if targets[..i].contains(&q) {
            return Err(invalid(format!("target qubit {q} repeated")));
        }
    }
    Ok(())
}

struct OffDiagonalGroup {
    x: usize,
    // (z mask, coefficient · i^{#Y})
    terms: Vec<(u64, Complex64)>,
}

/// A Pauli sum compiled for fast repeated application: all diagonal terms
/// folded into one vector, the rest grouped by X mask.
pub struct PauliOperator {
    n: usize,
    diag: Option<Vec<f64>>,
    groups: Vec<OffDiagonalGroup>,
}

impl PauliOperator {
    pub fn new(h: &PauliSum) -> Self {
        let dim = h.dim();
        let mut diag: Option<Vec<f64>> = None;
        let mut groups: Vec<OffDiagonalGroup> = Vec::new();
        for t in h.terms() {
            let s = t.string;
            if s.is_diagonal() {
                let d = diag.get_or_insert_with(|| vec![0.0; dim]);
                let z = s.z_mask();
                for (b, v) in d.iter_mut().enumerate() {
                    *v += if (z & b as u64).count_ones() % 2 == 0 { t.coeff } else { -t.coeff };
                }
            } else {
                let x = s.x_mask() as usize;
                let entry = (s.z_mask(), i_pow(s.y_count()) * t.coeff);
                match groups.iter_mut().find(|g| g.x == x) {
                    Some(g) => g.terms.push(entry),
                    None => groups.push(OffDiagonalGroup { x, terms: vec![entry] }),
                }
            }
        }
        Self { n: h.n(), diag, groups }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn diagonal(&self) -> Option<&[f64]> {
        self.diag.as_deref()
    }

    /// `out = H·input`.
    pub fn apply_into(&self, input: &[Complex64], out: &mut [Complex64]) {
        match &self.diag {
            Some(d) => out.iter_mut().zip(input).zip(d).for_each(|((o, a), v)| *o = a * v),
            None => out.iter_mut().for_each(|o| *o = ZERO),
        }
        for g in &self.groups {
            if let [(0, c)] = g.terms.as_slice() {
                for (b, a) in input.iter().enumerate() {
                    out[b ^ g.x] += c * a;
                }
                continue;
            }
            for (b, a) in input.iter().enumerate() {
                let factor: Complex64 = g
                    .terms
                    .iter()
                    .map(|&(z, c)| if (z & b as u64).count_ones() % 2 == 0 { c } else { -c })
                    .sum();
                out[b ^ g.x] += factor * a;
            }
        }
    }

    pub fn apply(&self, psi: &StateVector) -> Result<StateVector> {
        check_dims(1usize << self.n, psi.dim())?;
        let mut out = vec![ZERO; psi.dim()];
        self.apply_into(&psi.amps, &mut out);
        Ok(StateVector { n: self.n, amps: out })
    }
}

/// A Hamiltonian prepared for energy and variance measurements on both
/// pure and mixed states.
pub struct Observable {
    h: PauliSum,
    op: PauliOperator,
    squared: PauliSum,
}

impl Observable {
    pub fn new(h: &PauliSum) -> Self {
        Self { h: h.clone(), op: PauliOperator::new(h), squared: h.square() }
    }

    pub fn hamiltonian(&self) -> &PauliSum {
        &self.h
    }

    pub fn operator(&self) -> &PauliOperator {
        &self.op
    }

    pub fn n(&self) -> usize {
        self.h.n()
    }

    /// `(⟨H⟩, ⟨H²⟩)`.
    pub fn moments(&self, state: &QuantumState) -> Result<(f64, f64)> {
        check_dims(self.n(), state.n())?;
        state.check_normalized()?;
        match state {
            QuantumState::Pure(psi) => {
                let h_psi = self.op.apply(psi)?;
                let e = psi.inner(&h_psi)?.re;
                Ok((e, h_psi.norm_sqr()))
            }
            QuantumState::Mixed(rho) => Ok((mixed_expectation(rho, &self.h), mixed_expectation(rho, &self.squared))),
        }
    }

    pub fn expectation(&self, state: &QuantumState) -> Result<f64> {
        match state {
            QuantumState::Pure(psi) => {
                check_dims(self.n(), psi.n())?;
                psi.check_normalized()?;
                Ok(psi.inner(&self.op.apply(psi)?)?.re)
            }
            QuantumState::Mixed(rho) => {
                check_dims(self.n(), rho.n())?;
                rho.check_normalized()?;
                Ok(mixed_expectation(rho, &self.h))
            }
        }
    }

    /// `(⟨H⟩, ⟨H²⟩ − ⟨H⟩²)` with the variance clamped at roundoff level.
    pub fn energy_and_variance(&self, state: &QuantumState) -> Result<(f64, f64)> {
        let (e, e2) = self.moments(state)?;
        Ok((e, clamp_variance(e2 - e * e)?))
    }
}

fn mixed_expectation(rho: &DensityMatrix, h: &PauliSum) -> f64 {
    h.terms().iter().map(|t| t.coeff * rho.pauli_expectation(&t.string).re).sum()
}

pub(crate) fn clamp_variance(v: f64) -> Result<f64> {
    if v < -VARIANCE_CLAMP {
        Err(Error::NegativeVariance(v))
    } else {
        Ok(v.max(0.0))
    }
}

/// Either representation, for pipelines that switch between noiseless and noisy runs.
#[derive(Debug, Clone, PartialEq)]
pub enum QuantumState {
    Pure(StateVector),
    Mixed(DensityMatrix),
}

impl From<StateVector> for QuantumState {
    fn from(s: StateVector) -> Self {
        QuantumState::Pure(s)
    }
}

impl From<DensityMatrix> for QuantumState {
    fn from(r: DensityMatrix) -> Self {
        QuantumState::Mixed(r)
    }
}

impl QuantumState {
    pub fn n(&self) -> usize {
        match self {
            QuantumState::Pure(s) => s.n,
            QuantumState::Mixed(r) => r.n,
        }
    }

    pub fn check_normalized(&self) -> Result<()> {
        match self {
            QuantumState::Pure(s) => s.check_normalized(),
            QuantumState::Mixed(r) => r.check_normalized(),
        }
    }

    pub fn into_mixed(self) -> DensityMatrix {
        match self {
            QuantumState::Pure(s) => DensityMatrix::from_pure(&s),
            QuantumState::Mixed(r) => r,
        }
    }

    pub fn apply_gate(&mut self, gate: &GateOp) -> Result<()> {
        check_targets(self.n(), gate.targets())?;
        match self {
            QuantumState::Pure(s) => apply_gate_vec(&mut s.amps, gate),
            QuantumState::Mixed(r) => r.apply_gate(gate),
        }
        Ok(())
    }

    /// Depolarize `targets` at rate `eps`. Pure states are promoted to
    /// density matrices unless `eps == 0`.
    pub fn depolarize(&mut self, targets: &[usize], eps: f64) -> Result<()> {
        if eps == 0.0 {
            return check_rate(eps);
        }
        let rho = std::mem::replace(self, QuantumState::Mixed(DensityMatrix::maximally_mixed(0)));
        *self = QuantumState::Mixed(apply_depolarizing(rho.into_mixed(), targets, eps)?);
        Ok(())
    }

    /// Reduced density matrix on `qubits`; local index bit `k` is `qubits[k]`.
    pub fn reduced(&self, qubits: &[usize]) -> Result<DMatrix<Complex64>> {
        let n = self.n();
        check_targets(n, qubits)?;
        let d = 1usize << qubits.len();
        let offsets: Vec<usize> = (0..d)
            .map(|l| qubits.iter().enumerate().map(|(k, &q)| ((l >> k) & 1) << q).sum())
            .collect();
        let mask: usize = qubits.iter().map(|&q| 1usize << q).sum();
        let mut out = DMatrix::<Complex64>::zeros(d, d);
        for rest in (0..1usize << n).filter(|b| b & mask == 0) {
            for a in 0..d {
                for b in 0..d {
                    out[(a, b)] += match self {
                        QuantumState::Pure(s) => s.amps[rest | offsets[a]] * s.amps[rest | offsets[b]].conj(),
                        QuantumState::Mixed(r) => r.get(rest | offsets[a], rest | offsets[b]),
                    };
                }
            }
        }
        Ok(out)
    }
}

/// `H|ψ⟩` (not normalized).
pub fn apply_pauli_sum(h: &PauliSum, psi: &StateVector) -> Result<StateVector> {
    check_dims(h.n(), psi.n())?;
    PauliOperator::new(h).apply(psi)
}

/// `⟨H⟩` on a pure or mixed state.
pub fn expectation(h: &PauliSum, state: &QuantumState) -> Result<f64> {
    Observable::new(h).expectation(state)
}

/// `⟨H²⟩ − ⟨H⟩²`, clamped to zero within roundoff.
pub fn variance(h: &PauliSum, state: &QuantumState) -> Result<f64> {
    Ok(Observable::new(h).energy_and_variance(state)?.1)
}

pub fn apply_gate(state: &mut QuantumState, gate: &GateOp) -> Result<()> {
    state.apply_gate(gate)
}

fn check_rate(eps: f64) -> Result<()> {
    if (0.0..=1.0).contains(&eps) {
        Ok(())
    } else {
        Err(invalid(format!("noise rate {eps} outside [0, 1]")))
    }
}

/// `ρ → (1−ε)ρ + ε·Tr_T(ρ) ⊗ I/2^|T|` on the target subsystem `T`.
pub fn apply_depolarizing(mut rho: DensityMatrix, targets: &[usize], eps: f64) -> Result<DensityMatrix> {
    check_rate(eps)?;
    check_targets(rho.n, targets)?;
    if eps == 0.0 || targets.is_empty() {
        return Ok(rho);
    }
    let dim = rho.dim();
    let d = 1usize << targets.len();
    let offsets: Vec<usize> = (0..d)
        .map(|l| targets.iter().enumerate().map(|(k, &q)| ((l >> k) & 1) << q).sum())
        .collect();
    let mask: usize = offsets[d - 1];
    let keep = 1.0 - eps;
    let mix = eps / d as f64;
    let rests: Vec<usize> = (0..dim).filter(|b| b & mask == 0).collect();
    for &r in &rests {
        for &c in &rests {
            let traced: Complex64 = offsets.iter().map(|&o| rho.data[(r | o) * dim + (c | o)]).sum();
            for &orow in &offsets {
                for &ocol in &offsets {
                    let idx = (r | orow) * dim + (c | ocol);
                    rho.data[idx] *= keep;
                    if orow == ocol {
                        rho.data[idx] += traced * mix;
                    }
                }
            }
        }
    }
    Ok(rho)
}

/// `(1−ε′)|ψ⟩⟨ψ| + ε′ I/N`.
pub fn global_depolarize(psi: &StateVector, eps: f64) -> Result<DensityMatrix> {
    check_rate(eps)?;
    let mut rho = DensityMatrix::from_pure(psi);
    let dim = rho.dim();
    rho.data.iter_mut().for_each(|a| *a *= 1.0 - eps);
    for r in 0..dim {
        rho.data[r * dim + r] += eps / dim as f64;
    }
    Ok(rho)
}

/// `|⟨φ|ψ⟩|`.
pub fn fidelity(psi: &StateVector, phi: &StateVector) -> Result<f64> {
    Ok(phi.inner(psi)?.norm())
}
