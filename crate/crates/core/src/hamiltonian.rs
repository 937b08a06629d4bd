//! Pauli-string algebra and the model Hamiltonians.
//!
//! Conventions: bit `q` of a mask refers to qubit `q`, and bit `q` of a basis
//! index is the computational value of qubit `q` (little-endian). A string with
//! masks `(x, z)` is the tensor product of single-qubit factors
//! `σ(x_q, z_q)` with `σ(1,0) = X`, `σ(0,1) = Z`, `σ(1,1) = Y`.
//!
//! The text form of a Pauli sum is one term per line, `coeff word`, where
//! character `q` of the word is the factor on qubit `q`:
//!
//! ```text
//! # transverse-field Ising, n = 2 (open)
//! -1.0 ZZ
//! -1.0 XI
//! -1.0 IX
//! ```

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_dims, invalid, Error, Result};
use crate::rng::rng_from_seed;

/// Coefficients below this magnitude are dropped when terms are merged.
pub const MERGE_TOLERANCE: f64 = 1e-12;

/// Largest register representable by the 64-bit masks.
pub const MAX_QUBITS: usize = 63;

/// `i^k`.
pub fn i_pow(k: u32) -> Complex64 {
    match k % 4 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    fn bits(self) -> (bool, bool) {
        match self {
            Pauli::I => (false, false),
            Pauli::X => (true, false),
            Pauli::Y => (true, true),
            Pauli::Z => (false, true),
        }
    }

    fn from_bits(x: bool, z: bool) -> Self {
        match (x, z) {
            (false, false) => Pauli::I,
            (true, false) => Pauli::X,
            (true, true) => Pauli::Y,
            (false, true) => Pauli::Z,
        }
    }

    fn letter(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }
}

/// An n-qubit Pauli string stored as X/Z bit masks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PauliString {
    n: usize,
    x: u64,
    z: u64,
}

fn full_mask(n: usize) -> u64 {
    if n >= 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

impl PauliString {
    pub fn new(n: usize, x: u64, z: u64) -> Result<Self> {
        if n > MAX_QUBITS {
            return Err(invalid(format!("{n} qubits exceeds the supported maximum {MAX_QUBITS}")));
        }
        let mask = full_mask(n);
        if x & !mask != 0 || z & !mask != 0 {
            return Err(invalid(format!("masks ({x:#b}, {z:#b}) do not fit in {n} qubits")));
        }
        Ok(Self { n, x, z })
    }

    pub fn identity(n: usize) -> Self {
        Self { n, x: 0, z: 0 }
    }

    pub fn single(n: usize, qubit: usize, p: Pauli) -> Result<Self> {
        Self::from_factors(n, &[(qubit, p)])
    }

    /// Build a string from `(qubit, factor)` pairs; unlisted qubits carry identity.
    pub fn from_factors(n: usize, factors: &[(usize, Pauli)]) -> Result<Self> {
        let mut x = 0u64;
        let mut z = 0u64;
        for &(q, p) in factors {
            if q >= n {
                return Err(invalid(format!("qubit {q} out of range for {n} qubits")));
            }
            if (x | z) >> q & 1 == 1 {
                return Err(invalid(format!("qubit {q} listed twice")));
            }
            let (bx, bz) = p.bits();
            x |= (bx as u64) << q;
            z |= (bz as u64) << q;
        }
        Self::new(n, x, z)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn x_mask(&self) -> u64 {
        self.x
    }

    pub fn z_mask(&self) -> u64 {
        self.z
    }

    pub fn support(&self) -> u64 {
        self.x | self.z
    }

    pub fn weight(&self) -> usize {
        self.support().count_ones() as usize
    }

    pub fn y_count(&self) -> u32 {
        (self.x & self.z).count_ones()
    }

    pub fn is_identity(&self) -> bool {
        self.x == 0 && self.z == 0
    }

    pub fn is_diagonal(&self) -> bool {
        self.x == 0
    }

    /// True when the matrix of the string is real (even number of `Y` factors).
    pub fn is_real(&self) -> bool {
        self.y_count() % 2 == 0
    }

    pub fn factor(&self, qubit: usize) -> Pauli {
        Pauli::from_bits(self.x >> qubit & 1 == 1, self.z >> qubit & 1 == 1)
    }

    /// Qubits acted on non-trivially, ascending.
    pub fn support_qubits(&self) -> Vec<usize> {
        (0..self.n).filter(|&q| self.support() >> q & 1 == 1).collect()
    }

    pub fn commutes_with(&self, other: &PauliString) -> bool {
        ((self.x & other.z).count_ones() + (self.z & other.x).count_ones()) % 2 == 0
    }

    /// Product `self · other = phase · result`, with `phase ∈ {±1, ±i}`.
    pub fn mul(&self, other: &PauliString) -> Result<(Complex64, PauliString)> {
        check_dims(self.n, other.n)?;
        let x = self.x ^ other.x;
        let z = self.z ^ other.z;
        // P(x,z) = i^{|x&z|} X^x Z^z and Z^z1 X^x2 = (-1)^{|z1&x2|} X^x2 Z^z1.
        let k = self.y_count() + other.y_count() + 2 * (self.z & other.x).count_ones() + 4
            - (x & z).count_ones() % 4;
        Ok((i_pow(k), PauliString { n: self.n, x, z }))
    }

    /// Action on a computational basis state: `P|b> = phase |b'>`.
    #[inline]
    pub fn apply_to_basis(&self, b: usize) -> (Complex64, usize) {
        let sign = if (self.z & b as u64).count_ones() % 2 == 1 { 2 } else { 0 };
        (i_pow(self.y_count() + sign), b ^ self.x as usize)
    }

    pub fn word(&self) -> String {
        (0..self.n).map(|q| self.factor(q).letter()).collect()
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.word())
    }
}

impl FromStr for PauliString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let n = s.chars().count();
        let mut factors = Vec::new();
        for (q, c) in s.chars().enumerate() {
            let p = match c.to_ascii_uppercase() {
                'I' => continue,
                'X' => Pauli::X,
                'Y' => Pauli::Y,
                'Z' => Pauli::Z,
                other => return Err(invalid(format!("unknown Pauli letter '{other}'"))),
            };
            factors.push((q, p));
        }
        Self::from_factors(n, &factors)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PauliTerm {
    pub coeff: f64,
    pub string: PauliString,
}

impl PauliTerm {
    pub fn new(coeff: f64, string: PauliString) -> Self {
        Self { coeff, string }
    }
}

/// `tr(H²)/2ⁿ` and whether `H` has no identity component.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceSquare {
    pub value: f64,
    pub traceless: bool,
}

/// A real-weighted sum of Pauli strings: a Hermitian operator.
///
/// Terms are kept in first-insertion order with duplicates merged.
#[derive(Debug, Clone, PartialEq)]
pub struct PauliSum {
    n: usize,
    terms: Vec<PauliTerm>,
}

impl PauliSum {
    pub fn new(n: usize, terms: impl IntoIterator<Item = PauliTerm>) -> Result<Self> {
        if n > MAX_QUBITS {
            return Err(invalid(format!("{n} qubits exceeds the supported maximum {MAX_QUBITS}")));
        }
        let mut index: HashMap<PauliString, usize> = HashMap::new();
        let mut merged: Vec<PauliTerm> = Vec::new();
        for t in terms {
            check_dims(n, t.string.n)?;
            if !t.coeff.is_finite() {
                return Err(invalid(format!("non-finite coefficient on {}", t.string)));
            }
            match index.get(&t.string) {
                Some(&i) => merged[i].coeff += t.coeff,
                None => {
                    index.insert(t.string, merged.len());
                    merged.push(t);
                }
            }
        }
        merged.retain(|t| t.coeff.abs() >= MERGE_TOLERANCE);
        Ok(Self { n, terms: merged })
    }

    pub fn zero(n: usize) -> Self {
        Self { n, terms: Vec::new() }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        1usize << self.n
    }

    pub fn terms(&self) -> &[PauliTerm] {
        &self.terms
    }

    /// Number of Pauli terms `m`.
    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Largest term weight `k`.
    pub fn max_weight(&self) -> usize {
        self.terms.iter().map(|t| t.string.weight()).max().unwrap_or(0)
    }

    pub fn identity_coeff(&self) -> f64 {
        self.terms
            .iter()
            .find(|t| t.string.is_identity())
            .map_or(0.0, |t| t.coeff)
    }

    pub fn is_traceless(&self) -> bool {
        self.identity_coeff() == 0.0
    }

    pub fn is_real(&self) -> bool {
        self.terms.iter().all(|t| t.string.is_real())
    }

    pub fn coeff_of(&self, s: &PauliString) -> f64 {
        self.terms.iter().find(|t| &t.string == s).map_or(0.0, |t| t.coeff)
    }

    pub fn scaled(&self, factor: f64) -> PauliSum {
        PauliSum::new(
            self.n,
            self.terms.iter().map(|t| PauliTerm::new(t.coeff * factor, t.string)),
        )
        .expect("scaling preserves dimensions")
    }

    /// `a·self + b·other`.
    pub fn linear_combination(&self, a: f64, other: &PauliSum, b: f64) -> Result<PauliSum> {
        check_dims(self.n, other.n)?;
        let terms = self
            .terms
            .iter()
            .map(|t| PauliTerm::new(a * t.coeff, t.string))
            .chain(other.terms.iter().map(|t| PauliTerm::new(b * t.coeff, t.string)));
        PauliSum::new(self.n, terms)
    }

    /// `H²` expanded over the `m²` products `h[i]h[j]` and merged.
    pub fn square(&self) -> PauliSum {
        let mut acc: HashMap<PauliString, Complex64> = HashMap::new();
        let mut order: Vec<PauliString> = Vec::new();
        for a in &self.terms {
            for b in &self.terms {
                let (phase, s) = a.string.mul(&b.string).expect("terms share n");
                let c = phase * (a.coeff * b.coeff);
                acc.entry(s)
                    .and_modify(|v| *v += c)
                    .or_insert_with(|| {
                        order.push(s);
                        c
                    });
            }
        }
        // Anticommuting pairs contribute ±i and cancel; what remains is real.
        let terms = order.into_iter().map(|s| PauliTerm::new(acc[&s].re, s));
        PauliSum::new(self.n, terms).expect("square preserves dimensions")
    }

    /// `tr(H²)/2ⁿ = Σ coeff²` by orthogonality of Pauli strings.
    pub fn normalized_trace_square(&self) -> TraceSquare {
        TraceSquare {
            value: self.terms.iter().map(|t| t.coeff * t.coeff).sum(),
            traceless: self.is_traceless(),
        }
    }

    /// Dense `2ⁿ × 2ⁿ` matrix. Intended for oracles and small systems.
    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let dim = self.dim();
        let mut m = DMatrix::<Complex64>::zeros(dim, dim);
        for t in &self.terms {
            for b in 0..dim {
                let (phase, b2) = t.string.apply_to_basis(b);
                m[(b2, b)] += phase * t.coeff;
            }
        }
        m
    }

    /// Dense real matrix; errors if any term carries an odd number of `Y`.
    pub fn to_dense_real(&self) -> Result<DMatrix<f64>> {
        if !self.is_real() {
            return Err(invalid("Pauli sum has complex matrix elements"));
        }
        let dim = self.dim();
        let mut m = DMatrix::<f64>::zeros(dim, dim);
        for t in &self.terms {
            for b in 0..dim {
                let (phase, b2) = t.string.apply_to_basis(b);
                m[(b2, b)] += phase.re * t.coeff;
            }
        }
        Ok(m)
    }

    pub fn to_text(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for PauliSum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for t in &self.terms {
            writeln!(f, "{:?} {}", t.coeff, t.string)?;
        }
        Ok(())
    }
}

impl FromStr for PauliSum {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut n: Option<usize> = None;
        let mut terms = Vec::new();
        for (i, raw) in s.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let parse_err = |msg: String| Error::Parse { line: i + 1, msg };
            let mut parts = line.split_whitespace();
            let (Some(c), Some(w), None) = (parts.next(), parts.next(), parts.next()) else {
                return Err(parse_err("expected `coeff word`".into()));
            };
            let coeff: f64 = c.parse().map_err(|e| parse_err(format!("bad coefficient '{c}': {e}")))?;
            let string: PauliString = w.parse().map_err(|e: Error| parse_err(e.to_string()))?;
            match n {
                None => n = Some(string.n),
                Some(n0) if n0 != string.n => {
                    return Err(parse_err(format!("word length {} differs from {n0}", string.n)))
                }
                _ => {}
            }
            terms.push(PauliTerm::new(coeff, string));
        }
        let n = n.ok_or_else(|| Error::Parse { line: 0, msg: "no terms".into() })?;
        PauliSum::new(n, terms)
    }
}

fn two_body(n: usize, a: usize, b: usize, p: Pauli) -> PauliString {
    PauliString::from_factors(n, &[(a, p), (b, p)]).expect("distinct in-range qubits")
}

fn one_body(n: usize, a: usize, p: Pauli) -> PauliString {
    PauliString::single(n, a, p).expect("in-range qubit")
}

/// Nearest-neighbour bonds of a chain, `(j, j+1)`; periodic chains add `(n-1, 0)`.
pub fn chain_bonds(n: usize, periodic: bool) -> Vec<(usize, usize)> {
    let count = if periodic { n } else { n.saturating_sub(1) };
    (0..count).map(|j| (j, (j + 1) % n)).collect()
}

/// `H = −J Σ Z_j Z_{j+1} − h Σ X_j`. Terms are ordered site by site
/// (bond `j`, then field `j`).
pub fn tfim(n: usize, j: f64, h: f64, periodic: bool) -> Result<PauliSum> {
    if n < 2 {
        return Err(invalid("TFIM needs at least 2 qubits"));
    }
    let bonds = chain_bonds(n, periodic);
    let mut terms = Vec::with_capacity(2 * n);
    for site in 0..n {
        if let Some(&(a, b)) = bonds.get(site) {
            terms.push(PauliTerm::new(-j, two_body(n, a, b, Pauli::Z)));
        }
        terms.push(PauliTerm::new(-h, one_body(n, site, Pauli::X)));
    }
    PauliSum::new(n, terms)
}

/// `H_init = −Σ X_j`, whose ground state is `|+⟩^⊗n`.
pub fn transverse_field(n: usize) -> Result<PauliSum> {
    if n < 1 {
        return Err(invalid("transverse field needs at least 1 qubit"));
    }
    PauliSum::new(n, (0..n).map(|q| PauliTerm::new(-1.0, one_body(n, q, Pauli::X))))
}

/// Open anisotropic Heisenberg chain `−Σ (Jx XX + Jy YY + Jz ZZ)` over `n − 1` bonds.
pub fn xyz_chain(n: usize, jx: f64, jy: f64, jz: f64) -> Result<PauliSum> {
    if n < 2 {
        return Err(invalid("XYZ chain needs at least 2 qubits"));
    }
    let mut terms = Vec::with_capacity(3 * (n - 1));
    for (a, b) in chain_bonds(n, false) {
        terms.push(PauliTerm::new(-jx, two_body(n, a, b, Pauli::X)));
        terms.push(PauliTerm::new(-jy, two_body(n, a, b, Pauli::Y)));
        terms.push(PauliTerm::new(-jz, two_body(n, a, b, Pauli::Z)));
    }
    PauliSum::new(n, terms)
}

/// Open-chain random-field Ising model `−Σ Z_j Z_{j+1} − Σ h_j Z_j` with
/// `h_j ~ U[0, 1)` drawn from a ChaCha stream seeded by `seed`.
pub fn random_field_ising(n: usize, seed: u64) -> Result<PauliSum> {
    let mut rng = rng_from_seed(seed);
    let fields: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
    random_field_ising_with_fields(&fields)
}

/// Random-field Ising model with explicitly supplied fields.
pub fn random_field_ising_with_fields(fields: &[f64]) -> Result<PauliSum> {
    let n = fields.len();
    if n < 2 {
        return Err(invalid("random-field Ising model needs at least 2 qubits"));
    }
    let mut terms = Vec::with_capacity(2 * n);
    for (a, b) in chain_bonds(n, false) {
        terms.push(PauliTerm::new(-1.0, two_body(n, a, b, Pauli::Z)));
    }
    for (q, &h) in fields.iter().enumerate() {
        terms.push(PauliTerm::new(-h, one_body(n, q, Pauli::Z)));
    }
    PauliSum::new(n, terms)
}
