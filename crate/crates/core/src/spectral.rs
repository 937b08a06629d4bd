//! Exact diagonalization and the residual-state analysis behind variance
//! extrapolation.
//!
//! A trial state is split into its ground-space component (weight `F²`) and a
//! normalized excited remainder with coefficients `c_j`. From these follow the
//! moments `D₁ = Σ|c_j|²(E_j − E₀)` and `D₂ = Σ|c_j|²(E_j − E₀)²`, and with
//! them closed forms for the energy, the variance, and the intercept of a
//! local linear energy-variance fit.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{check_dims, invalid, Error, Result};
use crate::hamiltonian::PauliSum;
use crate::rng::rng_from_seed;
use crate::simulator::{PauliOperator, StateVector};

/// Largest register handled by dense diagonalization.
pub const DENSE_MAX_QUBITS: usize = 12;
/// Largest number of levels the Krylov solver will target.
pub const KRYLOV_MAX_LEVELS: usize = 64;
/// Levels closer than this are treated as degenerate.
pub const DEGENERACY_TOLERANCE: f64 = 1e-8;
/// Minimum captured weight required by [`decompose`].
pub const COVERAGE_TOLERANCE: f64 = 1e-8;

const KRYLOV_RESIDUAL: f64 = 1e-10;
const KRYLOV_SEED: u64 = 0x5eed_1a9c;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiagMode {
    Dense,
    LowestK(usize),
}

/// Ascending eigenvalues with matching orthonormal eigenvectors. May be
/// truncated to the lowest levels.
#[derive(Debug, Clone)]
pub struct Spectrum {
    eigenvalues: Vec<f64>,
    eigenvectors: Vec<StateVector>,
    complete: bool,
}

impl Spectrum {
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &[StateVector] {
        &self.eigenvectors
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// Whether every level of the Hilbert space is present.
    pub fn is_complete(&self) -> bool {
        self.complete
    }

    pub fn ground_energy(&self) -> f64 {
        self.eigenvalues[0]
    }

    /// Number of levels within [`DEGENERACY_TOLERANCE`] of the ground energy.
    pub fn ground_degeneracy(&self) -> usize {
        let e0 = self.eigenvalues[0];
        self.eigenvalues.iter().take_while(|&&e| e - e0 < DEGENERACY_TOLERANCE).count()
    }

    /// Gap to the first level above the ground space, if present.
    pub fn gap(&self) -> Option<f64> {
        self.eigenvalues.get(self.ground_degeneracy()).map(|e| e - self.eigenvalues[0])
    }

    /// Smallest spacing between consecutive levels.
    pub fn min_level_spacing(&self) -> f64 {
        self.eigenvalues.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min)
    }
}

pub fn diagonalize(h: &PauliSum, mode: DiagMode) -> Result<Spectrum> {
    match mode {
        DiagMode::Dense => dense(h),
        DiagMode::LowestK(k) => lanczos(h, k),
    }
}

fn dense(h: &PauliSum) -> Result<Spectrum> {
    let n = h.n();
    if n > DENSE_MAX_QUBITS {
        return Err(invalid(format!("dense diagonalization limited to {DENSE_MAX_QUBITS} qubits, got {n}")));
    }
    let (values, vectors) = dense_eigen(h)?;
    Ok(Spectrum {
        eigenvectors: vectors.into_iter().map(|v| StateVector::new(n, v).expect("size")).collect(),
        eigenvalues: values,
        complete: true,
    })
}

/// Ascending eigenpairs of the dense matrix of `h`.
pub(crate) fn dense_eigen(h: &PauliSum) -> Result<(Vec<f64>, Vec<Vec<Complex64>>)> {
    let dim = h.dim();
    let (values, columns): (Vec<f64>, Vec<Vec<Complex64>>) = if h.is_real() {
        let eig = SymmetricEigen::new(h.to_dense_real()?);
        let cols = (0..dim)
            .map(|j| eig.eigenvectors.column(j).iter().map(|&x| Complex64::new(x, 0.0)).collect())
            .collect();
        (eig.eigenvalues.iter().copied().collect(), cols)
    } else {
        let eig = SymmetricEigen::new(h.to_dense());
        let cols = (0..dim).map(|j| eig.eigenvectors.column(j).iter().copied().collect()).collect();
        (eig.eigenvalues.iter().copied().collect(), cols)
    };
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    Ok((
        order.iter().map(|&i| values[i]).collect(),
        order.iter().map(|&i| columns[i].clone()).collect(),
    ))
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn axpy(y: &mut [Complex64], alpha: Complex64, x: &[Complex64]) {
    y.iter_mut().zip(x).for_each(|(yi, xi)| *yi += alpha * xi);
}

fn norm(a: &[Complex64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

fn orthogonalize(w: &mut [Complex64], basis: &[Vec<Complex64>]) {
    // Two passes of classical Gram-Schmidt.
    for _ in 0..2 {
        for v in basis {
            let c = dot(v, w);
            axpy(w, -c, v);
        }
    }
}

struct KrylovRun {
    values: Vec<f64>,
    vectors: Vec<Vec<Complex64>>,
}

/// One Lanczos run from `start`, deflated against `locked`, returning the
/// lowest `want` Ritz pairs once their residuals fall below tolerance.
fn lanczos_run(
    op: &PauliOperator,
    start: Vec<Complex64>,
    locked: &[Vec<Complex64>],
    want: usize,
    cap: usize,
) -> Result<KrylovRun> {
    let dim = start.len();
    let mut basis: Vec<Vec<Complex64>> = Vec::new();
    let mut alphas: Vec<f64> = Vec::new();
    let mut betas: Vec<f64> = Vec::new();
    let mut v = start;
    orthogonalize(&mut v, locked);
    let nv = norm(&v);
    if nv < 1e-12 {
        return Ok(KrylovRun { values: Vec::new(), vectors: Vec::new() });
    }
    v.iter_mut().for_each(|x| *x /= nv);
    let available = dim - locked.len();
    let mut w = vec![Complex64::new(0.0, 0.0); dim];
    let mut last_residual = f64::INFINITY;
    loop {
        op.apply_into(&v, &mut w);
        let alpha = dot(&v, &w).re;
        basis.push(v.clone());
        alphas.push(alpha);
        orthogonalize(&mut w, locked);
        orthogonalize(&mut w, &basis);
        let beta = norm(&w);
        let m = basis.len();
        let exhausted = beta < 1e-12 || m >= available;
        let check = exhausted || m >= want && (m % 5 == 0 || m >= cap);
        if check {
            let (vals, vecs) = tridiagonal_eigen(&alphas, &betas);
            let take = want.min(m);
            let residual = (0..take).map(|i| (beta * vecs[(m - 1, i)]).abs()).fold(0.0, f64::max);
            last_residual = residual;
            if exhausted || residual < KRYLOV_RESIDUAL {
                let vectors = (0..take)
                    .map(|i| {
                        let mut x = vec![Complex64::new(0.0, 0.0); dim];
                        for (j, b) in basis.iter().enumerate() {
                            axpy(&mut x, vecs[(j, i)].into(), b);
                        }
                        let nx = norm(&x);
                        x.iter_mut().for_each(|a| *a /= nx);
                        x
                    })
                    .collect();
                return Ok(KrylovRun { values: vals[..take].to_vec(), vectors });
            }
        }
        if m >= cap {
            return Err(Error::NoConvergence { what: "Lanczos eigensolver".into(), residual: last_residual });
        }
        betas.push(beta);
        v = w.iter().map(|x| x / beta).collect();
    }
}

fn tridiagonal_eigen(alphas: &[f64], betas: &[f64]) -> (Vec<f64>, DMatrix<f64>) {
    let m = alphas.len();
    let mut t = DMatrix::<f64>::zeros(m, m);
    for i in 0..m {
        t[(i, i)] = alphas[i];
        if i + 1 < m {
            t[(i, i + 1)] = betas[i];
            t[(i + 1, i)] = betas[i];
        }
    }
    let eig = SymmetricEigen::new(t);
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vecs = DMatrix::from_fn(m, m, |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vecs)
}

/// Lowest `k` eigenpairs by Lanczos with full reorthogonalization.
///
/// A single Krylov run sees one vector per distinct eigenvalue, so after the
/// first run the solver restarts from fresh random vectors deflated against
/// the accepted pairs until no level below the current `k`-th is found.
fn lanczos(h: &PauliSum, k: usize) -> Result<Spectrum> {
    if k == 0 || k > KRYLOV_MAX_LEVELS {
        return Err(invalid(format!("lowest_k requires 1 <= K <= {KRYLOV_MAX_LEVELS}, got {k}")));
    }
    let n = h.n();
    let dim = h.dim();
    let k = k.min(dim);
    let op = PauliOperator::new(h);
    let cap = (10 * k * n.max(1)).max(1);
    let mut rng = rng_from_seed(KRYLOV_SEED);
    let mut random_start = || StateVector::random(n, &mut rng).into_amps();

    let first = lanczos_run(&op, random_start(), &[], k, cap)?;
    let mut pairs: Vec<(f64, Vec<Complex64>)> = first.values.into_iter().zip(first.vectors).collect();
    loop {
        if pairs.len() >= dim {
            break;
        }
        let locked: Vec<Vec<Complex64>> = pairs.iter().map(|p| p.1.clone()).collect();
        let probe = lanczos_run(&op, random_start(), &locked, 1, cap)?;
        let Some(&value) = probe.values.first() else { break };
        let threshold = pairs.last().map_or(f64::INFINITY, |p| p.0) - DEGENERACY_TOLERANCE;
        if pairs.len() >= k && value >= threshold {
            break;
        }
        pairs.push((value, probe.vectors.into_iter().next().expect("one vector")));
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        pairs.truncate(k);
    }
    // Final Rayleigh-Ritz on the accepted subspace to restore exact orthonormality.
    let spectrum = Spectrum {
        eigenvalues: pairs.iter().map(|p| p.0).collect(),
        eigenvectors: pairs.into_iter().map(|p| StateVector::new(n, p.1).expect("size")).collect(),
        complete: k == dim,
    };
    Ok(spectrum)
}

/// Residual norm `‖H v − E v‖` for each level (diagnostic).
pub fn residuals(h: &PauliSum, spec: &Spectrum) -> Result<Vec<f64>> {
    let op = PauliOperator::new(h);
    spec.eigenvectors
        .iter()
        .zip(&spec.eigenvalues)
        .map(|(v, &e)| {
            let hv = op.apply(v)?;
            Ok(hv.amps().iter().zip(v.amps()).map(|(a, b)| (a - b * e).norm_sqr()).sum::<f64>().sqrt())
        })
        .collect()
}

/// `ψ = F·|g⟩ + e^{iφ}√(1−F²)·Σ c_j|φ_j⟩`, with `|g⟩` the normalized
/// projection of `ψ` onto the ground space.
#[derive(Debug, Clone)]
pub struct ResidualDecomposition {
    pub fidelity: f64,
    pub phase: Complex64,
    pub ground_component: StateVector,
    /// Excited coefficients indexed by spectrum level (ground levels hold 0);
    /// `None` when the state lies in the ground space.
    pub excited: Option<Vec<Complex64>>,
    /// Weight of `ψ` inside the spectrum's span.
    pub captured_weight: f64,
}

impl ResidualDecomposition {
    pub fn excited_weight(&self) -> f64 {
        1.0 - self.fidelity * self.fidelity
    }

    pub fn reconstruct(&self, spec: &Spectrum) -> StateVector {
        let n = self.ground_component.n();
        let mut amps: Vec<Complex64> = self.ground_component.amps().iter().map(|a| a * self.fidelity).collect();
        if let Some(c) = &self.excited {
            let scale = self.phase * self.excited_weight().sqrt();
            for (cj, v) in c.iter().zip(spec.eigenvectors()) {
                axpy(&mut amps, scale * cj, v.amps());
            }
        }
        StateVector::new(n, amps).expect("size")
    }
}

pub fn decompose(psi: &StateVector, spec: &Spectrum) -> Result<ResidualDecomposition> {
    let first = spec.eigenvectors.first().ok_or_else(|| invalid("empty spectrum"))?;
    check_dims(first.dim(), psi.dim())?;
    let overlaps: Vec<Complex64> = spec.eigenvectors.iter().map(|v| v.inner(psi)).collect::<Result<_>>()?;
    let captured: f64 = overlaps.iter().map(|o| o.norm_sqr()).sum::<f64>() / psi.norm_sqr();
    if captured < 1.0 - COVERAGE_TOLERANCE {
        return Err(Error::InsufficientCoverage { captured });
    }
    let g = spec.ground_degeneracy();
    let mut ground = vec![Complex64::new(0.0, 0.0); psi.dim()];
    for (o, v) in overlaps[..g].iter().zip(&spec.eigenvectors) {
        axpy(&mut ground, *o, v.amps());
    }
    let f2: f64 = overlaps[..g].iter().map(|o| o.norm_sqr()).sum::<f64>().min(1.0);
    let fidelity = f2.sqrt();
    let ground_component = if fidelity > 0.0 {
        StateVector::new(psi.n(), ground.into_iter().map(|a| a / fidelity).collect())?
    } else {
        spec.eigenvectors[0].clone()
    };
    let excited_weight = 1.0 - f2;
    let (phase, excited) = if excited_weight > 1e-14 {
        let pivot = overlaps[g..]
            .iter()
            .copied()
            .max_by(|a, b| a.norm_sqr().total_cmp(&b.norm_sqr()))
            .unwrap_or(Complex64::new(1.0, 0.0));
        let phase = if pivot.norm() > 0.0 { pivot / pivot.norm() } else { Complex64::new(1.0, 0.0) };
        let scale = phase * excited_weight.sqrt();
        let c = overlaps
            .iter()
            .enumerate()
            .map(|(j, o)| if j < g { Complex64::new(0.0, 0.0) } else { o / scale })
            .collect();
        (phase, Some(c))
    } else {
        (Complex64::new(1.0, 0.0), None)
    };
    Ok(ResidualDecomposition { fidelity, phase, ground_component, excited, captured_weight: captured })
}

/// Phase-insensitive distance between the excited parts of two decompositions,
/// `‖ |c_a| − |c_b| ‖₂`. Small values mean the excited component is stable.
pub fn excited_drift(a: &ResidualDecomposition, b: &ResidualDecomposition) -> Option<f64> {
    let (ca, cb) = (a.excited.as_ref()?, b.excited.as_ref()?);
    Some(ca.iter().zip(cb).map(|(x, y)| (x.norm() - y.norm()).powi(2)).sum::<f64>().sqrt())
}

/// First and second energy moments of the excited component.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentPair {
    pub d1: f64,
    pub d2: f64,
}

impl MomentPair {
    /// `D₂/D₁`, the zero-energy slope of the variance parabola.
    pub fn ratio(&self) -> f64 {
        self.d2 / self.d1
    }
}

pub fn moments(decomp: &ResidualDecomposition, spec: &Spectrum) -> Result<MomentPair> {
    let c = decomp
        .excited
        .as_ref()
        .ok_or_else(|| Error::Degenerate("state lies in the ground space; moments undefined".into()))?;
    let e0 = spec.ground_energy();
    let (mut d1, mut d2) = (0.0, 0.0);
    for (cj, &ej) in c.iter().zip(spec.eigenvalues()) {
        let w = cj.norm_sqr();
        d1 += w * (ej - e0);
        d2 += w * (ej - e0) * (ej - e0);
    }
    Ok(MomentPair { d1, d2 })
}

/// Variance on the parabola `Δvar = (D₂/D₁)·E_res − E_res²`.
pub fn predict_variance(e_res: f64, m: &MomentPair) -> Result<f64> {
    let r = m.ratio();
    if !(0.0..=r).contains(&e_res) {
        return Err(invalid(format!("E_res = {e_res} outside the parabola branch [0, {r}]")));
    }
    Ok((r * e_res - e_res * e_res).max(0.0))
}

/// Magnitude of the error left by extrapolating the tangent of the variance
/// parabola at `E_res` to zero variance: `E_res² / (D₂/D₁ − 2E_res)`.
///
/// The parabola is concave, so the tangent meets zero variance *below* the
/// ground energy; see [`predict_intercept`].
pub fn predict_extrapolation_bias(e_res: f64, m: &MomentPair) -> Result<f64> {
    let denom = m.ratio() - 2.0 * e_res;
    if denom <= 0.0 {
        return Err(invalid(format!(
            "D2/D1 = {} must exceed 2 E_res = {}; the fit point is past the parabola vertex",
            m.ratio(),
            2.0 * e_res
        )));
    }
    Ok(e_res * e_res / denom)
}

/// Zero-variance intercept of the local linear fit: `E_gs − bias`.
pub fn predict_intercept(e_gs: f64, e_res: f64, m: &MomentPair) -> Result<f64> {
    Ok(e_gs - predict_extrapolation_bias(e_res, m)?)
}

/// Closed forms for a globally depolarized state `(1−ε′)|ψ⟩⟨ψ| + ε′I/N`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NoisyPrediction {
    /// `Δvar′ = (D₂/D₁)E′_res − E′_res² + ε′C′`.
    pub variance: f64,
    /// Tangent intercept `E′ − Δvar′/(D₂/D₁ − 2E′_res) = E_gs − (E′_res² + ε′C′)/(D₂/D₁ − 2E′_res)`.
    pub extrapolated: f64,
    /// `C′ = (D₂/D₁)E_gs + E_gs² + tr(H²)/N`.
    pub c_prime: f64,
}

/// Noisy-state predictions for a traceless Hamiltonian; `tr2 = tr(H²)/N`.
pub fn predict_noisy_extrapolation(
    e_res_noisy: f64,
    m: &MomentPair,
    eps: f64,
    e_gs: f64,
    tr2: f64,
) -> Result<NoisyPrediction> {
    if !(0.0..=1.0).contains(&eps) {
        return Err(invalid(format!("noise rate {eps} outside [0, 1]")));
    }
    let r = m.ratio();
    let c_prime = r * e_gs + e_gs * e_gs + tr2;
    let denom = r - 2.0 * e_res_noisy;
    if denom <= 0.0 {
        return Err(invalid(format!("denominator D2/D1 - 2E'_res = {denom} is not positive")));
    }
    let variance = r * e_res_noisy - e_res_noisy * e_res_noisy + eps * c_prime;
    let extrapolated = e_gs - (e_res_noisy * e_res_noisy + eps * c_prime) / denom;
    Ok(NoisyPrediction { variance, extrapolated, c_prime })
}
