//! Quantum annealing: Schrödinger evolution under
//! `H(t) = f(t/t_a)·H_init + g(t/t_a)·H_f`, annealing-time sweeps, and the
//! adaptive extrapolation loop.
//!
//! The propagator is a symmetric split with coefficients frozen at each step
//! midpoint. The Pauli strings of both Hamiltonians are partitioned into
//! mutually commuting groups; the all-diagonal group becomes one phase
//! vector and every other group a product of exact Pauli rotations.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_dims, invalid, Error, Result};
use crate::extrapolation::{fit, ExtrapolationMode, FitResult};
use crate::hamiltonian::{Pauli, PauliString, PauliSum};
use crate::simulator::{apply_1q, apply_pauli_rotation, Observable, QuantumState, StateVector};

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

const ENDPOINT_TOLERANCE: f64 = 1e-12;

/// Interpolation weights `f(s)` for `H_init` and `g(s)` for `H_f`.
#[derive(Clone)]
pub struct Schedule {
    name: String,
    f: ScalarFn,
    g: ScalarFn,
    df: Option<ScalarFn>,
    dg: Option<ScalarFn>,
}

impl fmt::Debug for Schedule {
    fn fmt(&self, fm: &mut fmt::Formatter<'_>) -> fmt::Result {
        fm.debug_struct("Schedule").field("name", &self.name).finish_non_exhaustive()
    }
}

impl Schedule {
    /// `f(s) = 1 − s`, `g(s) = s`.
    pub fn linear() -> Self {
        Self {
            name: "linear".into(),
            f: Arc::new(|s| 1.0 - s),
            g: Arc::new(|s| s),
            df: Some(Arc::new(|_| -1.0)),
            dg: Some(Arc::new(|_| 1.0)),
        }
    }

    /// A user schedule; derivatives fall back to finite differences.
    pub fn custom(
        name: impl Into<String>,
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
        g: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        let s = Self { name: name.into(), f: Arc::new(f), g: Arc::new(g), df: None, dg: None };
        s.check_endpoints()?;
        Ok(s)
    }

    pub fn check_endpoints(&self) -> Result<()> {
        let ok = |v: f64, t: f64| (v - t).abs() <= ENDPOINT_TOLERANCE;
        if ok(self.f(0.0), 1.0) && ok(self.f(1.0), 0.0) && ok(self.g(0.0), 0.0) && ok(self.g(1.0), 1.0) {
            Ok(())
        } else {
            Err(invalid(format!("schedule '{}' violates f(0)=1, f(1)=0, g(0)=0, g(1)=1", self.name)))
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn f(&self, s: f64) -> f64 {
        (self.f)(s)
    }

    pub fn g(&self, s: f64) -> f64 {
        (self.g)(s)
    }

    pub fn df(&self, s: f64) -> f64 {
        match &self.df {
            Some(d) => d(s),
            None => derivative(&*self.f, s),
        }
    }

    pub fn dg(&self, s: f64) -> f64 {
        match &self.dg {
            Some(d) => d(s),
            None => derivative(&*self.g, s),
        }
    }
}

fn derivative(h: &dyn Fn(f64) -> f64, s: f64) -> f64 {
    let e = 1e-5;
    if s < e {
        (-3.0 * h(s) + 4.0 * h(s + e) - h(s + 2.0 * e)) / (2.0 * e)
    } else if s > 1.0 - e {
        (3.0 * h(s) - 4.0 * h(s - e) + h(s - 2.0 * e)) / (2.0 * e)
    } else {
        (h(s + e) - h(s - e)) / (2.0 * e)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitOrder {
    /// Symmetric second-order split.
    Second,
    /// Fourth-order triple-jump composition of the second-order step.
    Fourth,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvolveConfig {
    pub dt: f64,
    pub order: SplitOrder,
    /// Repeat with `dt/2` and require `|ΔE| < halving_tolerance`.
    pub check_halving: bool,
    pub halving_tolerance: f64,
    pub max_halvings: usize,
}

impl Default for EvolveConfig {
    fn default() -> Self {
        Self { dt: 0.02, order: SplitOrder::Fourth, check_halving: true, halving_tolerance: 1e-7, max_halvings: 4 }
    }
}

/// Norm drift tolerated before a run is rejected.
pub const NORM_DRIFT_LIMIT: f64 = 1e-8;

struct Rotation {
    string: PauliString,
    a_init: f64,
    a_final: f64,
}

/// Pauli strings of `H_init` and `H_f` partitioned for exact group exponentials.
struct SplitPlan {
    n: usize,
    diag_init: Vec<f64>,
    diag_final: Vec<f64>,
    has_diag: bool,
    groups: Vec<Vec<Rotation>>,
}

impl SplitPlan {
    fn new(h_init: &PauliSum, h_f: &PauliSum) -> Result<Self> {
        check_dims(h_init.n(), h_f.n())?;
        let n = h_init.n();
        let dim = 1usize << n;
        let mut strings: Vec<PauliString> = Vec::new();
        for t in h_init.terms().iter().chain(h_f.terms()) {
            if !t.string.is_identity() && !strings.contains(&t.string) {
                strings.push(t.string);
            }
        }
        let mut diag_init = vec![0.0; dim];
        let mut diag_final = vec![0.0; dim];
        let mut has_diag = false;
        let mut groups: Vec<Vec<Rotation>> = Vec::new();
        for s in strings {
            let (a_init, a_final) = (h_init.coeff_of(&s), h_f.coeff_of(&s));
            if s.is_diagonal() {
                has_diag = true;
                let z = s.z_mask();
                for b in 0..dim {
                    let sign = if (z & b as u64).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
                    diag_init[b] += sign * a_init;
                    diag_final[b] += sign * a_final;
                }
                continue;
            }
            let r = Rotation { string: s, a_init, a_final };
            match groups.iter_mut().find(|g| g.iter().all(|o| o.string.commutes_with(&s))) {
                Some(g) => g.push(r),
                None => groups.push(vec![r]),
            }
        }
        Ok(Self { n, diag_init, diag_final, has_diag, groups })
    }

    fn apply_diag(&self, amps: &mut [Complex64], wf: f64, wg: f64) {
        if !self.has_diag || (wf == 0.0 && wg == 0.0) {
            return;
        }
        for ((a, di), df) in amps.iter_mut().zip(&self.diag_init).zip(&self.diag_final) {
            let (s, c) = (wf * di + wg * df).sin_cos();
            *a *= Complex64::new(c, -s);
        }
    }

    fn apply_group(&self, amps: &mut [Complex64], k: usize, wf: f64, wg: f64) {
        for r in &self.groups[k] {
            let theta = wf * r.a_init + wg * r.a_final;
            if theta == 0.0 {
                continue;
            }
            if r.string.weight() == 1 {
                let q = r.string.support_qubits()[0];
                apply_1q(amps, q, &single_qubit_exp(r.string.factor(q), theta));
            } else {
                apply_pauli_rotation(amps, &r.string, theta);
            }
        }
    }

    /// Symmetric sequence over the off-diagonal groups:
    /// `G₀(½)…G_{k−2}(½) G_{k−1}(1) G_{k−2}(½)…G₀(½)`.
    fn apply_offdiag(&self, amps: &mut [Complex64], wf: f64, wg: f64) {
        let k = self.groups.len();
        if k == 0 {
            return;
        }
        for g in 0..k - 1 {
            self.apply_group(amps, g, wf / 2.0, wg / 2.0);
        }
        self.apply_group(amps, k - 1, wf, wg);
        for g in (0..k - 1).rev() {
            self.apply_group(amps, g, wf / 2.0, wg / 2.0);
        }
    }
}

/// `e^{−iθσ}` for a non-identity single-qubit Pauli `σ`.
fn single_qubit_exp(sigma: Pauli, theta: f64) -> [Complex64; 4] {
    let (s, c) = theta.sin_cos();
    let c = Complex64::new(c, 0.0);
    let z = Complex64::new(0.0, 0.0);
    match sigma {
        Pauli::X => [c, Complex64::new(0.0, -s), Complex64::new(0.0, -s), c],
        Pauli::Y => [c, Complex64::new(-s, 0.0), Complex64::new(s, 0.0), c],
        _ => [Complex64::new(c.re, -s), z, z, Complex64::new(c.re, s)],
    }
}

/// Triple-jump weights `(w₁, w₀, w₁)`.
fn triple_jump() -> [f64; 3] {
    let cbrt2 = 2f64.cbrt();
    let w1 = 1.0 / (2.0 - cbrt2);
    [w1, -cbrt2 * w1, w1]
}

fn propagate(plan: &SplitPlan, sched: &Schedule, psi: &mut [Complex64], t_a: f64, dt: f64, order: SplitOrder) {
    let steps = (t_a / dt).ceil().max(1.0) as usize;
    let h = t_a / steps as f64;
    let weights: &[f64] = match order {
        SplitOrder::Second => &[1.0],
        SplitOrder::Fourth => &triple_jump(),
    };
    // Diagonal half-steps of neighbouring substeps are merged into one pass.
    let (mut pf, mut pg) = (0.0, 0.0);
    for k in 0..steps {
        let mut t = k as f64 * h;
        for &w in weights {
            let tau = w * h;
            let s_mid = (t + tau / 2.0) / t_a;
            let (f, g) = (sched.f(s_mid), sched.g(s_mid));
            pf += tau / 2.0 * f;
            pg += tau / 2.0 * g;
            plan.apply_diag(psi, pf, pg);
            plan.apply_offdiag(psi, tau * f, tau * g);
            pf = tau / 2.0 * f;
            pg = tau / 2.0 * g;
            t += tau;
        }
    }
    plan.apply_diag(psi, pf, pg);
}

/// Outcome of one annealing run.
#[derive(Debug, Clone)]
pub struct AnnealRun {
    pub t_a: f64,
    pub dt: f64,
    pub energy: f64,
    pub variance: f64,
    pub final_state: StateVector,
}

/// Evolve from `|+⟩^⊗n`, the ground state of `−Σ X_j`.
pub fn evolve(h_init: &PauliSum, h_f: &PauliSum, sched: &Schedule, t_a: f64, cfg: &EvolveConfig) -> Result<AnnealRun> {
    evolve_from(h_init, h_f, sched, t_a, cfg, &StateVector::plus_state(h_init.n()))
}

pub fn evolve_from(
    h_init: &PauliSum,
    h_f: &PauliSum,
    sched: &Schedule,
    t_a: f64,
    cfg: &EvolveConfig,
    initial: &StateVector,
) -> Result<AnnealRun> {
    if !(t_a > 0.0) || !(cfg.dt > 0.0) {
        return Err(invalid(format!("need t_a > 0 and dt > 0, got t_a = {t_a}, dt = {}", cfg.dt)));
    }
    if cfg.dt > t_a {
        return Err(invalid(format!("dt = {} exceeds t_a = {t_a}", cfg.dt)));
    }
    check_dims(h_init.n(), initial.n())?;
    initial.check_normalized()?;
    let plan = SplitPlan::new(h_init, h_f)?;
    let obs = Observable::new(h_f);
    let run = |dt: f64| -> Result<(StateVector, f64, f64)> {
        let mut amps = initial.amps().to_vec();
        propagate(&plan, sched, &mut amps, t_a, dt, cfg.order);
        let psi = StateVector::new(plan.n, amps)?;
        let drift = (psi.norm() - initial.norm()).abs();
        if drift > NORM_DRIFT_LIMIT {
            return Err(Error::NormDrift { drift });
        }
        let (e, v) = obs.energy_and_variance(&QuantumState::Pure(psi.clone()))?;
        Ok((psi, e, v))
    };
    let mut dt = cfg.dt;
    let (mut psi, mut e, mut v) = run(dt)?;
    if cfg.check_halving {
        let mut change = f64::INFINITY;
        for _ in 0..=cfg.max_halvings {
            let (psi2, e2, v2) = run(dt / 2.0)?;
            change = (e2 - e).abs();
            dt /= 2.0;
            (psi, e, v) = (psi2, e2, v2);
            if change < cfg.halving_tolerance {
                break;
            }
        }
        if change >= cfg.halving_tolerance {
            return Err(Error::NoConvergence { what: format!("time step at t_a = {t_a}"), residual: change });
        }
    }
    Ok(AnnealRun { t_a, dt, energy: e, variance: v, final_state: psi })
}

/// One run per `t_a`, in input order; runs execute in parallel.
pub fn run_sweep(
    h_init: &PauliSum,
    h_f: &PauliSum,
    sched: &Schedule,
    t_as: &[f64],
    cfg: &EvolveConfig,
) -> Result<Vec<AnnealRun>> {
    if t_as.is_empty() {
        return Err(invalid("empty annealing-time list"));
    }
    if t_as.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(invalid("annealing times must be strictly increasing"));
    }
    t_as.par_iter().map(|&t| evolve(h_init, h_f, sched, t, cfg)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdaptiveConfig {
    /// Window growth per pass.
    pub eta: f64,
    /// Convergence threshold on successive intercepts.
    pub eps_tol: f64,
    pub points: usize,
    pub mode: ExtrapolationMode,
    pub t_init: f64,
    pub t_max: f64,
}

impl Default for AdaptiveConfig {
    fn default() -> Self {
        Self { eta: 5.0, eps_tol: 1e-3, points: 6, mode: ExtrapolationMode::Time, t_init: 20.0, t_max: 200.0 }
    }
}

impl AdaptiveConfig {
    pub fn validate(&self) -> Result<()> {
        if self.points < 3 {
            return Err(invalid("adaptive extrapolation needs at least 3 points"));
        }
        if !(self.eta > 0.0) || !(self.eps_tol > 0.0) || !(self.t_init > 0.0) {
            return Err(invalid("eta, eps_tol and t_init must be positive"));
        }
        if !(self.t_max >= self.t_init) {
            return Err(invalid("t_max must be at least t_init"));
        }
        Ok(())
    }
}

/// `points` evenly spaced times over `[3T/4, T]`, both ends included.
pub fn window(t: f64, points: usize) -> Vec<f64> {
    let last = (points - 1) as f64;
    (0..points).map(|k| t * (0.75 + 0.25 * k as f64 / last)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaptivePass {
    pub t: f64,
    pub t_as: Vec<f64>,
    pub energies: Vec<f64>,
    pub variances: Vec<f64>,
    pub fit: FitResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaptiveOutcome {
    pub e_extrp: f64,
    pub converged: bool,
    pub history: Vec<AdaptivePass>,
}

/// The adaptive loop over an arbitrary measurement `t_a ↦ (E, Δvar)`.
///
/// Each pass measures the window ending at `T`, fits the configured
/// regression, and stops once successive intercepts differ by less than
/// `eps_tol`. Passing `t_max` ends the loop with `converged = false`.
pub fn adaptive_extrapolate_with<F>(measure: F, cfg: &AdaptiveConfig) -> Result<AdaptiveOutcome>
where
    F: Fn(f64) -> Result<(f64, f64)> + Sync,
{
    cfg.validate()?;
    let mut cache: HashMap<u64, (f64, f64)> = HashMap::new();
    let mut history: Vec<AdaptivePass> = Vec::new();
    let mut t = cfg.t_init;
    while t <= cfg.t_max * (1.0 + 1e-12) {
        let t_as = window(t, cfg.points);
        let missing: Vec<f64> = t_as.iter().copied().filter(|x| !cache.contains_key(&x.to_bits())).collect();
        let measured: Vec<(f64, f64)> = missing.par_iter().map(|&x| measure(x)).collect::<Result<_>>()?;
        for (x, m) in missing.iter().zip(measured) {
            cache.insert(x.to_bits(), m);
        }
        let (energies, variances): (Vec<f64>, Vec<f64>) = t_as.iter().map(|x| cache[&x.to_bits()]).unzip();
        let pts: Vec<(f64, f64)> = match cfg.mode {
            ExtrapolationMode::Time => t_as.iter().copied().zip(energies.iter().copied()).collect(),
            ExtrapolationMode::Variance => variances.iter().copied().zip(energies.iter().copied()).collect(),
        };
        let f = fit(cfg.mode, &pts)?;
        let previous = history.last().map(|p| p.fit.alpha0);
        history.push(AdaptivePass { t, t_as, energies, variances, fit: f });
        if let Some(prev) = previous {
            if (f.alpha0 - prev).abs() < cfg.eps_tol {
                return Ok(AdaptiveOutcome { e_extrp: f.alpha0, converged: true, history });
            }
        }
        t += cfg.eta;
    }
    let e_extrp = history.last().map_or(f64::NAN, |p| p.fit.alpha0);
    Ok(AdaptiveOutcome { e_extrp, converged: false, history })
}

/// The adaptive loop driven by annealing runs.
pub fn adaptive_extrapolate(
    h_init: &PauliSum,
    h_f: &PauliSum,
    sched: &Schedule,
    cfg: &AdaptiveConfig,
    evolve_cfg: &EvolveConfig,
) -> Result<AdaptiveOutcome> {
    adaptive_extrapolate_with(
        |t| evolve(h_init, h_f, sched, t, evolve_cfg).map(|r| (r.energy, r.variance)),
        cfg,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::{tfim, transverse_field};
    use crate::spectral::{diagonalize, DiagMode};
    use approx::assert_abs_diff_eq;

    #[test]
    fn schedule_endpoints() {
        Schedule::linear().check_endpoints().unwrap();
        assert!(Schedule::custom("bad", |s| 1.0 - s * s, |s| s * 0.5).is_err());
        let quad = Schedule::custom("quad", |s| (1.0 - s) * (1.0 - s), |s| 1.0 - (1.0 - s) * (1.0 - s)).unwrap();
        assert_abs_diff_eq!(quad.df(0.5), -1.0, epsilon = 1e-8);
        assert_abs_diff_eq!(quad.dg(0.0), 2.0, epsilon = 1e-8);
    }

    #[test]
    fn window_points() {
        let w = window(20.0, 6);
        let expected = [15.0, 16.0, 17.0, 18.0, 19.0, 20.0];
        for (a, b) in w.iter().zip(expected) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn stationary_evolution() {
        let h = transverse_field(4).unwrap();
        let cfg = EvolveConfig { dt: 0.01, ..Default::default() };
        let run = evolve(&h, &h, &Schedule::linear(), 3.0, &cfg).unwrap();
        assert_abs_diff_eq!(run.energy, -4.0, epsilon = 1e-10);
        let overlap = run.final_state.inner(&StateVector::plus_state(4)).unwrap().norm();
        assert_abs_diff_eq!(overlap, 1.0, epsilon = 1e-10);
    }

    #[test]
    fn split_matches_dense_propagator_for_constant_hamiltonian() {
        // H_init = H_f: e^{-i t H} exactly up to the split error
        let h = tfim(3, 1.0, 0.7, true).unwrap();
        let spec = diagonalize(&h, DiagMode::Dense).unwrap();
        let psi0 = StateVector::plus_state(3);
        let t = 1.3;
        let mut exact = vec![Complex64::new(0.0, 0.0); 8];
        for (e, v) in spec.eigenvalues().iter().zip(spec.eigenvectors()) {
            let c = v.inner(&psi0).unwrap() * Complex64::from_polar(1.0, -e * t);
            exact.iter_mut().zip(v.amps()).for_each(|(x, a)| *x += c * a);
        }
        let cfg = EvolveConfig { dt: 0.001, check_halving: false, ..Default::default() };
        let run = evolve(&h, &h, &Schedule::linear(), t, &cfg).unwrap();
        let fid = run.final_state.inner(&StateVector::new(3, exact).unwrap()).unwrap().norm();
        assert_abs_diff_eq!(fid, 1.0, epsilon = 1e-8);
    }

    #[test]
    fn fourth_order_beats_second_order() {
        let h_init = transverse_field(4).unwrap();
        let h_f = tfim(4, 1.0, 1.0, true).unwrap();
        let sched = Schedule::linear();
        let run = |dt, order| {
            let cfg = EvolveConfig { dt, order, check_halving: false, ..Default::default() };
            evolve(&h_init, &h_f, &sched, 5.0, &cfg).unwrap().final_state
        };
        let reference = run(0.0005, SplitOrder::Fourth);
        let err = |s: StateVector| 1.0 - s.inner(&reference).unwrap().norm();
        let e2 = err(run(0.05, SplitOrder::Second));
        let e4 = err(run(0.05, SplitOrder::Fourth));
        assert!(e4 < e2 / 10.0, "second {e2:e}, fourth {e4:e}");
    }

    #[test]
    fn deep_adiabatic_tfim() {
        let h_f = tfim(8, 1.0, 1.0, true).unwrap();
        let e_gs = diagonalize(&h_f, DiagMode::LowestK(1)).unwrap().ground_energy();
        let run = evolve(&transverse_field(8).unwrap(), &h_f, &Schedule::linear(), 100.0, &EvolveConfig::default())
            .unwrap();
        assert!(run.energy - e_gs < 1e-3);
        assert!(run.energy >= e_gs - 1e-8);
    }

    #[test]
    fn adaptive_exact_model() {
        let cfg = AdaptiveConfig { eta: 5.0, eps_tol: 1e-6, ..Default::default() };
        let out = adaptive_extrapolate_with(|t| Ok((-3.0 + 4.0 / (t * t), 0.0)), &cfg).unwrap();
        assert!(out.converged);
        assert_eq!(out.history.len(), 2);
        assert_abs_diff_eq!(out.e_extrp, -3.0, epsilon = 1e-9);
    }

    #[test]
    fn adaptive_reports_non_convergence() {
        let cfg = AdaptiveConfig { eta: 5.0, eps_tol: 1e-12, t_max: 30.0, ..Default::default() };
        let out = adaptive_extrapolate_with(|t| Ok((1.0 / t, 0.0)), &cfg).unwrap();
        assert!(!out.converged);
        assert_eq!(out.history.len(), 3);
    }

    #[test]
    fn sweep_preconditions() {
        let h = transverse_field(2).unwrap();
        assert!(run_sweep(&h, &h, &Schedule::linear(), &[], &EvolveConfig::default()).is_err());
        assert!(run_sweep(&h, &h, &Schedule::linear(), &[2.0, 1.0], &EvolveConfig::default()).is_err());
        let one = run_sweep(&h, &h, &Schedule::linear(), &[1.0], &EvolveConfig::default()).unwrap();
        assert_eq!(one.len(), 1);
    }
}
