//! Variational quantum eigensolver: ansätze, noisy evaluation, optimizers and
//! trace recording.

use std::cell::RefCell;
use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_dims, invalid, Result};
use crate::hamiltonian::{chain_bonds, PauliSum};
use crate::rng::{derive_seed, derived_rng, rng_from_seed};
use crate::simulator::{apply_1q, apply_depolarizing, DensityMatrix, GateOp, Observable, QuantumState, StateVector};

/// Energy drop that triggers a new trace point.
pub const RECORD_STEP: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnsatzKind {
    /// Hamiltonian-variational ansatz with `p` layers.
    Hva { p: usize },
    HardwareEfficient,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitialState {
    /// `|+⟩^⊗n`
    Plus,
    /// `|0⟩^⊗n`
    Zero,
}

/// Gates reference their parameter by index.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ParamGate {
    /// `e^{−iθ Z_a Z_b}`
    Rzz { a: usize, b: usize, param: usize },
    /// `e^{−iθ X_q}`
    Xrot { q: usize, param: usize },
    /// `e^{−iθ Y_q / 2}`
    Ry { q: usize, param: usize },
    Cnot { control: usize, target: usize },
}

impl ParamGate {
    fn op(&self, theta: &[f64]) -> GateOp {
        match *self {
            ParamGate::Rzz { a, b, param } => GateOp::rzz(a, b, theta[param]),
            ParamGate::Xrot { q, param } => GateOp::rx(q, 2.0 * theta[param]),
            ParamGate::Ry { q, param } => GateOp::ry(q, theta[param]),
            ParamGate::Cnot { control, target } => GateOp::cnot(control, target),
        }
    }

    fn two_qubit(&self) -> Option<[usize; 2]> {
        match *self {
            ParamGate::Rzz { a, b, .. } => Some([a, b]),
            ParamGate::Cnot { control, target } => Some([control, target]),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct AnsatzCircuit {
    n: usize,
    kind: AnsatzKind,
    gates: Vec<ParamGate>,
    param_count: usize,
    initial: InitialState,
    /// HVA only: `Σ_bonds Z_a Z_b` on each basis state.
    bond_sum: Option<(Vec<i32>, i32)>,
}

/// `∏_l e^{−iθ_{2l} ΣX} e^{−iθ_{2l−1} ΣZZ}` over periodic bonds, from `|+⟩^⊗n`.
pub fn build_hva(n: usize, p: usize) -> Result<AnsatzCircuit> {
    if n < 2 || p < 1 {
        return Err(invalid(format!("HVA needs n >= 2 and p >= 1, got n = {n}, p = {p}")));
    }
    let bonds = chain_bonds(n, n > 2);
    let mut gates = Vec::with_capacity(p * (bonds.len() + n));
    for l in 0..p {
        gates.extend(bonds.iter().map(|&(a, b)| ParamGate::Rzz { a, b, param: 2 * l }));
        gates.extend((0..n).map(|q| ParamGate::Xrot { q, param: 2 * l + 1 }));
    }
    let table = (0..1usize << n)
        .map(|x| bonds.iter().map(|&(a, b)| if ((x >> a) ^ (x >> b)) & 1 == 0 { 1 } else { -1 }).sum())
        .collect();
    Ok(AnsatzCircuit {
        n,
        kind: AnsatzKind::Hva { p },
        gates,
        param_count: 2 * p,
        initial: InitialState::Plus,
        bond_sum: Some((table, bonds.len() as i32)),
    })
}

/// Four-qubit circuit: `Ry` on every qubit, CNOT chain `0→1→2→3`, `Ry` on
/// every qubit; eight independent angles, starting from `|0000⟩`.
pub fn build_hardware_efficient_4q() -> AnsatzCircuit {
    let n = 4;
    let mut gates: Vec<ParamGate> = (0..n).map(|q| ParamGate::Ry { q, param: q }).collect();
    gates.extend((0..n - 1).map(|q| ParamGate::Cnot { control: q, target: q + 1 }));
    gates.extend((0..n).map(|q| ParamGate::Ry { q, param: n + q }));
    AnsatzCircuit {
        n,
        kind: AnsatzKind::HardwareEfficient,
        gates,
        param_count: 2 * n,
        initial: InitialState::Zero,
        bond_sum: None,
    }
}

impl AnsatzCircuit {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn kind(&self) -> AnsatzKind {
        self.kind
    }

    pub fn gates(&self) -> &[ParamGate] {
        &self.gates
    }

    pub fn param_count(&self) -> usize {
        self.param_count
    }

    pub fn initial(&self) -> InitialState {
        self.initial
    }

    pub fn two_qubit_gate_count(&self) -> usize {
        self.gates.iter().filter(|g| g.two_qubit().is_some()).count()
    }

    fn initial_state(&self) -> StateVector {
        match self.initial {
            InitialState::Plus => StateVector::plus_state(self.n),
            InitialState::Zero => StateVector::zero_state(self.n),
        }
    }

    fn check_params(&self, theta: &[f64]) -> Result<()> {
        check_dims(self.param_count, theta.len())
    }

    /// Noiseless output state.
    pub fn prepare(&self, theta: &[f64]) -> Result<StateVector> {
        self.check_params(theta)?;
        let mut psi = self.initial_state();
        if let (AnsatzKind::Hva { p }, Some((table, nb))) = (self.kind, &self.bond_sum) {
            let amps = psi.amps_mut();
            for l in 0..p {
                let phases: Vec<Complex64> =
                    (-nb..=*nb).map(|v| Complex64::from_polar(1.0, -theta[2 * l] * v as f64)).collect();
                amps.iter_mut().zip(table).for_each(|(a, &v)| *a *= phases[(v + nb) as usize]);
                let (s, c) = theta[2 * l + 1].sin_cos();
                let m = [c.into(), Complex64::new(0.0, -s), Complex64::new(0.0, -s), c.into()];
                for q in 0..self.n {
                    apply_1q(amps, q, &m);
                }
            }
            return Ok(psi);
        }
        let mut state = QuantumState::Pure(psi);
        for g in &self.gates {
            state.apply_gate(&g.op(theta))?;
        }
        match state {
            QuantumState::Pure(s) => Ok(s),
            QuantumState::Mixed(_) => unreachable!("unitary gates keep the state pure"),
        }
    }

    /// Output state with a two-qubit depolarizing channel of rate `eps`
    /// after every two-qubit gate.
    pub fn prepare_noisy(&self, theta: &[f64], eps: f64) -> Result<DensityMatrix> {
        self.check_params(theta)?;
        let mut rho = DensityMatrix::from_pure(&self.initial_state());
        for g in &self.gates {
            let mut state = QuantumState::Mixed(rho);
            state.apply_gate(&g.op(theta))?;
            rho = state.into_mixed();
            if let Some(targets) = g.two_qubit() {
                rho = apply_depolarizing(rho, &targets, eps)?;
            }
        }
        Ok(rho)
    }
}

/// Gate noise plus Gaussian measurement error on both `E` and `Δvar`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub eps: f64,
    pub sigma: f64,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.eps) || !(self.sigma >= 0.0) {
            return Err(invalid(format!("noise needs eps in [0, 1] and sigma >= 0, got {self:?}")));
        }
        Ok(())
    }

    fn with_stream(&self, index: u64) -> NoiseSpec {
        NoiseSpec { seed: derive_seed(self.seed, &[index]), ..*self }
    }
}

/// An ansatz bound to a Hamiltonian and optional noise.
pub struct Evaluator<'a> {
    circuit: &'a AnsatzCircuit,
    obs: Observable,
    noise: Option<NoiseSpec>,
}

impl<'a> Evaluator<'a> {
    pub fn new(circuit: &'a AnsatzCircuit, h: &PauliSum, noise: Option<NoiseSpec>) -> Result<Self> {
        check_dims(circuit.n, h.n())?;
        if let Some(ns) = &noise {
            ns.validate()?;
        }
        Ok(Self { circuit, obs: Observable::new(h), noise })
    }

    pub fn circuit(&self) -> &AnsatzCircuit {
        self.circuit
    }

    /// `(E, Δvar)` at `theta`; measurement noise for call `index` is drawn from
    /// its own stream, so results do not depend on call order.
    pub fn evaluate(&self, theta: &[f64], index: u64) -> Result<(f64, f64)> {
        match &self.noise {
            None => self.obs.energy_and_variance(&QuantumState::Pure(self.circuit.prepare(theta)?)),
            Some(ns) => {
                let state = if ns.eps > 0.0 {
                    QuantumState::Mixed(self.circuit.prepare_noisy(theta, ns.eps)?)
                } else {
                    QuantumState::Pure(self.circuit.prepare(theta)?)
                };
                let (e, v) = self.obs.energy_and_variance(&state)?;
                if ns.sigma == 0.0 {
                    return Ok((e, v));
                }
                let mut rng = derived_rng(ns.seed, &[index]);
                let de: f64 = rng.sample(StandardNormal);
                let dv: f64 = rng.sample(StandardNormal);
                Ok((e + ns.sigma * de, (v + ns.sigma * dv).max(0.0)))
            }
        }
    }
}

/// `(E, Δvar)` for one parameter vector (measurement stream 0 when noisy).
pub fn evaluate(circ: &AnsatzCircuit, theta: &[f64], h: &PauliSum, noise: Option<&NoiseSpec>) -> Result<(f64, f64)> {
    Evaluator::new(circ, h, noise.copied())?.evaluate(theta, 0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpsaParams {
    /// Step scale; calibrated from the first gradient estimates when `None`.
    pub a0: Option<f64>,
    pub c0: f64,
    pub alpha: f64,
    pub gamma: f64,
    /// Stability constant; `0.1 · max iterations` when `None`.
    pub stability: Option<f64>,
    /// Initial parameter change targeted by the calibration.
    pub target_step: f64,
    pub calibration_samples: usize,
}

impl Default for SpsaParams {
    fn default() -> Self {
        Self {
            a0: None,
            c0: 0.1,
            alpha: 0.602,
            gamma: 0.101,
            stability: None,
            target_step: 0.2,
            calibration_samples: 5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerKind {
    Bfgs,
    Spsa,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub kind: OptimizerKind,
    pub max_evals: usize,
    /// Central-difference step for quasi-Newton gradients.
    pub grad_step: f64,
    /// Quasi-Newton stops once the gradient norm drops below this.
    pub gtol: f64,
    pub spsa: SpsaParams,
    pub seed: u64,
}

impl OptimizerConfig {
    pub fn bfgs(max_evals: usize) -> Self {
        Self { kind: OptimizerKind::Bfgs, max_evals, grad_step: 1e-5, gtol: 1e-6, spsa: SpsaParams::default(), seed: 0 }
    }

    pub fn spsa(max_evals: usize, seed: u64) -> Self {
        Self { kind: OptimizerKind::Spsa, seed, ..Self::bfgs(max_evals) }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_evals == 0 || !(self.grad_step > 0.0) || !(self.gtol > 0.0) || !(self.spsa.c0 > 0.0) {
            return Err(invalid("optimizer needs max_evals > 0 and positive steps"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub energy: f64,
    pub variance: f64,
    pub eval_index: u64,
    pub restart: usize,
    pub params: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizeOutcome {
    pub trace: Vec<TracePoint>,
    /// Lowest measured energy over all evaluations.
    pub best: TracePoint,
    pub evals: usize,
    /// `false` when the evaluation budget ran out first.
    pub converged: bool,
}

#[derive(Debug)]
struct BudgetExhausted;

/// Wraps an objective: counts calls, records the trace, tracks the best point.
struct Recorder<'f> {
    objective: &'f dyn Fn(&[f64], u64) -> Result<(f64, f64)>,
    max_evals: usize,
    restart: usize,
    evals: usize,
    trace: Vec<TracePoint>,
    best: Option<TracePoint>,
}

impl Recorder<'_> {
    fn call(&mut self, theta: &[f64]) -> Result<std::result::Result<f64, BudgetExhausted>> {
        if self.evals >= self.max_evals {
            return Ok(Err(BudgetExhausted));
        }
        let index = self.evals as u64;
        self.evals += 1;
        let (energy, variance) = (self.objective)(theta, index)?;
        let point = || TracePoint { energy, variance, eval_index: index, restart: self.restart, params: theta.to_vec() };
        if self.trace.last().map_or(true, |last| energy <= last.energy - RECORD_STEP) {
            self.trace.push(point());
        }
        if self.best.as_ref().map_or(true, |b| energy < b.energy) {
            self.best = Some(point());
        }
        Ok(Ok(energy))
    }
}

/// Minimize the first component of `objective` from `theta0`.
///
/// `objective(θ, k)` returns `(E, Δvar)` for the `k`-th evaluation.
pub fn minimize(
    objective: &dyn Fn(&[f64], u64) -> Result<(f64, f64)>,
    theta0: &[f64],
    opt: &OptimizerConfig,
    restart: usize,
) -> Result<OptimizeOutcome> {
    opt.validate()?;
    let rec = RefCell::new(Recorder {
        objective,
        max_evals: opt.max_evals,
        restart,
        evals: 0,
        trace: Vec::new(),
        best: None,
    });
    let converged = match opt.kind {
        OptimizerKind::Bfgs => bfgs(&rec, theta0, opt)?,
        OptimizerKind::Spsa => spsa(&rec, theta0, opt)?,
    };
    let rec = rec.into_inner();
    let best = rec.best.ok_or_else(|| invalid("optimizer made no evaluations"))?;
    Ok(OptimizeOutcome { trace: rec.trace, best, evals: rec.evals, converged })
}

type Eval<'r, 'f> = &'r RefCell<Recorder<'f>>;

macro_rules! call_or_stop {
    ($rec:expr, $theta:expr) => {
        match $rec.borrow_mut().call($theta)? {
            Ok(v) => v,
            Err(BudgetExhausted) => return Ok(false),
        }
    };
}

fn gradient(rec: Eval, theta: &DVector<f64>, h: f64) -> Result<Option<DVector<f64>>> {
    let mut g = DVector::zeros(theta.len());
    let mut x = theta.clone();
    for k in 0..theta.len() {
        x[k] = theta[k] + h;
        let Ok(fp) = rec.borrow_mut().call(x.as_slice())? else { return Ok(None) };
        x[k] = theta[k] - h;
        let Ok(fm) = rec.borrow_mut().call(x.as_slice())? else { return Ok(None) };
        x[k] = theta[k];
        g[k] = (fp - fm) / (2.0 * h);
    }
    Ok(Some(g))
}

/// Quasi-Newton with inverse-Hessian updates and a backtracking line search.
fn bfgs(rec: Eval, theta0: &[f64], opt: &OptimizerConfig) -> Result<bool> {
    let d = theta0.len();
    let mut x = DVector::from_column_slice(theta0);
    let mut fx = call_or_stop!(rec, x.as_slice());
    let Some(mut g) = gradient(rec, &x, opt.grad_step)? else { return Ok(false) };
    let mut hinv = DMatrix::<f64>::identity(d, d);
    let mut stalls = 0;
    loop {
        if g.norm() < opt.gtol {
            return Ok(true);
        }
        let mut dir = -(&hinv * &g);
        if dir.dot(&g) >= 0.0 {
            hinv = DMatrix::identity(d, d);
            dir = -g.clone();
        }
        let slope = dir.dot(&g);
        let mut step = 1.0;
        let (x_new, f_new) = loop {
            let trial = &x + &dir * step;
            let f_trial = call_or_stop!(rec, trial.as_slice());
            if f_trial <= fx + 1e-4 * step * slope {
                break (trial, f_trial);
            }
            step *= 0.5;
            if step < 1e-10 {
                // No descent along a finite-difference direction: at the noise floor.
                return Ok(true);
            }
        };
        let Some(g_new) = gradient(rec, &x_new, opt.grad_step)? else { return Ok(false) };
        let s = &x_new - &x;
        let y = &g_new - &g;
        let sy = s.dot(&y);
        if sy > 1e-12 * s.norm() * y.norm() {
            let rho = 1.0 / sy;
            let hy = &hinv * &y;
            let yhy = y.dot(&hy);
            hinv += (&s * s.transpose()) * (rho * rho * yhy + rho) - (&hy * s.transpose() + &s * hy.transpose()) * rho;
        }
        stalls = if fx - f_new < 1e-14 * fx.abs().max(1.0) { stalls + 1 } else { 0 };
        x = x_new;
        fx = f_new;
        g = g_new;
        if stalls >= 3 {
            return Ok(true);
        }
    }
}

/// Simultaneous-perturbation stochastic approximation; runs until the
/// evaluation budget is spent.
fn spsa(rec: Eval, theta0: &[f64], opt: &OptimizerConfig) -> Result<bool> {
    let sp = &opt.spsa;
    let d = theta0.len();
    let mut rng = rng_from_seed(opt.seed);
    let iterations = (opt.max_evals / 2).max(1);
    let big_a = sp.stability.unwrap_or(0.1 * iterations as f64);
    let mut x = theta0.to_vec();
    let mut delta = vec![0.0; d];
    let mut plus = vec![0.0; d];
    let mut minus = vec![0.0; d];
    let mut estimate = |x: &[f64], c: f64, rng: &mut crate::rng::Rng, delta: &mut Vec<f64>| -> Result<Option<f64>> {
        for v in delta.iter_mut() {
            *v = if rng.gen::<bool>() { 1.0 } else { -1.0 };
        }
        for k in 0..d {
            plus[k] = x[k] + c * delta[k];
            minus[k] = x[k] - c * delta[k];
        }
        let Ok(fp) = rec.borrow_mut().call(&plus)? else { return Ok(None) };
        let Ok(fm) = rec.borrow_mut().call(&minus)? else { return Ok(None) };
        Ok(Some((fp - fm) / (2.0 * c)))
    };
    let a0 = match sp.a0 {
        Some(a) => a,
        None => {
            let mut total = 0.0;
            for _ in 0..sp.calibration_samples.max(1) {
                let Some(diff) = estimate(&x, sp.c0, &mut rng, &mut delta)? else { return Ok(false) };
                total += diff.abs();
            }
            let mean = (total / sp.calibration_samples.max(1) as f64).max(1e-12);
            sp.target_step * (big_a + 1.0).powf(sp.alpha) / mean
        }
    };
    for k in 0.. {
        let ak = a0 / (k as f64 + 1.0 + big_a).powf(sp.alpha);
        let ck = sp.c0 / (k as f64 + 1.0).powf(sp.gamma);
        let Some(diff) = estimate(&x, ck, &mut rng, &mut delta)? else { return Ok(false) };
        for j in 0..d {
            x[j] -= ak * diff * delta[j];
        }
    }
    unreachable!()
}

/// Optimize one ansatz from `theta0`.
pub fn optimize(
    circ: &AnsatzCircuit,
    h: &PauliSum,
    theta0: &[f64],
    opt: &OptimizerConfig,
    noise: Option<&NoiseSpec>,
) -> Result<OptimizeOutcome> {
    circ.check_params(theta0)?;
    let ev = Evaluator::new(circ, h, noise.copied())?;
    minimize(&|t, k| ev.evaluate(t, k), theta0, opt, 0)
}

/// Parameters uniform on `[0, 2π)`.
pub fn random_parameters<R: Rng>(count: usize, rng: &mut R) -> Vec<f64> {
    (0..count).map(|_| rng.gen::<f64>() * 2.0 * PI).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VqeExperiment {
    pub runs: Vec<OptimizeOutcome>,
    /// All traces concatenated in restart order.
    pub trace: Vec<TracePoint>,
    pub best: TracePoint,
}

/// Independent restarts from random parameters. Restart `r` draws its
/// initial point, optimizer stream and measurement stream from seeds derived
/// from `(master_seed, r)`.
pub fn run_vqe_experiment(
    circ: &AnsatzCircuit,
    h: &PauliSum,
    restarts: usize,
    noise: Option<&NoiseSpec>,
    opt: &OptimizerConfig,
    master_seed: u64,
) -> Result<VqeExperiment> {
    if restarts == 0 {
        return Err(invalid("at least one restart is required"));
    }
    let runs: Vec<OptimizeOutcome> = (0..restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = derived_rng(master_seed, &[r as u64, 0]);
            let theta0 = random_parameters(circ.param_count, &mut rng);
            let run_opt = OptimizerConfig { seed: derive_seed(master_seed, &[r as u64, 1]), ..*opt };
            let run_noise = noise.map(|ns| ns.with_stream(r as u64));
            let ev = Evaluator::new(circ, h, run_noise)?;
            minimize(&|t, k| ev.evaluate(t, k), &theta0, &run_opt, r)
        })
        .collect::<Result<_>>()?;
    let trace: Vec<TracePoint> = runs.iter().flat_map(|r| r.trace.iter().cloned()).collect();
    let best = runs
        .iter()
        .map(|r| &r.best)
        .min_by(|a, b| a.energy.total_cmp(&b.energy))
        .cloned()
        .expect("at least one restart");
    Ok(VqeExperiment { runs, trace, best })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::{tfim, xyz_chain};
    use crate::spectral::{diagonalize, DiagMode};
    use approx::assert_abs_diff_eq;

    #[test]
    fn parameter_counts() {
        let hva = build_hva(4, 2).unwrap();
        assert_eq!(hva.param_count(), 4);
        let hea = build_hardware_efficient_4q();
        assert_eq!(hea.param_count(), 8);
        assert_eq!(hea.two_qubit_gate_count(), 3);
        assert!(build_hva(1, 1).is_err());
        assert!(build_hva(4, 0).is_err());
    }

    #[test]
    fn zero_angles() {
        let h = tfim(4, 1.0, 1.0, true).unwrap();
        let (e, _) = evaluate(&build_hva(4, 2).unwrap(), &[0.0; 4], &h, None).unwrap();
        assert_abs_diff_eq!(e, -4.0, epsilon = 1e-12);
        let xyz = xyz_chain(4, 2.0, 1.0, 0.5).unwrap();
        let (e, v) = evaluate(&build_hardware_efficient_4q(), &[0.0; 8], &xyz, None).unwrap();
        assert_abs_diff_eq!(e, -1.5, epsilon = 1e-12);
        assert!(v > 0.0);
    }

    #[test]
    fn fast_path_matches_gate_sequence() {
        let circ = build_hva(5, 2).unwrap();
        let theta = [0.3, -1.1, 2.2, 0.7];
        let fast = circ.prepare(&theta).unwrap();
        let mut state = QuantumState::Pure(StateVector::plus_state(5));
        for g in circ.gates() {
            state.apply_gate(&g.op(&theta)).unwrap();
        }
        let QuantumState::Pure(slow) = state else { panic!() };
        assert_abs_diff_eq!(fast.inner(&slow).unwrap().re, 1.0, epsilon = 1e-12);
        let rho = circ.prepare_noisy(&theta, 0.0).unwrap();
        let pure = DensityMatrix::from_pure(&fast);
        let diff = rho.data().iter().zip(pure.data()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(diff < 1e-12);
    }

    #[test]
    fn quadratic_self_test() {
        let target = [0.5, -1.5, 2.0];
        let f = |t: &[f64], _k: u64| -> Result<(f64, f64)> {
            let v: f64 = t.iter().zip(&target).enumerate().map(|(i, (a, b))| (i as f64 + 1.0) * (a - b).powi(2)).sum();
            Ok((v - 3.0, v))
        };
        let out = minimize(&f, &[0.0; 3], &OptimizerConfig::bfgs(10_000), 0).unwrap();
        assert!(out.converged);
        assert_abs_diff_eq!(out.best.energy, -3.0, epsilon = 1e-8);
        for (a, b) in out.best.params.iter().zip(target) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-4);
        }
    }

    #[test]
    fn trace_is_strictly_decreasing() {
        let h = tfim(4, 1.0, 1.0, true).unwrap();
        let circ = build_hva(4, 2).unwrap();
        let out = optimize(&circ, &h, &[0.4, 0.3, 1.0, 2.0], &OptimizerConfig::bfgs(2000), None).unwrap();
        for w in out.trace.windows(2) {
            assert!(w[1].energy <= w[0].energy - RECORD_STEP);
        }
        let e_gs = diagonalize(&h, DiagMode::Dense).unwrap().ground_energy();
        assert!(out.best.energy >= e_gs - 1e-8);
    }

    #[test]
    fn full_depolarization_mixes_bonds() {
        let h = tfim(4, 1.0, 1.0, true).unwrap();
        let noise = NoiseSpec { eps: 1.0, sigma: 0.0, seed: 0 };
        let (e, _) = evaluate(&build_hva(4, 1).unwrap(), &[0.3, 0.0], &h, Some(&noise)).unwrap();
        assert_abs_diff_eq!(e, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn spsa_budget_is_respected() {
        let f = |t: &[f64], _k: u64| -> Result<(f64, f64)> { Ok((t.iter().map(|x| x * x).sum(), 0.0)) };
        let out = minimize(&f, &[1.0, -1.0], &OptimizerConfig::spsa(400, 3), 0).unwrap();
        assert_eq!(out.evals, 400);
        assert!(!out.converged);
        assert!(out.best.energy < 0.05);
    }
}
