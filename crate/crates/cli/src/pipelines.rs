//! Pipeline drivers. Each turns a validated config into artifacts.

use rayon::prelude::*;
use serde_json::{json, Value};

use qextra_core::adiabatic_theory::{amplitude, asymptotic_coefficient, trace_path};
use qextra_core::annealer::{adaptive_extrapolate, evolve, AnnealRun, Schedule};
use qextra_core::extrapolation::{
    err, filter_vqe_trace, fit, noise_robustness_sweep, ExtrapolationMode, NoiseSweepSpec, SweepPoint,
};
use qextra_core::hamiltonian::{transverse_field, PauliSum};
use qextra_core::qite::{qite_run, QiteConfig};
use qextra_core::rng::derive_seed;
use qextra_core::simulator::StateVector;
use qextra_core::spectral::{diagonalize, DiagMode, Spectrum};
use qextra_core::vqe::{run_vqe_experiment, OptimizerConfig};
use qextra_core::FitResult;

use crate::config::{ExperimentConfig, OptimizerChoice, Pipeline};
use crate::error::CliError;
use crate::output::{Artifacts, Table};

/// Seed streams derived from the master seed.
const NOISE_STREAM: u64 = 1;
const OPTIMIZER_STREAM: u64 = 2;
const SWEEP_STREAM: u64 = 3;

/// Artifacts plus the run status; a non-convergence still carries the
/// artifacts gathered so far.
pub struct Outcome {
    pub artifacts: Artifacts,
    pub status: Result<(), CliError>,
}

impl Outcome {
    fn ok(artifacts: Artifacts) -> Self {
        Outcome { artifacts, status: Ok(()) }
    }
}

pub fn execute(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let h = cfg.model.build()?;
    match cfg.pipeline {
        Pipeline::Oracle => oracle(cfg, &h),
        Pipeline::Anneal => anneal(cfg, &h),
        Pipeline::AnnealAdaptive => anneal_adaptive(cfg, &h),
        Pipeline::Vqe => vqe(cfg, &h),
        Pipeline::Qite => qite(cfg, &h),
        Pipeline::Theory => theory(cfg, &h),
        Pipeline::ErrSweep => err_sweep(cfg, &h),
    }
}

fn spectrum(h: &PauliSum, levels: usize) -> Result<Spectrum, CliError> {
    let mode = if h.dim() <= 256 { DiagMode::Dense } else { DiagMode::LowestK(levels.min(h.dim())) };
    Ok(diagonalize(h, mode)?)
}

fn ground_energy(h: &PauliSum) -> Result<f64, CliError> {
    Ok(spectrum(h, 2)?.ground_energy())
}

fn header(cfg: &ExperimentConfig, h: &PauliSum) -> serde_json::Map<String, Value> {
    let mut m = serde_json::Map::new();
    m.insert("pipeline".into(), json!(cfg.pipeline.name()));
    m.insert("config_hash".into(), json!(cfg.hash()));
    m.insert("seed".into(), json!(cfg.seed));
    m.insert("model".into(), json!(cfg.model));
    m.insert("n".into(), json!(h.n()));
    m
}

fn oracle(cfg: &ExperimentConfig, h: &PauliSum) -> Result<Outcome, CliError> {
    let levels = cfg.oracle.as_ref().expect("validated").levels;
    let spec = spectrum(h, levels)?;
    let energies: Vec<f64> = spec.eigenvalues().iter().take(levels).copied().collect();
    let mut table = Table::new(&["level", "energy"]);
    for (k, e) in energies.iter().enumerate() {
        table.push(vec![k.into(), (*e).into()]);
    }
    let mut report = header(cfg, h);
    report.insert("e_gs".into(), json!(spec.ground_energy()));
    report.insert("ground_degeneracy".into(), json!(spec.ground_degeneracy()));
    report.insert("gap".into(), json!(spec.gap()));
    report.insert("levels".into(), json!(energies));
    Ok(Outcome::ok(Artifacts { table, fit: None, report: Value::Object(report) }))
}

/// Annealing runs in input order. Stops at the first failure: runs before it
/// are kept when the failure is a non-convergence.
fn anneal_runs(cfg: &ExperimentConfig, h: &PauliSum, ts: &[f64]) -> Result<(Vec<AnnealRun>, Result<(), CliError>), CliError> {
    let h0 = transverse_field(h.n())?;
    let sched = Schedule::linear();
    let ec = cfg.integrator();
    let results: Vec<_> = ts.par_iter().map(|&t| evolve(&h0, h, &sched, t, &ec)).collect();
    let mut runs = Vec::with_capacity(ts.len());
    for r in results {
        match r.map_err(CliError::from) {
            Ok(run) => runs.push(run),
            Err(e @ CliError::NonConvergence(_)) => return Ok((runs, Err(e))),
            Err(e) => return Err(e),
        }
    }
    Ok((runs, Ok(())))
}

fn mode_points(mode: ExtrapolationMode, rows: &[(f64, f64, f64)]) -> Vec<(f64, f64)> {
    rows.iter()
        .map(|&(t, e, v)| match mode {
            ExtrapolationMode::Time => (t, e),
            ExtrapolationMode::Variance => (v, e),
        })
        .collect()
}

/// Fit and ERR for `(t_a, E, Δvar)` data; `None` with fewer than 3 points.
fn extrapolate(mode: ExtrapolationMode, rows: &[(f64, f64, f64)], e_gs: f64) -> Result<Option<(FitResult, Value)>, CliError> {
    if rows.len() < 3 {
        return Ok(None);
    }
    let f = fit(mode, &mode_points(mode, rows))?;
    let e_std = rows.iter().map(|r| r.1).fold(f64::INFINITY, f64::min);
    Ok(Some((f, json!(err(f.alpha0, e_std, e_gs)?))))
}

fn anneal(cfg: &ExperimentConfig, h: &PauliSum) -> Result<Outcome, CliError> {
    let spec = cfg.anneal.as_ref().expect("validated");
    let e_gs = ground_energy(h)?;
    let (runs, status) = anneal_runs(cfg, h, &spec.t_a)?;
    let mut table = Table::new(&["t_a", "dt", "E", "var", "E_gs", "E_res"]);
    for r in &runs {
        table.push(vec![r.t_a.into(), r.dt.into(), r.energy.into(), r.variance.into(), e_gs.into(), (r.energy - e_gs).into()]);
    }
    let rows: Vec<(f64, f64, f64)> = runs.iter().map(|r| (r.t_a, r.energy, r.variance)).collect();
    let mut report = header(cfg, h);
    report.insert("e_gs".into(), json!(e_gs));
    report.insert("mode".into(), json!(spec.mode));
    let mut fit_out = None;
    for mode in [ExtrapolationMode::Time, ExtrapolationMode::Variance] {
        if let Some((f, e)) = extrapolate(mode, &rows, e_gs)? {
            let key = if mode == ExtrapolationMode::Time { "time" } else { "variance" };
            report.insert(format!("fit_{key}"), json!(f));
            report.insert(format!("err_{key}"), e.clone());
            if mode == spec.mode {
                fit_out = Some(f);
                report.insert("err".into(), e);
            }
        }
    }
    report.insert("completed_runs".into(), json!(runs.len()));
    Ok(Outcome { artifacts: Artifacts { table, fit: fit_out, report: Value::Object(report) }, status })
}

fn anneal_adaptive(cfg: &ExperimentConfig, h: &PauliSum) -> Result<Outcome, CliError> {
    let ac = cfg.adaptive.as_ref().expect("validated").adaptive_config();
    let e_gs = ground_energy(h)?;
    let out = adaptive_extrapolate(&transverse_field(h.n())?, h, &Schedule::linear(), &ac, &cfg.integrator())?;
    let mut table = Table::new(&["pass", "T", "t_a", "E", "var", "E_gs", "E_res"]);
    let mut e_std = f64::INFINITY;
    for (k, pass) in out.history.iter().enumerate() {
        for ((&t, &e), &v) in pass.t_as.iter().zip(&pass.energies).zip(&pass.variances) {
            table.push(vec![k.into(), pass.t.into(), t.into(), e.into(), v.into(), e_gs.into(), (e - e_gs).into()]);
            e_std = e_std.min(e);
        }
    }
    let last = out.history.last().map(|p| p.fit);
    let mut report = header(cfg, h);
    report.insert("e_gs".into(), json!(e_gs));
    report.insert("mode".into(), json!(ac.mode));
    report.insert("converged".into(), json!(out.converged));
    report.insert("passes".into(), json!(out.history.len()));
    report.insert("e_extrp".into(), json!(out.e_extrp));
    report.insert("err".into(), json!(err(out.e_extrp, e_std, e_gs).ok()));
    let status = if out.converged {
        Ok(())
    } else {
        Err(CliError::NonConvergence(format!(
            "successive intercepts still differ by at least {} at t_max = {}",
            ac.eps_tol, ac.t_max
        )))
    };
    Ok(Outcome { artifacts: Artifacts { table, fit: last, report: Value::Object(report) }, status })
}

fn vqe(cfg: &ExperimentConfig, h: &PauliSum) -> Result<Outcome, CliError> {
    let spec = cfg.vqe.as_ref().expect("validated");
    let circ = spec.circuit(h.n())?;
    let noise = cfg.noise.map(|n| n.spec(derive_seed(cfg.seed, &[NOISE_STREAM])));
    let opt = match spec.optimizer {
        OptimizerChoice::Bfgs => OptimizerConfig::bfgs(spec.max_evals),
        OptimizerChoice::Spsa => OptimizerConfig::spsa(spec.max_evals, derive_seed(cfg.seed, &[OPTIMIZER_STREAM])),
    };
    let e_gs = ground_energy(h)?;
    let ex = run_vqe_experiment(&circ, h, spec.restarts, noise.as_ref(), &opt, cfg.seed)?;
    let kept = filter_vqe_trace(&ex.trace, noise.is_some())?;
    let keep_key = |p: &qextra_core::vqe::TracePoint| (p.restart, p.eval_index);
    let kept_keys: std::collections::BTreeSet<_> = kept.iter().map(keep_key).collect();
    let mut table = Table::new(&["restart", "eval_index", "E", "var", "kept"]);
    for p in &ex.trace {
        table.push(vec![p.restart.into(), p.eval_index.into(), p.energy.into(), p.variance.into(), kept_keys.contains(&keep_key(p)).into()]);
    }
    let f = fit(ExtrapolationMode::Variance, &kept.iter().map(|p| (p.variance, p.energy)).collect::<Vec<_>>())?;
    let mut report = header(cfg, h);
    report.insert("e_gs".into(), json!(e_gs));
    report.insert("best_energy".into(), json!(ex.best.energy));
    report.insert("best_variance".into(), json!(ex.best.variance));
    report.insert("best_params".into(), json!(ex.best.params));
    report.insert("trace_points".into(), json!(ex.trace.len()));
    report.insert("kept_points".into(), json!(kept.len()));
    report.insert("converged_restarts".into(), json!(ex.runs.iter().filter(|r| r.converged).count()));
    report.insert("err".into(), json!(err(f.alpha0, ex.best.energy, e_gs)?));
    Ok(Outcome::ok(Artifacts { table, fit: Some(f), report: Value::Object(report) }))
}

fn qite(cfg: &ExperimentConfig, h: &PauliSum) -> Result<Outcome, CliError> {
    let spec = cfg.qite.as_ref().expect("validated");
    let mut qc = QiteConfig::new(spec.dtau, spec.steps);
    qc.reg_lambda = spec.reg_lambda;
    qc.noise = cfg.noise.map(|n| n.spec(derive_seed(cfg.seed, &[NOISE_STREAM])));
    let e_gs = ground_energy(h)?;
    let out = qite_run(h, &qc, &StateVector::plus_state(h.n()))?;
    let mut table = Table::new(&["step", "beta", "E", "var"]);
    for r in &out.records {
        table.push(vec![r.step.into(), (r.step as f64 * spec.dtau).into(), r.energy.into(), r.variance.into()]);
    }
    let f = fit(ExtrapolationMode::Variance, &out.records.iter().map(|r| (r.variance, r.energy)).collect::<Vec<_>>())?;
    let e_std = out.records.iter().map(|r| r.energy).fold(f64::INFINITY, f64::min);
    let mut report = header(cfg, h);
    report.insert("e_gs".into(), json!(e_gs));
    report.insert("beta".into(), json!(qc.beta()));
    report.insert("err".into(), json!(err(f.alpha0, e_std, e_gs)?));
    Ok(Outcome::ok(Artifacts { table, fit: Some(f), report: Value::Object(report) }))
}

fn theory(cfg: &ExperimentConfig, h: &PauliSum) -> Result<Outcome, CliError> {
    let spec = cfg.theory.as_ref().expect("validated");
    let levels = spec.levels.unwrap_or(h.dim());
    let h0 = transverse_field(h.n())?;
    let sched = Schedule::linear();
    let path = trace_path(&h0, h, &sched, spec.grid_points, levels)?;
    let asym = asymptotic_coefficient(&path)?;
    let e_gs = ground_energy(h)?;
    let ec = cfg.integrator();
    struct Point {
        probs: Vec<f64>,
        overlaps: Option<(Vec<f64>, f64)>,
    }
    let points: Vec<Point> = spec
        .t_a
        .par_iter()
        .map(|&t| -> Result<Point, CliError> {
            let probs = (1..levels).map(|j| amplitude(&path, j, t).map(|a| a.probability)).collect::<Result<_, _>>()?;
            let overlaps = if spec.compare_evolution {
                let run = evolve(&h0, h, &sched, t, &ec)?;
                let ov = (1..levels)
                    .map(|j| path.final_vectors()[j].inner(&run.final_state).map(|z| z.norm_sqr()))
                    .collect::<Result<_, _>>()?;
                Some((ov, run.energy - e_gs))
            } else {
                None
            };
            Ok(Point { probs, overlaps })
        })
        .collect::<Result<_, _>>()?;
    let mut table = Table::new(&["t_a", "level", "p_quadrature", "p_evolved", "final_gap"]);
    let mut per_t = Vec::new();
    for (&t, pt) in spec.t_a.iter().zip(&points) {
        for j in 1..levels {
            let evolved = pt.overlaps.as_ref().map_or(f64::NAN, |(ov, _)| ov[j - 1]);
            table.push(vec![t.into(), j.into(), pt.probs[j - 1].into(), evolved.into(), asym.levels[j - 1].final_gap.into()]);
        }
        per_t.push(json!({
            "t_a": t,
            "a_coefficient": asym.coefficient(t),
            "predicted_e_res": asym.coefficient(t) / (t * t),
            "evolved_e_res": pt.overlaps.as_ref().map(|(_, e)| *e),
        }));
    }
    let (gap_min, s_min) = path.min_gap();
    let mut report = header(cfg, h);
    report.insert("e_gs".into(), json!(e_gs));
    report.insert("levels".into(), json!(levels));
    report.insert("grid_points".into(), json!(spec.grid_points));
    report.insert("min_gap".into(), json!({ "s": s_min, "gap": gap_min }));
    report.insert("a_mean".into(), json!(asym.a_mean));
    report.insert("boundary_terms".into(), json!(asym.levels));
    report.insert("points".into(), Value::Array(per_t));
    Ok(Outcome::ok(Artifacts { table, fit: None, report: Value::Object(report) }))
}

fn err_sweep(cfg: &ExperimentConfig, h: &PauliSum) -> Result<Outcome, CliError> {
    let spec = cfg.err_sweep.as_ref().expect("validated");
    let e_gs = ground_energy(h)?;
    let (runs, status) = anneal_runs(cfg, h, &spec.t_a)?;
    status?;
    let base: Vec<SweepPoint> = runs.iter().map(|r| SweepPoint { t_a: r.t_a, energy: r.energy, variance: r.variance }).collect();
    let count = base.len() as f64;
    let e_res = base.iter().map(|p| p.energy - e_gs).sum::<f64>() / count;
    let var = base.iter().map(|p| p.variance).sum::<f64>() / count;
    let t_mean = base.iter().map(|p| p.t_a).sum::<f64>() / count;
    let m = &spec.multipliers;
    let sweep = NoiseSweepSpec {
        sigma_e: m.iter().map(|k| k * e_res).collect(),
        sigma_var: m.iter().map(|k| k * var).collect(),
        sigma_t: m.iter().map(|k| k * t_mean).collect(),
        samples: spec.samples,
        seed: derive_seed(cfg.seed, &[SWEEP_STREAM]),
    };
    let grid = noise_robustness_sweep(&base, e_gs, &sweep, spec.mode)?;
    let mut table = Table::new(&["mode", "k_e", "k_other", "sigma_e", "sigma_other", "mean_err"]);
    let mode_name = match spec.mode {
        ExtrapolationMode::Time => "time",
        ExtrapolationMode::Variance => "variance",
    };
    for (i, row) in grid.mean_err.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            table.push(vec![
                mode_name.into(),
                m[i].into(),
                m[j].into(),
                grid.sigma_e[i].into(),
                grid.sigma_other[j].into(),
                (*v).into(),
            ]);
        }
    }
    let rows: Vec<(f64, f64, f64)> = runs.iter().map(|r| (r.t_a, r.energy, r.variance)).collect();
    let (f, e) = extrapolate(spec.mode, &rows, e_gs)?.expect("at least 3 validated points");
    let mut report = header(cfg, h);
    report.insert("e_gs".into(), json!(e_gs));
    report.insert("mode".into(), json!(spec.mode));
    report.insert("err".into(), e);
    report.insert("scales".into(), json!({ "e_res": e_res, "variance": var, "t_a": t_mean }));
    report.insert("base".into(), json!(base));
    Ok(Outcome::ok(Artifacts { table, fit: Some(f), report: Value::Object(report) }))
}
