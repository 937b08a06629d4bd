//! Regressions, VQE trace filtering, the error reduction ratio, and
//! measurement-noise robustness sweeps.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::rng::derived_rng;
use crate::vqe::TracePoint;

/// One point of an extrapolation data set: `x` is `t_a` in time mode and
/// `Δvar` in variance mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyVariancePoint {
    pub x: f64,
    pub energy: f64,
    pub tag: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub alpha0: f64,
    pub alpha1: f64,
    pub rss: f64,
    pub r2: f64,
    pub npoints: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExtrapolationMode {
    /// `E = α₀ + α₁ t_a⁻²`
    Time,
    /// `E = α₀ + α₁ Δvar`
    Variance,
}

/// Ordinary least squares `y = α₀ + α₁ x`.
pub fn ols(xs: &[f64], ys: &[f64]) -> Result<FitResult> {
    let n = xs.len();
    if n != ys.len() {
        return Err(Error::DimensionMismatch { expected: n, found: ys.len() });
    }
    if n < 3 {
        return Err(invalid(format!("regression needs at least 3 points, got {n}")));
    }
    if xs.iter().chain(ys).any(|v| !v.is_finite()) {
        return Err(invalid("non-finite regression input"));
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let spread = xs.iter().fold(0.0f64, |m, x| m.max((x - mx).abs()));
    if spread <= 1e-14 * mx.abs().max(f64::MIN_POSITIVE) || sxx == 0.0 {
        return Err(Error::Degenerate("regression abscissa has a single distinct value".into()));
    }
    let alpha1 = sxy / sxx;
    let alpha0 = my - alpha1 * mx;
    let rss: f64 = xs.iter().zip(ys).map(|(x, y)| (y - alpha0 - alpha1 * x).powi(2)).sum();
    let tss: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    let r2 = if tss > 0.0 { 1.0 - rss / tss } else { 1.0 };
    Ok(FitResult { alpha0, alpha1, rss, r2, npoints: n })
}

/// Fit `E = α₀ + α₁ t_a⁻²` to `(t_a, E)` pairs.
pub fn fit_inverse_square(points: &[(f64, f64)]) -> Result<FitResult> {
    if let Some(&(t, _)) = points.iter().find(|p| !(p.0 > 0.0)) {
        return Err(invalid(format!("annealing time must be positive, got {t}")));
    }
    let xs: Vec<f64> = points.iter().map(|p| p.0.powi(-2)).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1).collect();
    ols(&xs, &ys)
}

/// Fit `E = α₀ + α₁ Δvar` to `(Δvar, E)` pairs.
pub fn fit_linear_variance(points: &[(f64, f64)]) -> Result<FitResult> {
    if let Some(&(v, _)) = points.iter().find(|p| p.0 < 0.0) {
        return Err(invalid(format!("variance must be nonnegative, got {v}")));
    }
    let xs: Vec<f64> = points.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1).collect();
    ols(&xs, &ys)
}

pub fn fit(mode: ExtrapolationMode, points: &[(f64, f64)]) -> Result<FitResult> {
    match mode {
        ExtrapolationMode::Time => fit_inverse_square(points),
        ExtrapolationMode::Variance => fit_linear_variance(points),
    }
}

/// Energy window added per relaxation step when too few points survive.
pub const FILTER_WIDENING: f64 = 0.5;
/// Number of relaxation steps before the filter gives up.
pub const FILTER_MAX_WIDENINGS: usize = 2;

/// Keep the trace points close to the best energy and variance.
///
/// Noiseless: `Δvar ≤ 2·Δvar_min` and `E ≤ E_min + 0.5`.
/// Noisy: `Δvar ≤ Δvar_min + 1` and `E ≤ E_min + 0.5`.
/// Minima are global over `trace`. If fewer than 3 points survive, the energy
/// window grows by 0.5 up to twice before failing.
pub fn filter_vqe_trace(trace: &[TracePoint], noisy: bool) -> Result<Vec<TracePoint>> {
    if trace.is_empty() {
        return Err(invalid("empty trace"));
    }
    let e_min = trace.iter().map(|p| p.energy).fold(f64::INFINITY, f64::min);
    let v_min = trace.iter().map(|p| p.variance).fold(f64::INFINITY, f64::min);
    let v_max = if noisy { v_min + 1.0 } else { 2.0 * v_min };
    let mut kept = Vec::new();
    for widen in 0..=FILTER_MAX_WIDENINGS {
        let e_max = e_min + 0.5 + widen as f64 * FILTER_WIDENING;
        kept = trace.iter().filter(|p| p.variance <= v_max && p.energy <= e_max).cloned().collect();
        if kept.len() >= 3 {
            return Ok(kept);
        }
    }
    Err(Error::Degenerate(format!("trace filter kept {} points; at least 3 are needed", kept.len())))
}

/// Error reduction ratio of an extrapolated estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrReport {
    pub e_gs: f64,
    pub e_std: f64,
    pub e_extrp: f64,
    pub err: f64,
}

/// `ERR = 1 − |E_extrp − E_gs| / |E_std − E_gs|`, clamped at 0.
pub fn err(e_extrp: f64, e_std: f64, e_gs: f64) -> Result<ErrReport> {
    let denom = (e_std - e_gs).abs();
    if denom == 0.0 {
        return Err(Error::Degenerate("E_std equals E_gs; ERR undefined".into()));
    }
    let err = (1.0 - (e_extrp - e_gs).abs() / denom).max(0.0);
    Ok(ErrReport { e_gs, e_std, e_extrp, err })
}

/// Noise-free measurement behind a robustness sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub t_a: f64,
    pub energy: f64,
    pub variance: f64,
}

/// Absolute standard deviations to scan. Time mode scans
/// `sigma_e × sigma_t`, variance mode `sigma_e × sigma_var`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseSweepSpec {
    pub sigma_e: Vec<f64>,
    pub sigma_var: Vec<f64>,
    pub sigma_t: Vec<f64>,
    pub samples: usize,
    pub seed: u64,
}

impl NoiseSweepSpec {
    pub const DEFAULT_SAMPLES: usize = 10;
}

/// Mean ERR per pixel; `mean_err[i][j]` uses `sigma_e[i]` and the `j`-th
/// entry of the second grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseSweepGrid {
    pub mode: ExtrapolationMode,
    pub sigma_e: Vec<f64>,
    pub sigma_other: Vec<f64>,
    pub mean_err: Vec<Vec<f64>>,
}

fn gaussian<R: Rng>(rng: &mut R, sigma: f64) -> f64 {
    if sigma == 0.0 {
        0.0
    } else {
        sigma * rng.sample::<f64, _>(StandardNormal)
    }
}

/// Perturb the base data with seeded Gaussian errors, refit, and average the
/// clamped ERR over `spec.samples` draws per pixel. `E_std` is the lowest
/// noise-free energy of `base`. A sample whose fit is degenerate scores 0.
pub fn noise_robustness_sweep(
    base: &[SweepPoint],
    e_gs: f64,
    spec: &NoiseSweepSpec,
    mode: ExtrapolationMode,
) -> Result<NoiseSweepGrid> {
    if base.len() < 3 {
        return Err(invalid("robustness sweep needs at least 3 base points"));
    }
    if spec.samples == 0 {
        return Err(invalid("samples per pixel must be positive"));
    }
    let other = match mode {
        ExtrapolationMode::Time => &spec.sigma_t,
        ExtrapolationMode::Variance => &spec.sigma_var,
    };
    if spec.sigma_e.iter().chain(other).any(|s| !(*s >= 0.0)) {
        return Err(invalid("noise grids must be nonnegative"));
    }
    let e_std = base.iter().map(|p| p.energy).fold(f64::INFINITY, f64::min);
    let width = other.len();
    let pixels: Vec<f64> = (0..spec.sigma_e.len() * width)
        .into_par_iter()
        .map(|k| {
            let (i, j) = (k / width, k % width);
            let (se, so) = (spec.sigma_e[i], other[j]);
            let mut rng = derived_rng(spec.seed, &[i as u64, j as u64]);
            let total: f64 = (0..spec.samples)
                .map(|_| {
                    let (xs, ys): (Vec<f64>, Vec<f64>) = base
                        .iter()
                        .map(|p| {
                            let e = p.energy + gaussian(&mut rng, se);
                            let x = match mode {
                                ExtrapolationMode::Time => (p.t_a + gaussian(&mut rng, so)).powi(-2),
                                ExtrapolationMode::Variance => p.variance + gaussian(&mut rng, so),
                            };
                            (x, e)
                        })
                        .unzip();
                    ols(&xs, &ys)
                        .ok()
                        .and_then(|f| err(f.alpha0, e_std, e_gs).ok())
                        .map_or(0.0, |r| r.err)
                })
                .sum();
            total / spec.samples as f64
        })
        .collect();
    Ok(NoiseSweepGrid {
        mode,
        sigma_e: spec.sigma_e.clone(),
        sigma_other: other.clone(),
        mean_err: pixels.chunks(width.max(1)).map(|c| c.to_vec()).collect(),
    })
}
