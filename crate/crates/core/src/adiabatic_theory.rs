//! First-order adiabatic perturbation theory along an annealing path.
//!
//! Starting in the instantaneous ground state, the amplitude left in level
//! `j` at the end of the sweep is, to first order,
//!
//! `a_j(1) = −∫₀¹ e^{i t_a F_j(s)} G_j(s) ds`
//!
//! with `F_j(s) = ∫₀ˢ (ε_j − ε₀)` and `G_j = ⟨φ_j|∂_s φ₀⟩ = ⟨φ_j|∂_s H|φ₀⟩ / (ε₀ − ε_j)`.
//! Two integrations by parts give the boundary expansion
//!
//! `a_j(1) ≈ −[B_j e^{i t_a F_j}]₀¹ / (i t_a) + [C_j e^{i t_a F_j}]₀¹ / (i t_a)²`
//!
//! with `B_j = G_j / F_j′` and `C_j = (1/F_j′)·d/ds(G_j / F_j′)`, hence
//! `E_res ≈ A / t_a²`.

use std::ops::Range;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use serde::Serialize;

use crate::annealer::Schedule;
use crate::error::{check_dims, invalid, Error, Result};
use crate::hamiltonian::PauliSum;
use crate::simulator::StateVector;

pub const DEFAULT_GRID: usize = 2001;
pub const MAX_QUBITS: usize = 10;
pub const MAX_LEVELS: usize = 16;
/// Gap below which two tracked levels count as crossing.
pub const CROSSING_GAP: f64 = 1e-10;
/// Levels closer than this are grouped into one degenerate block.
const CLUSTER_TOLERANCE: f64 = 1e-8;
/// Required agreement of `|a_j|` between the last two quadrature refinements.
pub const AMPLITUDE_TOLERANCE: f64 = 1e-6;

/// Instantaneous spectrum sampled on a uniform grid in `s`, with the
/// couplings `G_j(s)` precomputed.
#[derive(Debug, Clone)]
pub struct PathSpectrum {
    n: usize,
    grid: Vec<f64>,
    levels: Vec<Vec<f64>>,
    coupling: Vec<Vec<f64>>,
    coupling_fd: Vec<Vec<f64>>,
    final_vectors: Vec<StateVector>,
    blocks: Vec<Range<usize>>,
    min_gap: (f64, f64),
}

impl PathSpectrum {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn num_levels(&self) -> usize {
        self.levels.len()
    }

    /// `ε_j` on the grid.
    pub fn level(&self, j: usize) -> &[f64] {
        &self.levels[j]
    }

    /// `ε_j − ε₀` on the grid.
    pub fn gap(&self, j: usize) -> Vec<f64> {
        self.levels[j].iter().zip(&self.levels[0]).map(|(a, b)| a - b).collect()
    }

    /// `G_j` from the matrix-element form.
    pub fn coupling(&self, j: usize) -> &[f64] {
        &self.coupling[j]
    }

    /// `G_j` from centered differences of the gauge-fixed ground state.
    pub fn coupling_fd(&self, j: usize) -> &[f64] {
        &self.coupling_fd[j]
    }

    /// `F_j(s)` by the trapezoid rule with endpoint derivative correction.
    pub fn phase_integral(&self, j: usize) -> Vec<f64> {
        let gap = self.gap(j);
        let ds = self.grid[1] - self.grid[0];
        let dgap = grid_derivative(&gap, ds);
        let mut acc = 0.0;
        let mut out = Vec::with_capacity(gap.len());
        out.push(0.0);
        for k in 0..gap.len() - 1 {
            acc += 0.5 * ds * (gap[k] + gap[k + 1]) + ds * ds / 12.0 * (dgap[k] - dgap[k + 1]);
            out.push(acc);
        }
        out
    }

    /// Eigenvectors at `s = 1`.
    pub fn final_vectors(&self) -> &[StateVector] {
        &self.final_vectors
    }

    /// Level ranges that stay degenerate along the interior of the path.
    pub fn blocks(&self) -> &[Range<usize>] {
        &self.blocks
    }

    /// Smallest gap between adjacent distinct tracked levels and its location `s`.
    pub fn min_gap(&self) -> (f64, f64) {
        self.min_gap
    }
}

fn clusters(values: &[f64]) -> Vec<Range<usize>> {
    let mut out = Vec::new();
    let mut start = 0;
    for i in 1..=values.len() {
        let scale = values[i - 1].abs().max(1.0);
        if i == values.len() || values[i] - values[i - 1] > CLUSTER_TOLERANCE * scale {
            out.push(start..i);
            start = i;
        }
    }
    out
}

fn sorted_eigen(m: DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let eig = SymmetricEigen::new(m);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vecs = DMatrix::from_fn(eig.eigenvectors.nrows(), order.len(), |r, c| eig.eigenvectors[(r, order[c])]);
    (vals, vecs)
}

/// Rotate `target` columns in `range` so that their overlap with `reference`
/// is symmetric positive definite (a sign fix for single columns).
fn align_block(reference: &DMatrix<f64>, target: &mut DMatrix<f64>, range: Range<usize>) -> f64 {
    let d = range.len();
    let r = reference.columns(range.start, d);
    let t = target.columns(range.start, d).into_owned();
    let overlap = r.transpose() * &t;
    if d == 1 {
        let o = overlap[(0, 0)];
        if o < 0.0 {
            target.column_mut(range.start).neg_mut();
        }
        return o.abs();
    }
    let svd = overlap.svd(true, true);
    let (u, vt) = (svd.u.expect("u"), svd.v_t.expect("v_t"));
    let rot = vt.transpose() * u.transpose();
    let aligned = &t * rot;
    target.columns_mut(range.start, d).copy_from(&aligned);
    svd.singular_values.min()
}

/// Fix the basis inside degenerate blocks at a path endpoint by diagonalizing
/// `∂_s H` in each block. Blocks still degenerate at first order are aligned
/// to the neighbouring grid point instead.
fn resolve_endpoint(
    values: &[f64],
    vectors: &mut DMatrix<f64>,
    dh: &DMatrix<f64>,
    neighbour: &DMatrix<f64>,
    at_end: bool,
    limit: usize,
) {
    for block in clusters(values) {
        if block.start >= limit || block.len() == 1 {
            continue;
        }
        let d = block.len();
        let v = vectors.columns(block.start, d).into_owned();
        let projected = v.transpose() * dh * &v;
        let (mut dvals, mut dvecs) = sorted_eigen(0.5 * (&projected + projected.transpose()));
        if at_end {
            // approaching s = 1 from below, energy order is descending slope
            dvals.reverse();
            let cols: Vec<DVector<f64>> = (0..d).rev().map(|c| dvecs.column(c).into_owned()).collect();
            dvecs = DMatrix::from_columns(&cols);
        }
        vectors.columns_mut(block.start, d).copy_from(&(&v * dvecs));
        let mut start = 0;
        for i in 1..=d {
            let split = i == d || (dvals[i] - dvals[i - 1]).abs() > 1e-7 * dvals[i - 1].abs().max(1.0);
            if split {
                if i - start > 1 {
                    align_block(neighbour, vectors, block.start + start..block.start + i);
                }
                start = i;
            }
        }
    }
}

/// Diagonalize `H(s) = f(s)·H_init + g(s)·H_f` on `m` uniform grid points and
/// track the lowest `k` levels with a smooth real gauge.
pub fn trace_path(h_init: &PauliSum, h_f: &PauliSum, sched: &Schedule, m: usize, k: usize) -> Result<PathSpectrum> {
    check_dims(h_init.n(), h_f.n())?;
    let n = h_init.n();
    if n > MAX_QUBITS {
        return Err(invalid(format!("path tracing limited to {MAX_QUBITS} qubits, got {n}")));
    }
    let dim = 1usize << n;
    if k < 2 || k > MAX_LEVELS || k > dim {
        return Err(invalid(format!("need 2 <= K <= min({MAX_LEVELS}, 2^n), got {k}")));
    }
    if m < 5 || m % 2 == 0 {
        return Err(invalid(format!("grid size must be odd and at least 5, got {m}")));
    }
    if !h_init.is_real() || !h_f.is_real() {
        return Err(invalid("path tracing requires real Hamiltonians"));
    }
    let hi = h_init.to_dense_real()?;
    let hf = h_f.to_dense_real()?;
    let grid: Vec<f64> = (0..m).map(|i| i as f64 / (m - 1) as f64).collect();
    let dh_at = |s: f64| &hi * sched.df(s) + &hf * sched.dg(s);

    let mut values: Vec<Vec<f64>> = Vec::with_capacity(m);
    let mut vectors: Vec<DMatrix<f64>> = Vec::with_capacity(m);
    for &s in &grid {
        let (vals, vecs) = sorted_eigen(&hi * sched.f(s) + &hf * sched.g(s));
        values.push(vals);
        vectors.push(vecs);
    }
    let first_neighbour = vectors[1].clone();
    resolve_endpoint(&values[0], &mut vectors[0], &dh_at(0.0), &first_neighbour, false, k);
    let last_neighbour = vectors[m - 2].clone();
    resolve_endpoint(&values[m - 1], &mut vectors[m - 1], &dh_at(1.0), &last_neighbour, true, k);

    // Interior block structure must be stable and must not straddle the cutoff.
    let interior = |i: usize| -> Vec<Range<usize>> {
        clusters(&values[i]).into_iter().filter(|b| b.start < k).collect()
    };
    let reference_blocks = interior(m / 2);
    let mut min_gap = (f64::INFINITY, 0.0);
    for i in 1..m - 1 {
        let blocks = interior(i);
        if blocks != reference_blocks {
            let b = blocks.iter().zip(&reference_blocks).find(|(a, r)| a != r).map_or(blocks[0].clone(), |p| p.0.clone());
            let (lo, hi_idx) = (b.start, (b.end - 1).max(b.start + 1).min(dim - 1));
            return Err(Error::LevelCrossing {
                s: grid[i],
                lower: lo,
                upper: hi_idx,
                gap: values[i][hi_idx] - values[i][lo],
            });
        }
        if let Some(b) = blocks.iter().find(|b| b.end > k && b.start < k && b.len() > 1) {
            return Err(Error::Degenerate(format!(
                "degenerate block {}..{} is cut by the level limit K = {k}",
                b.start, b.end
            )));
        }
        for w in blocks.windows(2) {
            let g = values[i][w[1].start] - values[i][w[0].end - 1];
            if g < min_gap.0 {
                min_gap = (g, grid[i]);
            }
        }
    }
    if reference_blocks[0].len() > 1 {
        return Err(Error::LevelCrossing { s: grid[m / 2], lower: 0, upper: 1, gap: 0.0 });
    }
    if min_gap.0 < CROSSING_GAP {
        return Err(Error::LevelCrossing { s: min_gap.1, lower: 0, upper: 1, gap: min_gap.0 });
    }

    // Gauge: successive overlaps symmetric positive within each block.
    for i in 1..m {
        let (head, tail) = vectors.split_at_mut(i);
        let (prev, cur) = (&head[i - 1], &mut tail[0]);
        let blocks = if i == m - 1 { endpoint_blocks(&values[i], k) } else { reference_blocks.clone() };
        for b in blocks {
            let b = b.start..b.end.min(k).max(b.start + 1);
            let o = align_block(prev, cur, b.clone());
            if o < 0.5 {
                // Unresolved avoided crossing with a neighbouring level.
                let v = &values[i];
                let below = if b.start > 0 { v[b.start] - v[b.start - 1] } else { f64::INFINITY };
                let above = if b.end < v.len() { v[b.end] - v[b.end - 1] } else { f64::INFINITY };
                let (lower, upper, gap) =
                    if below < above { (b.start - 1, b.start, below) } else { (b.end - 1, b.end, above) };
                return Err(Error::LevelCrossing { s: grid[i], lower, upper, gap });
            }
        }
    }

    let mut levels = vec![vec![0.0; m]; k];
    let mut coupling = vec![vec![0.0; m]; k];
    let mut coupling_fd = vec![vec![0.0; m]; k];
    let ds = grid[1] - grid[0];
    for i in 0..m {
        let dh = dh_at(grid[i]);
        let phi0 = vectors[i].column(0);
        let dh_phi0 = &dh * phi0;
        let dphi0: DVector<f64> = if i == 0 {
            (vectors[1].column(0) * 4.0 - vectors[2].column(0) - vectors[0].column(0) * 3.0) / (2.0 * ds)
        } else if i == m - 1 {
            (vectors[m - 1].column(0) * 3.0 - vectors[m - 2].column(0) * 4.0 + vectors[m - 3].column(0)) / (2.0 * ds)
        } else if i == 1 || i == m - 2 {
            (vectors[i + 1].column(0) - vectors[i - 1].column(0)) / (2.0 * ds)
        } else {
            (vectors[i + 1].column(0) * 8.0 - vectors[i - 1].column(0) * 8.0 - vectors[i + 2].column(0)
                + vectors[i - 2].column(0))
                / (12.0 * ds)
        };
        for j in 0..k {
            levels[j][i] = values[i][j];
            if j == 0 {
                continue;
            }
            let phij = vectors[i].column(j);
            coupling[j][i] = phij.dot(&dh_phi0) / (values[i][0] - values[i][j]);
            coupling_fd[j][i] = phij.dot(&dphi0);
        }
    }
    let final_vectors = (0..k)
        .map(|j| {
            let amps = vectors[m - 1].column(j).iter().map(|&x| Complex64::new(x, 0.0)).collect();
            StateVector::new(n, amps).expect("size")
        })
        .collect();
    Ok(PathSpectrum {
        n,
        grid,
        levels,
        coupling,
        coupling_fd,
        final_vectors,
        blocks: reference_blocks.into_iter().filter(|b| b.len() > 1).collect(),
        min_gap,
    })
}

/// Blocks at an endpoint after resolution: singletons unless still degenerate.
fn endpoint_blocks(values: &[f64], k: usize) -> Vec<Range<usize>> {
    (0..k.min(values.len())).map(|j| j..j + 1).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AmplitudeResult {
    pub j: usize,
    pub amplitude: Complex64,
    pub probability: f64,
    /// `| |a_j| − |a_j at half resolution| |`.
    pub refinement_change: f64,
}

/// `∫ (g₀ + (g₁−g₀)u) e^{i(φ₀ + (φ₁−φ₀)u)} du` over `u ∈ [0, 1]`, times `h`:
/// linear amplitude, linear phase (Filon-type panel).
fn filon_panel(h: f64, g0: f64, g1: f64, p0: f64, p1: f64) -> Complex64 {
    let theta = p1 - p0;
    let (i0, i1) = if theta.abs() < 1e-3 {
        let t2 = theta * theta;
        (
            Complex64::new(1.0 - t2 / 6.0, theta / 2.0 - theta * t2 / 24.0),
            Complex64::new(0.5 - t2 / 8.0, theta / 3.0 - theta * t2 / 30.0),
        )
    } else {
        let it = Complex64::new(0.0, theta);
        let e = it.exp();
        ((e - 1.0) / it, e / it - (e - 1.0) / (it * it))
    };
    Complex64::from_polar(h, p0) * (i0 * g0 + i1 * (g1 - g0))
}

/// Cubic Hermite interpolant on `[0, 1]` scaled to a panel of width `h`.
fn hermite(u: f64, h: f64, y0: f64, m0: f64, y1: f64, m1: f64) -> f64 {
    let (u2, u3) = (u * u, u * u * u);
    (2.0 * u3 - 3.0 * u2 + 1.0) * y0
        + (u3 - 2.0 * u2 + u) * h * m0
        + (3.0 * u2 - 2.0 * u3) * y1
        + (u3 - u2) * h * m1
}

/// Largest sub-panel width and phase increment used inside a grid panel.
const SUBPANEL_WIDTH: f64 = 2.5e-5;
const SUBPANEL_PHASE: f64 = 0.05;

/// Composite Filon quadrature on every `stride`-th grid point, each panel
/// subdivided on Hermite interpolants of `G_j` and `F_j`.
fn quadrature(path: &PathSpectrum, j: usize, t_a: f64, stride: usize) -> Complex64 {
    let idx: Vec<usize> = (0..path.grid.len()).step_by(stride).collect();
    let h = path.grid[idx[1]] - path.grid[idx[0]];
    let f_all = path.phase_integral(j);
    let gap_all = path.gap(j);
    let f: Vec<f64> = idx.iter().map(|&i| f_all[i]).collect();
    let fp: Vec<f64> = idx.iter().map(|&i| gap_all[i]).collect();
    let g: Vec<f64> = idx.iter().map(|&i| path.coupling[j][i]).collect();
    let gp = grid_derivative(&g, h);
    let mut total = Complex64::new(0.0, 0.0);
    for a in 0..idx.len() - 1 {
        let b = a + 1;
        let dphase = t_a * (f[b] - f[a]).abs();
        let sub = ((h / SUBPANEL_WIDTH).ceil() as usize).max((dphase / SUBPANEL_PHASE).ceil() as usize).max(1);
        let w = h / sub as f64;
        let mut prev = (g[a], t_a * f[a]);
        for k in 1..=sub {
            let u = k as f64 / sub as f64;
            let next = (hermite(u, h, g[a], gp[a], g[b], gp[b]), t_a * hermite(u, h, f[a], fp[a], f[b], fp[b]));
            total += filon_panel(w, prev.0, next.0, prev.1, next.1);
            prev = next;
        }
    }
    total
}

/// First-order amplitude `a_j(1)` at annealing time `t_a`.
pub fn amplitude(path: &PathSpectrum, j: usize, t_a: f64) -> Result<AmplitudeResult> {
    if j == 0 || j >= path.num_levels() {
        return Err(invalid(format!("level {j} outside 1..{}", path.num_levels())));
    }
    if !(t_a > 0.0) {
        return Err(invalid(format!("t_a must be positive, got {t_a}")));
    }
    if (path.grid.len() - 1) % 2 != 0 {
        return Err(invalid("grid must have an even number of panels"));
    }
    let fine = -quadrature(path, j, t_a, 1);
    let coarse = -quadrature(path, j, t_a, 2);
    let change = (fine.norm() - coarse.norm()).abs();
    if change >= AMPLITUDE_TOLERANCE {
        let max_gap = path.gap(j).into_iter().fold(0.0, f64::max);
        let ds = path.grid[1] - path.grid[0];
        return Err(Error::NoConvergence {
            what: format!(
                "amplitude quadrature for level {j} (phase per panel t_a·max F' · ds = {:.3e}); use a finer grid",
                t_a * max_gap * ds
            ),
            residual: change,
        });
    }
    Ok(AmplitudeResult { j, amplitude: fine, probability: fine.norm_sqr(), refinement_change: change })
}

/// Boundary terms of the asymptotic expansion for one level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LevelBoundary {
    pub j: usize,
    /// `G_j/F_j′` at `s = 0` and `s = 1`.
    pub first: [f64; 2],
    /// `(1/F_j′)·d/ds(G_j/F_j′)` at `s = 0` and `s = 1`.
    pub second: [f64; 2],
    /// `F_j(1)`.
    pub phase_end: f64,
    /// `ε_j(1) − ε₀(1)`.
    pub final_gap: f64,
    /// `√((C₀² + C₁²)/(B₀² + B₁²))`: first order dominates for `t_a` well above this.
    pub criterion_ratio: f64,
}

impl LevelBoundary {
    /// `|B₁ e^{i t_a F_j(1)} − B₀|²`, so that `p_j ≈ this / t_a²`.
    pub fn first_order_weight(&self, t_a: f64) -> f64 {
        (Complex64::from_polar(self.first[1], t_a * self.phase_end) - self.first[0]).norm_sqr()
    }

    /// Weight averaged over the boundary phase: `B₀² + B₁²`.
    pub fn mean_first_order_weight(&self) -> f64 {
        self.first[0] * self.first[0] + self.first[1] * self.first[1]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AsymptoticData {
    /// Phase-averaged coefficient `Σ_j (B₀² + B₁²)(ε_j(1) − ε₀(1))`.
    pub a_mean: f64,
    pub levels: Vec<LevelBoundary>,
}

impl AsymptoticData {
    /// `A(t_a) = Σ_j |B₁ e^{i t_a F_j(1)} − B₀|²(ε_j(1) − ε₀(1))`.
    pub fn coefficient(&self, t_a: f64) -> f64 {
        self.levels.iter().map(|l| l.first_order_weight(t_a) * l.final_gap).sum()
    }
}

fn grid_derivative(y: &[f64], ds: f64) -> Vec<f64> {
    let m = y.len();
    (0..m)
        .map(|i| {
            if i == 0 {
                (-3.0 * y[0] + 4.0 * y[1] - y[2]) / (2.0 * ds)
            } else if i == m - 1 {
                (3.0 * y[m - 1] - 4.0 * y[m - 2] + y[m - 3]) / (2.0 * ds)
            } else {
                (y[i + 1] - y[i - 1]) / (2.0 * ds)
            }
        })
        .collect()
}

pub fn asymptotic_coefficient(path: &PathSpectrum) -> Result<AsymptoticData> {
    let m = path.grid.len();
    let ds = path.grid[1] - path.grid[0];
    let mut levels = Vec::with_capacity(path.num_levels() - 1);
    for j in 1..path.num_levels() {
        let gap = path.gap(j);
        if gap[0] <= CROSSING_GAP || gap[m - 1] <= CROSSING_GAP {
            return Err(Error::Degenerate(format!("level {j} has a vanishing endpoint gap")));
        }
        let b: Vec<f64> = path.coupling[j].iter().zip(&gap).map(|(g, f)| g / f).collect();
        let db = grid_derivative(&b, ds);
        let first = [b[0], b[m - 1]];
        let second = [db[0] / gap[0], db[m - 1] / gap[m - 1]];
        let num = second[0] * second[0] + second[1] * second[1];
        let den = first[0] * first[0] + first[1] * first[1];
        let criterion_ratio = if den > 0.0 { (num / den).sqrt() } else { 0.0 };
        let phase_end = *path.phase_integral(j).last().expect("nonempty grid");
        levels.push(LevelBoundary { j, first, second, phase_end, final_gap: gap[m - 1], criterion_ratio });
    }
    let a_mean = levels.iter().map(|l| l.mean_first_order_weight() * l.final_gap).sum();
    Ok(AsymptoticData { a_mean, levels })
}

/// `A / t_a²`.
pub fn predict_residual(a: f64, t_a: f64) -> Result<f64> {
    if !(t_a > 0.0) {
        return Err(invalid(format!("t_a must be positive, got {t_a}")));
    }
    Ok(a / (t_a * t_a))
}
