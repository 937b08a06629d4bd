use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use qextra_bench::{random_pure_density, random_state, tfim_chain};
use qextra_core::extrapolation::ols;
use qextra_core::simulator::{apply_depolarizing, GateOp, Observable, QuantumState};
use qextra_core::spectral::{diagonalize, DiagMode};

fn pauli_sum_action(c: &mut Criterion) {
    let mut g = c.benchmark_group("energy_and_variance");
    for n in [10, 14] {
        let obs = Observable::new(&tfim_chain(n));
        let state = QuantumState::Pure(random_state(n, 1));
        g.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| obs.energy_and_variance(black_box(&state)).unwrap())
        });
    }
    g.finish();
}

fn density_kernels(c: &mut Criterion) {
    let n = 8;
    let rho = random_pure_density(n, 2);
    c.bench_function("depolarize_pair_n8", |b| {
        b.iter_batched(|| rho.clone(), |r| apply_depolarizing(r, &[2, 3], 0.01).unwrap(), criterion::BatchSize::LargeInput)
    });
    let gate = GateOp::rzz(2, 3, 0.3);
    c.bench_function("rzz_density_n8", |b| {
        b.iter_batched(
            || QuantumState::Mixed(rho.clone()),
            |mut s| {
                s.apply_gate(&gate).unwrap();
                s
            },
            criterion::BatchSize::LargeInput,
        )
    });
}

fn ground_state(c: &mut Criterion) {
    let mut g = c.benchmark_group("lowest_two_levels");
    g.sample_size(10);
    for n in [10, 12] {
        let h = tfim_chain(n);
        g.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| diagonalize(black_box(&h), DiagMode::LowestK(2)).unwrap())
        });
    }
    g.finish();
}

fn regression(c: &mut Criterion) {
    let xs: Vec<f64> = (15..=20).map(|t| 1.0 / (t * t) as f64).collect();
    let ys: Vec<f64> = xs.iter().map(|x| -17.86 + 3.0 * x).collect();
    c.bench_function("ols_6_points", |b| b.iter(|| ols(black_box(&xs), black_box(&ys)).unwrap()));
}

criterion_group!(benches, pauli_sum_action, density_kernels, ground_state, regression);
criterion_main!(benches);
