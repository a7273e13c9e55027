//! Benchmarks for the hot kernels: the flat-metric sweep, the forward
//! Fokker-Planck march, one full fixed-point solve, and the series drift
//! table.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use mfgabsorb_core::measures::{flat_distance, SubProbMeasure};
use mfgabsorb_core::mfg::{solve_mfg, PicardParams};
use mfgabsorb_core::pde1d::{solve_fp_forward, Coefficients, Grid1D, Hamiltonian};
use mfgabsorb_core::toy_model::{drift_table, sine_coefficients, toy_coupling};

fn atom_cloud(count: usize, salt: u64) -> SubProbMeasure {
    let mut state = 0x9e3779b97f4a7c15u64.wrapping_mul(salt | 1);
    let mut next = move || {
        state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (state >> 11) as f64 / (1u64 << 53) as f64
    };
    let atoms: Vec<(f64, f64)> = (0..count)
        .map(|_| (0.001 + 0.998 * next(), 0.9 / count as f64))
        .collect();
    SubProbMeasure::from_atoms(atoms).unwrap()
}

fn bench_flat_distance(c: &mut Criterion) {
    let mut group = c.benchmark_group("flat_distance");
    for &n in &[16usize, 128, 1024] {
        let m1 = atom_cloud(n, 1);
        let m2 = atom_cloud(n, 2);
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| black_box(flat_distance(&m1, &m2)))
        });
    }
    group.finish();
}

fn bench_fp_march(c: &mut Criterion) {
    let grid = Grid1D::new(401, 401, 0.0, 0.25).unwrap();
    let coeff = Coefficients { sigma: 1.0, hamiltonian: Hamiltonian::None };
    let m0 = SubProbMeasure::uniform_on_grid(401, 1.0).unwrap();
    c.bench_function("fp_forward_401x401", |b| {
        b.iter(|| {
            black_box(
                solve_fp_forward(&grid, &coeff, |t, x| 0.2 * (t + x).sin(), &m0).unwrap(),
            )
        })
    });
}

fn bench_mfg_solve(c: &mut Criterion) {
    let grid = Grid1D::new(101, 101, 0.0, 0.5).unwrap();
    let coeff = Coefficients::quadratic(1.0);
    let m0 = SubProbMeasure::uniform_on_grid(101, 1.0).unwrap();
    let coupling = toy_coupling();
    c.bench_function("solve_mfg_101x101", |b| {
        b.iter(|| {
            black_box(
                solve_mfg(&m0, &coupling, &grid, &coeff, &PicardParams::default()).unwrap(),
            )
        })
    });
}

fn bench_series_drift(c: &mut Criterion) {
    let b_k = sine_coefficients(0.1, 200);
    let grid = Grid1D::new(401, 401, 0.0, 0.5).unwrap();
    c.bench_function("drift_table_401x401_k200", |bch| {
        bch.iter(|| black_box(drift_table(&b_k, &grid)))
    });
}

criterion_group!(
    benches,
    bench_flat_distance,
    bench_fp_march,
    bench_mfg_solve,
    bench_series_drift
);
criterion_main!(benches);
