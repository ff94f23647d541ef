use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use num_complex::Complex64 as C;
use oldroyd_bench::sample_state;
use oldroyd_core::decay::SpectralProfile;
use oldroyd_core::linear::{bound_scan, kernel_triple, linear_energy_curve, propagate_mode};
use oldroyd_core::solver::{Integrator, Solver};

fn kernels(c: &mut Criterion) {
    let s: Vec<f64> = (0..256).map(|i| 10f64.powf(-3.0 + 5.0 * i as f64 / 255.0)).collect();
    c.bench_function("kernel_triple x256", |b| {
        b.iter(|| s.iter().map(|&x| kernel_triple(black_box(x), 1.5, 0.5).a_val.re).sum::<f64>())
    });
    let u0 = [C::new(0.0, 1.0), C::new(0.5, 0.0), C::new(-0.5, 0.0)];
    let tau0 = [C::new(1.0, 0.0); 6];
    c.bench_function("propagate_mode", |b| {
        b.iter(|| propagate_mode(black_box(&u0), black_box(&tau0), [1.0, 0.5, 0.5], 2.0, 0.5))
    });
    c.bench_function("bound_scan 50x50", |b| b.iter(|| bound_scan(0.5, 1.0, 50, 50, 100.0).unwrap()));
}

fn linear_curves(c: &mut Criterion) {
    let u = SpectralProfile::power_gauss(0.0).unwrap();
    let tau = SpectralProfile::power_gauss(0.0).unwrap();
    let times: Vec<f64> = (0..21).map(|i| 10f64.powf(2.0 + i as f64 / 10.0)).collect();
    let mut g = c.benchmark_group("linear_energy_curve");
    g.sample_size(10);
    g.bench_function("21 times", |b| b.iter(|| linear_energy_curve(Some(&u), Some(&tau), 0.5, &times).unwrap()));
    g.finish();
}

fn solver(c: &mut Criterion) {
    let mut g = c.benchmark_group("solver");
    g.sample_size(10);
    for n in [16, 32] {
        let state = sample_state(n, 1);
        let mut solver = Solver::new(state.grid(), state.params);
        g.bench_with_input(BenchmarkId::new("nonlinear_rhs", n), &state, |b, s| {
            b.iter(|| solver.nonlinear_rhs(s).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("etd_heun_step", n), &state, |b, s| {
            b.iter(|| solver.step(s, 0.05, Integrator::EtdHeun).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, kernels, linear_curves, solver);
criterion_main!(benches);
