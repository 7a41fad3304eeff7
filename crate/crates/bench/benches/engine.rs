use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use multijet_bench::{dense_poly, orthonormal, two_branch_example};
use multijet_core::geometry::{integrability_algorithm, lie_bracket, IntegrabilityConfig};
use multijet_core::lagrangian::{el_system, poincare_cartan, regularity, solve_regular, PivotPolicy};
use multijet_core::numeric::{integrate_m_flow, BaseGrid, FlowConfig};
use multijet_core::symcore::is_zero;
use multijet_core::SimplifyConfig;

fn symbolic(c: &mut Criterion) {
    let y = two_branch_example();
    let cfg = SimplifyConfig::default();
    c.bench_function("lie_bracket", |b| {
        b.iter(|| lie_bracket(black_box(&y.factors()[0]), black_box(&y.factors()[1])).unwrap())
    });
    c.bench_function("integrability_algorithm", |b| {
        b.iter(|| integrability_algorithm(black_box(&y), &IntegrabilityConfig::default()).unwrap())
    });
    let mut group = c.benchmark_group("zero_test");
    for degree in [2u32, 4, 6] {
        let p = dense_poly(y.chart(), degree);
        let e = &p - &p.normalize();
        group.bench_with_input(BenchmarkId::from_parameter(degree), &e, |b, e| {
            b.iter(|| is_zero(black_box(e), &cfg).unwrap())
        });
    }
    group.finish();
}

fn lagrangian(c: &mut Criterion) {
    let cfg = SimplifyConfig::default();
    let mut group = c.benchmark_group("euler_lagrange");
    for n in 1..=3usize {
        let l = orthonormal(2, n, "y1^3");
        group.bench_with_input(BenchmarkId::new("poincare_cartan", n), &l, |b, l| {
            b.iter(|| poincare_cartan(black_box(l), &cfg).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("solve_regular", n), &l, |b, l| {
            b.iter(|| {
                let reg = regularity(l, &cfg).unwrap();
                solve_regular(&el_system(l), &reg, PivotPolicy::Diag, &cfg).unwrap()
            })
        });
    }
    group.finish();
}

fn numeric(c: &mut Criterion) {
    let y = two_branch_example();
    let cons = [y.chart().parse("x1+x2-y1+1").unwrap()];
    let grid = BaseGrid::uniform(&[(0.0, 1.0), (0.0, 1.0)], 11).unwrap();
    let mut group = c.benchmark_group("integrate_m_flow");
    group.sample_size(10);
    for h in [1e-2, 1e-3] {
        let cfg = FlowConfig {
            h,
            ..Default::default()
        };
        group.bench_with_input(BenchmarkId::from_parameter(h), &cfg, |b, cfg| {
            b.iter(|| integrate_m_flow(&y, &cons, &[0.0, 0.0, 1.0, 1.0], &grid, cfg).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, symbolic, lagrangian, numeric);
criterion_main!(benches);
