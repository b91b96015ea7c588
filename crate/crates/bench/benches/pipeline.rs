use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use ppifem_core::assembly::{assemble, build_bases, enrichment_coefficients, solve};
use ppifem_core::{build_mesh, interpolate, BuiltinExample, SchemeParams};

const BETA: [f64; 3] = [10.0, 1.0, 100.0];

fn stages(c: &mut Criterion) {
    let params = SchemeParams::default();
    let mut group = c.benchmark_group("circle_and_line");
    group.sample_size(10);
    for n in [32, 64, 128] {
        let spec = BuiltinExample::CircleAndLine.problem(BETA).unwrap();
        group.bench_with_input(BenchmarkId::new("mesh", n), &n, |b, &n| {
            b.iter(|| build_mesh(spec.domain, black_box(n), &spec.geom).unwrap())
        });
        let mesh = build_mesh(spec.domain, n, &spec.geom).unwrap();
        group.bench_with_input(BenchmarkId::new("bases", n), &n, |b, _| {
            b.iter(|| build_bases(black_box(&mesh), spec.beta).unwrap())
        });
        let bases = build_bases(&mesh, spec.beta).unwrap();
        let enrichment = enrichment_coefficients(&mesh, &spec, params.orders.segment).unwrap();
        group.bench_with_input(BenchmarkId::new("assemble", n), &n, |b, _| {
            b.iter(|| assemble(black_box(&mesh), &bases, &spec, &params, &enrichment).unwrap())
        });
        let system = assemble(&mesh, &bases, &spec, &params, &enrichment).unwrap();
        group.bench_with_input(BenchmarkId::new("solve", n), &n, |b, _| {
            b.iter(|| solve(black_box(&system), &params).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("interpolate", n), &n, |b, _| {
            b.iter(|| interpolate(black_box(&mesh), &bases, &spec, params.orders.segment).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, stages);
criterion_main!(benches);
