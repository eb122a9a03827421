use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use num_complex::Complex64;
use whkae_core::spectrum::{Observable, SpectralModel};
use whkae_core::trace::{heat_trace_with, sample_grid_with, KernelKind, SumStrategy, TraceOptions};
use whkae_core::zeta::{ContinuedZeta, ZetaOptions};

fn level_sums(c: &mut Criterion) {
    let mut g = c.benchmark_group("heat_trace");
    g.sample_size(20);
    let cases = [
        ("sphere_eq(2)", SpectralModel::sphere_eq(2).unwrap(), KernelKind::Exponential, 1e-3),
        ("nc_torus", SpectralModel::nc_torus(), KernelKind::Exponential, 5e-2),
    ];
    for (name, model, kernel, t) in &cases {
        for (label, strategy, parallel) in [
            ("sequential", SumStrategy::Sequential, false),
            ("sharded-seq", SumStrategy::Sharded(16), false),
            ("sharded-par", SumStrategy::Sharded(16), true),
        ] {
            let opts = TraceOptions { eps: 1e-12, strategy, parallel, ..TraceOptions::default() };
            g.bench_with_input(BenchmarkId::new(label, name), &opts, |b, opts| {
                b.iter(|| heat_trace_with(model, &Observable::Identity, black_box(*t), *kernel, opts).unwrap())
            });
        }
    }
    g.finish();
}

fn grids(c: &mut Criterion) {
    let mut g = c.benchmark_group("sample_grid");
    g.sample_size(20);
    let model = SpectralModel::sphere_torus(3).unwrap();
    for parallel in [false, true] {
        let opts = TraceOptions { eps: 1e-13, parallel, ..TraceOptions::default() };
        let label = if parallel { "parallel" } else { "sequential" };
        g.bench_function(label, |b| {
            b.iter(|| sample_grid_with(&model, &Observable::Identity, 0.25, 0.5, 14, KernelKind::Exponential, &opts).unwrap())
        });
    }
    g.finish();
}

fn continuation(c: &mut Criterion) {
    let mut g = c.benchmark_group("zeta_continued");
    g.sample_size(20);
    let model = SpectralModel::sphere_eq(2).unwrap();
    let s = Complex64::new(-0.6, 1.1);
    for parallel in [false, true] {
        let z = ContinuedZeta::new(&model, &Observable::Identity, ZetaOptions { parallel, ..ZetaOptions::default() }).unwrap();
        let label = if parallel { "parallel" } else { "sequential" };
        g.bench_function(label, |b| b.iter(|| z.eval(black_box(s)).unwrap()));
    }
    g.finish();
}

criterion_group!(benches, level_sums, grids, continuation);
criterion_main!(benches);
