//! Parallel vs sequential timings for the heaviest kernels.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use fracbv::fields::{rasterize_fn, rasterize_shape, AnalyticFn, GridSpec};
use fracbv::measures::frac_variation;
use fracbv::operators::{frac_gradient, Backend};
use fracbv::{par, ShapeSet};
use std::hint::black_box;

const MODES: [(&str, bool); 2] = [("parallel", false), ("sequential", true)];

fn gradient_direct(c: &mut Criterion) {
    let grid = GridSpec::window(&[-8.0], &[8.0], 1.0 / 256.0).unwrap();
    let f = rasterize_fn(&AnalyticFn::gaussian(&[0.0], 1.0).unwrap(), &grid).unwrap();
    let mut g = c.benchmark_group("gradient_direct_1d_4096");
    g.sample_size(10);
    for (name, seq) in MODES {
        par::set_sequential(seq);
        g.bench_function(BenchmarkId::from_parameter(name), |b| b.iter(|| frac_gradient(black_box(&f), 0.5, &Backend::direct()).unwrap()));
    }
    par::set_sequential(false);
    g.finish();
}

fn disk_variation(c: &mut Criterion) {
    let grid = GridSpec::window(&[-2.0, -2.0], &[2.0, 2.0], 1.0 / 32.0).unwrap();
    let chi = rasterize_shape(&ShapeSet::ball(&[0.0, 0.0], 1.0).unwrap(), &grid).unwrap();
    let mut g = c.benchmark_group("variation_disk_128x128");
    g.sample_size(10);
    for (name, seq) in MODES {
        par::set_sequential(seq);
        g.bench_function(BenchmarkId::from_parameter(name), |b| b.iter(|| frac_variation(black_box(&chi), 0.5, None).unwrap()));
    }
    par::set_sequential(false);
    g.finish();
}

criterion_group!(benches, gradient_direct, disk_variation);
criterion_main!(benches);
