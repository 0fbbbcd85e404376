use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use pseudoarc::bbm::{attractor_cloud, hausdorff_distance, rasterize};
use pseudoarc::crookedgen::{crookedness_grid_check_with, lambda_nk, sigma};
use pseudoarc::invlim::sample_mu_hat;
use pseudoarc::par::Execution;
use pseudoarc::rational::q;

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn crookedness(c: &mut Criterion) {
    let f = sigma(6).unwrap();
    let mut g = c.benchmark_group("grid_crookedness_sigma6");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| crookedness_grid_check_with(black_box(&f), &q(1, 2), &q(1, 60), exec).unwrap())
        });
    }
    g.finish();
}

fn backward_sampling(c: &mut Criterion) {
    let f = lambda_nk(7, 1).unwrap();
    let mut g = c.benchmark_group("sample_mu_hat_lambda71");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| b.iter(|| sample_mu_hat(black_box(&f), 20, 20_000, 3, 1, exec).unwrap()));
    }
    g.finish();
}

fn attractor(c: &mut Criterion) {
    let f = lambda_nk(7, 1).unwrap();
    let delta = q(1, 8);
    let mut g = c.benchmark_group("attractor");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_with_input(BenchmarkId::new("cloud", name), &exec, |b, &exec| {
            b.iter(|| attractor_cloud(black_box(&f), &delta, 100, 500, 64, 1, exec).unwrap())
        });
    }
    let a = attractor_cloud(&f, &delta, 100, 500, 64, 1, Execution::Parallel).unwrap().points;
    let b_pts = attractor_cloud(&f, &delta, 100, 500, 64, 2, Execution::Parallel).unwrap().points;
    for (name, exec) in MODES {
        g.bench_with_input(BenchmarkId::new("hausdorff", name), &exec, |b, &exec| b.iter(|| hausdorff_distance(black_box(&a), &b_pts, exec).unwrap()));
        g.bench_with_input(BenchmarkId::new("raster", name), &exec, |b, &exec| b.iter(|| rasterize(black_box(&a), 512, 1024, exec).unwrap()));
    }
    g.finish();
}

criterion_group!(benches, crookedness, backward_sampling, attractor);
criterion_main!(benches);
