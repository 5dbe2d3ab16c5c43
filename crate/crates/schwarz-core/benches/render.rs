//! Render throughput over worker counts. Built with default features the
//! sweep runs on the rayon pool; built with `--no-default-features` the same
//! IDs measure the sequential fallback, so the two code paths can be
//! compared across runs.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use num_complex::Complex64;
use schwarz_core::family::{BuiltSystem, FamilySpec};
use schwarz_core::render::{render_dynamical, RenderConfig};
use std::time::Duration;

fn dynamical_sweep(c: &mut Criterion) {
    let fam = FamilySpec::builtin("deltoid").unwrap();
    let sys = BuiltSystem::Reflection(fam.build(Complex64::new(0.5, 0.0)).unwrap());
    #[cfg(feature = "parallel")]
    let label = "parallel";
    #[cfg(not(feature = "parallel"))]
    let label = "sequential";
    let mut group = c.benchmark_group(format!("dynamical-192/{label}"));
    group
        .sample_size(10)
        .warm_up_time(Duration::from_secs(1))
        .measurement_time(Duration::from_secs(6));
    #[cfg(feature = "parallel")]
    let workers: &[usize] = &[1, 2, 4];
    #[cfg(not(feature = "parallel"))]
    let workers: &[usize] = &[1];
    for &w in workers {
        let cfg = RenderConfig {
            center: [0.0, 0.0],
            width: 4.0,
            width_px: 192,
            height_px: 192,
            max_iter: 50,
            workers: w,
        };
        group.bench_with_input(BenchmarkId::new("workers", w), &cfg, |b, cfg| {
            b.iter(|| render_dynamical(&sys, cfg).unwrap());
        });
    }
    group.finish();
}

criterion_group!(benches, dynamical_sweep);
criterion_main!(benches);
