use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use detour::haar::haar_unitary;
use detour::yield_analysis::{max_modes_overhead, monte_carlo_yield, p_at_most, tolerance_curve};
use detour::{
    decompose, embed_unitary, plan_defects, reconstruct, verify_settings, CountModel, DefectSpec, Mesh, MeshLayout,
    Segment,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn bench_decompose(c: &mut Criterion) {
    let mut group = c.benchmark_group("decompose");
    for n in [8, 16, 32, 64] {
        let u = haar_unitary(n, &mut ChaCha8Rng::seed_from_u64(n as u64));
        let layout = MeshLayout::rectangular(n);
        group.bench_with_input(BenchmarkId::from_parameter(n), &u, |b, u| {
            b.iter(|| decompose(black_box(u), layout).unwrap())
        });
    }
    group.finish();

    let mut group = c.benchmark_group("reconstruct");
    for n in [8, 16, 32] {
        let u = haar_unitary(n, &mut ChaCha8Rng::seed_from_u64(n as u64));
        let mesh = Mesh::rectangular(n).unwrap();
        let settings = decompose(&u, mesh.layout()).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(n), &settings, |b, s| {
            b.iter(|| reconstruct(&mesh, black_box(s), &[]).unwrap())
        });
    }
    group.finish();
}

fn bench_circumvent(c: &mut Criterion) {
    let mut group = c.benchmark_group("circumvent");
    for n in [8, 16, 32] {
        let mesh = Mesh::rectangular(n).unwrap();
        let defect = [DefectSpec::SegmentLoss {
            segment: Segment::new(n / 2, n / 2),
            eta: 0.0,
        }];
        group.bench_with_input(BenchmarkId::new("plan", n), &defect, |b, d| {
            b.iter(|| plan_defects(&mesh, black_box(d)).unwrap())
        });
        let plan = plan_defects(&mesh, &defect).unwrap();
        let u = haar_unitary(n - 1, &mut ChaCha8Rng::seed_from_u64(1));
        group.bench_with_input(BenchmarkId::new("embed", n), &u, |b, u| {
            b.iter(|| embed_unitary(&mesh, &plan, black_box(u)).unwrap())
        });
        if n <= 16 {
            let settings = embed_unitary(&mesh, &plan, &u).unwrap();
            group.bench_with_input(BenchmarkId::new("verify", n), &settings, |b, s| {
                b.iter(|| verify_settings(&mesh, &plan, &defect, black_box(s), Some(&u)).unwrap())
            });
        }
    }
    group.finish();
}

fn bench_yield(c: &mut Criterion) {
    let mut group = c.benchmark_group("yield");
    group.bench_function("p_at_most_1e6", |b| {
        b.iter(|| p_at_most(black_box(1_000_000), 500, 1e-4).unwrap())
    });
    group.bench_function("max_modes_overhead", |b| {
        b.iter(|| max_modes_overhead(black_box(1e-4), 0.5, CountModel::Approximate).unwrap())
    });
    let grid: Vec<f64> = (0..41).map(|i| 10f64.powf(-5.0 + 4.0 * i as f64 / 40.0)).collect();
    group.bench_function("tolerance_curve_41", |b| {
        b.iter(|| tolerance_curve(0.3, black_box(&grid), CountModel::Approximate).unwrap())
    });
    group.bench_function("monte_carlo_10k", |b| {
        b.iter(|| monte_carlo_yield(black_box(676), 0, 1e-3, 10_000, 3).unwrap())
    });
    group.finish();
}

criterion_group!(benches, bench_decompose, bench_circumvent, bench_yield);
criterion_main!(benches);
