use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use holeq_core::envelope::SolveOptions;
use holeq_core::equilibrium::{envelope_map, fixed_point_envelope, FixedPointOptions, Problem};
use holeq_core::green::{kernel_matrix, GreenKernel};
use holeq_core::montecarlo::{roots, sample_section, trial_rng};
use holeq_core::potential::PointMeasure;
use holeq_core::surface::{build_grid, Point};
use holeq_core::transport::{w1_exact, TransportProblem};
use holeq_core::{DomainSpec, SurfaceModel};

fn green(c: &mut Criterion) {
    let g = build_grid(SurfaceModel::Sphere, 64).unwrap();
    let k = GreenKernel::sphere();
    c.bench_function("kernel_matrix sphere 64", |b| b.iter(|| kernel_matrix(black_box(&g), &k).unwrap()));
    let m = kernel_matrix(&g, &k).unwrap();
    let w = vec![1.0 / g.len() as f64; g.len()];
    c.bench_function("matvec sphere 64", |b| b.iter(|| m.matvec(black_box(&w))));
    let t = GreenKernel::torus(16).unwrap();
    let (p, q) = (Point::torus(0.1, 0.2), Point::torus(0.45, 0.9));
    c.bench_function("torus kernel eval", |b| b.iter(|| t.eval(black_box(&p), black_box(&q))));
}

fn solvers(c: &mut Criterion) {
    let p = Problem::new(SurfaceModel::Sphere, 64, DomainSpec::Disk { r: 0.5 }, 16).unwrap();
    let mu = p.default_init().unwrap();
    c.bench_function("envelope map disk 64", |b| {
        b.iter(|| envelope_map(&p, black_box(&mu), &SolveOptions::default()).unwrap())
    });
    let o = FixedPointOptions::for_grid(&p.grid);
    let mut group = c.benchmark_group("slow");
    group.sample_size(10);
    group.bench_function("fixed point disk 64", |b| b.iter(|| fixed_point_envelope(&p, None, &o).unwrap()));
    group.finish();
}

fn sampling(c: &mut Criterion) {
    let mut t = 0;
    c.bench_function("sample and solve degree 12", |b| {
        b.iter(|| {
            t += 1;
            roots(&sample_section(12, &mut trial_rng(1, 12, t)).unwrap())
        })
    });
}

fn transport(c: &mut Criterion) {
    let pts = |o: f64| (0..60).map(|k| Point::torus((0.137 * k as f64 + o) % 1.0, 0.291 * k as f64 % 1.0)).collect();
    let problem = TransportProblem {
        model: SurfaceModel::Torus,
        source: PointMeasure::uniform(pts(0.0)),
        target: PointMeasure::uniform(pts(0.3)),
    };
    c.bench_function("exact W1 60x60", |b| b.iter(|| w1_exact(black_box(&problem)).unwrap()));
}

criterion_group!(benches, green, solvers, sampling, transport);
criterion_main!(benches);
