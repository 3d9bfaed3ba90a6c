use holeq_core::equilibrium::{
    cross_validate, fixed_point_envelope, fixed_point_residual, minimize_frank_wolfe, FixedPointOptions, Problem,
    Status,
};
use holeq_core::potential::{characterization_check, DiscreteMeasure};
use holeq_core::{DomainSpec, SurfaceModel};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn problem(model: SurfaceModel, d: DomainSpec) -> Problem {
    Problem::new(model, 32, d, 16).unwrap()
}

#[test]
fn unit_disk_mass_sits_on_the_circle() {
    let p = problem(SurfaceModel::Sphere, DomainSpec::Disk { r: 1.0 });
    let r = fixed_point_envelope(&p, None, &FixedPointOptions::for_grid(&p.grid)).unwrap();
    assert_eq!(r.status, Status::Converged);
    assert!(r.decomposition.mass_bd >= 0.97);
    assert!((r.energy.value - 0.5).abs() < 0.1, "{}", r.energy.value);
    assert!(fixed_point_residual(&p, &r.measure).unwrap() <= 2.0 * p.grid.h);
}

#[test]
fn solvers_agree() {
    let p = problem(SurfaceModel::Torus, DomainSpec::TorusStrip { r: 0.5 });
    let fp = fixed_point_envelope(&p, None, &FixedPointOptions::for_grid(&p.grid)).unwrap();
    let fw = minimize_frank_wolfe(&p, 5000, None).unwrap();
    let c = cross_validate(&p.grid, &fp, &fw).unwrap();
    assert!(c.w1 <= 3.0 * p.grid.h, "{c:?}");
    assert!((fp.energy.value - fw.energy.value).abs() < 0.02);
}

#[test]
fn frank_wolfe_needs_iterations() {
    let p = problem(SurfaceModel::Sphere, DomainSpec::Empty);
    assert!(minimize_frank_wolfe(&p, 10, None).is_err());
}

#[test]
fn empty_hole_gives_omega() {
    let p = problem(SurfaceModel::Sphere, DomainSpec::Empty);
    let r = fixed_point_envelope(&p, None, &FixedPointOptions::for_grid(&p.grid)).unwrap();
    let l1: f64 = r.measure.weights.iter().zip(&p.grid.cell_mass).map(|(a, b)| (a - b).abs()).sum();
    assert!(l1 < 1e-6);
}

#[test]
fn tight_tolerance_stalls() {
    let p = problem(SurfaceModel::Sphere, DomainSpec::Disk { r: 0.5 });
    let mut o = FixedPointOptions::for_grid(&p.grid);
    o.gap_tol = 1e-300;
    o.max_outer = 2;
    let r = fixed_point_envelope(&p, None, &o).unwrap();
    assert_eq!(r.status, Status::Stalled);
    assert_eq!(r.iterations, 2);
}

fn random_outside(p: &Problem, rng: &mut ChaCha8Rng) -> DiscreteMeasure {
    let closure = p.masks.closure();
    let w: Vec<f64> =
        (0..p.grid.len()).map(|i| if closure[i] { 0.0 } else { rng.random::<f64>() * p.grid.cell_mass[i] }).collect();
    DiscreteMeasure::normalized(w).unwrap()
}

#[test]
fn characterization_inequality() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for (m, d) in
        [(SurfaceModel::Sphere, DomainSpec::Disk { r: 0.5 }), (SurfaceModel::Torus, DomainSpec::TorusStrip { r: 0.3 })]
    {
        let p = problem(m, d);
        let r = fixed_point_envelope(&p, None, &FixedPointOptions::for_grid(&p.grid)).unwrap();
        for _ in 0..20 {
            let mu = random_outside(&p, &mut rng);
            assert!(characterization_check(&mu, &r.measure, &p.matrix) <= 1e-4);
        }
    }
}

#[test]
fn random_starts_agree() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let p = problem(SurfaceModel::Sphere, DomainSpec::Disk { r: 0.5 });
    let o = FixedPointOptions::for_grid(&p.grid);
    let base = fixed_point_envelope(&p, None, &o).unwrap();
    for _ in 0..3 {
        let init = random_outside(&p, &mut rng);
        let r = fixed_point_envelope(&p, Some(&init), &o).unwrap();
        let c = cross_validate(&p.grid, &base, &r).unwrap();
        assert!(c.w1 <= 3.0 * p.grid.h, "{c:?}");
    }
}

#[test]
fn energy_lower_than_omega_restricted() {
    // The minimizer beats the normalized restriction of ω it starts from.
    let p = problem(SurfaceModel::Sphere, DomainSpec::Disk { r: 1.0 });
    let start = holeq_core::potential::energy(&p.default_init().unwrap(), &p.matrix, &p.grid).value;
    let r = minimize_frank_wolfe(&p, 2000, None).unwrap();
    assert!(r.energy.value <= start + 1e-12);
}
