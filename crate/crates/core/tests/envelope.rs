use holeq_core::envelope::{decompose, Part, SolveOptions};
use holeq_core::equilibrium::{envelope_map, Problem, F_TOL};
use holeq_core::{DomainSpec, SurfaceModel};

fn check(model: SurfaceModel, d: DomainSpec) {
    let p = Problem::new(model, 32, d, 16).unwrap();
    let mu = p.default_init().unwrap();
    let env = envelope_map(&p, &mu, &SolveOptions::default()).unwrap();
    assert!(env.converged, "residual {}", env.residual);
    assert!(env.feasibility < 1e-12);
    let nu = &env.measure;
    assert!((nu.total() - 1.0).abs() < 1e-12);
    assert!(nu.weights.iter().all(|w| *w >= 0.0));
    let parts = decompose(&p.grid, &p.masks, &env.field.values, nu, None, F_TOL).unwrap();
    for i in 0..p.grid.len() {
        if p.masks.interior[i] {
            assert!(nu.weights[i] < 1e-9, "mass inside the hole at {i}");
        }
        if parts.parts[i] == Part::S {
            assert!(nu.weights[i] <= p.grid.cell_mass[i] * (1.0 + 1e-6));
        }
    }
}

#[test]
fn sphere_disk() {
    check(SurfaceModel::Sphere, DomainSpec::Disk { r: 0.5 });
}

#[test]
fn torus_strip() {
    check(SurfaceModel::Torus, DomainSpec::TorusStrip { r: 0.3 });
}

#[test]
fn empty_hole_returns_omega() {
    let p = Problem::new(SurfaceModel::Torus, 16, DomainSpec::Empty, 16).unwrap();
    let env = envelope_map(&p, &p.default_init().unwrap(), &SolveOptions::default()).unwrap();
    for (a, b) in env.measure.weights.iter().zip(&p.grid.cell_mass) {
        assert!((a - b).abs() < 1e-9);
    }
}

#[test]
fn envelope_of_the_equilibrium_is_itself() {
    // The fixed point property on the grid: one more map moves nothing.
    let p = Problem::new(SurfaceModel::Sphere, 32, DomainSpec::Disk { r: 1.0 }, 16).unwrap();
    let opts = SolveOptions::default();
    let once = envelope_map(&p, &p.default_init().unwrap(), &opts).unwrap();
    let twice = envelope_map(&p, &once.measure, &opts).unwrap();
    let l1: f64 = once.measure.weights.iter().zip(&twice.measure.weights).map(|(a, b)| (a - b).abs()).sum();
    assert!(l1 < 0.05, "{l1}");
}
