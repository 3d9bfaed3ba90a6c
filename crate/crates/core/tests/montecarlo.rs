use holeq_core::montecarlo::{
    check_feasible, domain_predicate, roots, run_hole_experiment, sample_section, trial_rng, two_proportion_p, wilson,
    HoleExperiment, HoleSetup,
};
use holeq_core::potential::DiscreteMeasure;
use holeq_core::surface::{build_grid, Ext};
use holeq_core::transport::w1_grid;
use holeq_core::{DomainSpec, Error, SurfaceGrid, SurfaceModel};

fn run(d: &DomainSpec, degrees: Vec<usize>, budget: u64, seed: u64, grid: &SurfaceGrid) -> HoleExperiment {
    let inside = domain_predicate(d).unwrap();
    run_hole_experiment(&HoleSetup {
        label: d.label(),
        inside: &inside,
        forbidden: None,
        degrees,
        budget,
        seed,
        grid,
        keep: 2,
    })
    .unwrap()
}

#[test]
fn same_seed_same_result() {
    let g = build_grid(SurfaceModel::Sphere, 16).unwrap();
    let d = DomainSpec::Disk { r: 0.3 };
    let a = run(&d, vec![4, 6], 6000, 11, &g);
    let b = run(&d, vec![4, 6], 6000, 11, &g);
    for (x, y) in a.per_degree.iter().zip(&b.per_degree) {
        assert_eq!(x.accepted, y.accepted);
        assert_eq!(x.kept, y.kept);
        assert_eq!(x.zero_measure.as_ref().unwrap().weights, y.zero_measure.as_ref().unwrap().weights);
    }
    let c = run(&d, vec![4], 6000, 12, &g);
    assert_ne!(a.per_degree[0].accepted, c.per_degree[0].accepted);
}

#[test]
fn trials_are_independent_of_budget() {
    // Trial j sees the same section whatever else runs.
    let s1 = sample_section(8, &mut trial_rng(5, 8, 1234)).unwrap();
    let s2 = sample_section(8, &mut trial_rng(5, 8, 1234)).unwrap();
    assert_eq!(s1, s2);
}

#[test]
fn coefficient_variance() {
    let n = 6;
    let mut acc = vec![0.0; n + 1];
    let trials = 20_000;
    for t in 0..trials {
        let s = sample_section(n, &mut trial_rng(1, n, t)).unwrap();
        for (k, a) in s.a.iter().enumerate() {
            acc[k] += a.norm_sqr();
        }
    }
    for v in acc {
        assert!((v / trials as f64 - 1.0).abs() < 0.05);
    }
}

#[test]
fn empty_hole_accepts_everything() {
    let g = build_grid(SurfaceModel::Sphere, 16).unwrap();
    let e = run(&DomainSpec::Empty, vec![5], 1000, 1, &g);
    assert_eq!(e.per_degree[0].accepted, 1000);
    assert_eq!(e.per_degree[0].p_hat, 1.0);
}

#[test]
fn unconditional_zeros_equidistribute() {
    let g = build_grid(SurfaceModel::Sphere, 32).unwrap();
    let e = run(&DomainSpec::Empty, vec![20], 3000, 2, &g);
    let z = e.per_degree[0].zero_measure.as_ref().unwrap();
    let w = w1_grid(&g, z, &DiscreteMeasure::omega(&g)).unwrap();
    assert!(w.value + w.bound <= 0.05, "{w:?}");
}

#[test]
fn zeros_are_rotation_invariant() {
    // Upper and lower half planes get the same share, as do |z| < 1 and |z| > 1.
    let (mut up, mut inner, mut total) = (0u64, 0u64, 0u64);
    for t in 0..4000 {
        let s = sample_section(10, &mut trial_rng(9, 10, t)).unwrap();
        for z in roots(&s).unwrap().points {
            if let Ext::Finite(z) = z {
                up += (z.im > 0.0) as u64;
                inner += (z.norm() < 1.0) as u64;
            }
            total += 1;
        }
    }
    assert!(two_proportion_p(up, total, total - up, total) > 1e-3);
    assert!(two_proportion_p(inner, total, total - inner, total) > 1e-3);
}

#[test]
fn hole_probability_falls_with_degree() {
    let g = build_grid(SurfaceModel::Sphere, 16).unwrap();
    let e = run(&DomainSpec::Disk { r: 0.25 }, vec![4, 8], 20_000, 3, &g);
    assert!(e.per_degree[1].p_hat < e.per_degree[0].p_hat);
    assert!(!e.monotonicity_violation);
}

#[test]
fn wilson_interval_contains_estimate() {
    for (k, n) in [(0, 100), (5, 100), (100, 100), (3000, 10_000)] {
        let (lo, hi) = wilson(k, n);
        let p = k as f64 / n as f64;
        assert!(lo <= p && p <= hi && lo >= 0.0 && hi <= 1.0);
    }
}

#[test]
fn infeasible_budgets_are_refused() {
    assert!(matches!(check_feasible(0.5, &[10, 12], 1_000_000), Err(Error::Infeasible(_))));
    assert!(check_feasible(0.0063, &[4, 12], 1_000_000).is_ok());
}

#[test]
fn torus_is_refused() {
    let g = build_grid(SurfaceModel::Torus, 8).unwrap();
    let inside = |_: Ext| false;
    let r = run_hole_experiment(&HoleSetup {
        label: "x".into(),
        inside: &inside,
        forbidden: None,
        degrees: vec![3],
        budget: 10,
        seed: 0,
        grid: &g,
        keep: 0,
    });
    assert!(r.is_err());
}
