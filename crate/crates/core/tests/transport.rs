use holeq_core::potential::{DiscreteMeasure, PointMeasure};
use holeq_core::surface::{build_grid, distance, Point};
use holeq_core::transport::{w1_entropic, w1_exact, w1_grid, EpsSchedule, TransportProblem};
use holeq_core::SurfaceModel;
use proptest::prelude::*;

fn exact(m: SurfaceModel, a: &PointMeasure, b: &PointMeasure) -> f64 {
    w1_exact(&TransportProblem { model: m, source: a.clone(), target: b.clone() }).unwrap().value
}

#[test]
fn split_atom() {
    let x = Point::torus(0.1, 0.2);
    let y = Point::torus(0.4, 0.6);
    let a = PointMeasure { points: vec![x], weights: vec![1.0] };
    let b = PointMeasure { points: vec![x, y], weights: vec![0.5, 0.5] };
    assert!((exact(SurfaceModel::Torus, &a, &b) - 0.25).abs() < 1e-14);
}

#[test]
fn atoms_move_by_their_distance() {
    let (p, q) = (Point::sphere(0.2, 0.1), Point::sphere(-1.5, 2.0));
    let a = PointMeasure { points: vec![p], weights: vec![1.0] };
    let b = PointMeasure { points: vec![q], weights: vec![1.0] };
    let d = distance(SurfaceModel::Sphere, &p, &q);
    assert!((exact(SurfaceModel::Sphere, &a, &b) - d).abs() < 1e-14);
}

#[test]
fn entropic_brackets_exact() {
    let pts = |o: f64| (0..6).map(|k| Point::torus(0.13 * k as f64 + o, 0.29 * k as f64)).collect::<Vec<_>>();
    let a = PointMeasure::uniform(pts(0.0));
    let b = PointMeasure::uniform(pts(0.31));
    let e = exact(SurfaceModel::Torus, &a, &b);
    let p = TransportProblem { model: SurfaceModel::Torus, source: a, target: b };
    let s = w1_entropic(&p, &EpsSchedule::default_for(SurfaceModel::Torus));
    assert!(s.lower <= e + 1e-9 && e <= s.value + 1e-9, "{} {e} {}", s.lower, s.value);
    assert!(s.bound < 1e-2);
}

#[test]
fn torus_shift_of_uniform_grid_measure() {
    // Shifting ω on the torus grid by one column costs exactly h.
    let g = build_grid(SurfaceModel::Torus, 16).unwrap();
    let mut w = vec![0.0; g.len()];
    let mut v = vec![0.0; g.len()];
    for i in 0..g.len() {
        let (x, _) = g.nodes[i].coords();
        if x < 0.5 {
            w[i] = 1.0;
        }
        let xs = (x - g.h).rem_euclid(1.0);
        if xs < 0.5 - 1e-9 {
            v[i] = 1.0;
        }
    }
    let a = DiscreteMeasure::normalized(w).unwrap();
    let b = DiscreteMeasure::normalized(v).unwrap();
    let r = w1_grid(&g, &a, &b).unwrap();
    assert!((r.value - g.h).abs() < 1e-9 && r.bound < 1e-9, "{r:?}");
}

fn measure(n: usize) -> impl Strategy<Value = PointMeasure> {
    proptest::collection::vec((0.0..1.0f64, 0.0..1.0f64, 0.05..1.0f64), n).prop_map(|v| {
        let total: f64 = v.iter().map(|t| t.2).sum();
        PointMeasure {
            points: v.iter().map(|t| Point::torus(t.0, t.1)).collect(),
            weights: v.iter().map(|t| t.2 / total).collect(),
        }
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn w1_is_a_metric(a in measure(7), b in measure(5), c in measure(6)) {
        let m = SurfaceModel::Torus;
        prop_assert!(exact(m, &a, &a) < 1e-12);
        prop_assert!((exact(m, &a, &b) - exact(m, &b, &a)).abs() < 1e-10);
        prop_assert!(exact(m, &a, &c) <= exact(m, &a, &b) + exact(m, &b, &c) + 1e-10);
    }

    #[test]
    fn dual_certificate_holds(a in measure(8), b in measure(9)) {
        let r = w1_exact(&TransportProblem { model: SurfaceModel::Torus, source: a, target: b }).unwrap();
        prop_assert!(r.dual_residual < 1e-9);
    }

    #[test]
    fn lipschitz_duals_stay_below(a in measure(6), b in measure(6), x in 0.0..1.0f64, y in 0.0..1.0f64) {
        let m = SurfaceModel::Torus;
        let c = Point::torus(x, y);
        let phi = |p: &PointMeasure| -> f64 {
            p.points.iter().zip(&p.weights).map(|(q, w)| w * distance(m, &c, q)).sum()
        };
        prop_assert!((phi(&a) - phi(&b)).abs() <= exact(m, &a, &b) + 1e-8);
    }

    #[test]
    fn entropic_agrees_with_exact(a in measure(5), b in measure(4)) {
        let m = SurfaceModel::Torus;
        let e = exact(m, &a, &b);
        let s = w1_entropic(&TransportProblem { model: m, source: a, target: b }, &EpsSchedule::default_for(m));
        prop_assert!(s.lower - 1e-9 <= e && e <= s.value + 1e-9);
    }
}
