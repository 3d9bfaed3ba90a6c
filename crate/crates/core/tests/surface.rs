use holeq_core::surface::{build_grid, distance, domain_mask, Point};
use holeq_core::{DomainSpec, SurfaceModel};
use proptest::prelude::*;

#[test]
fn torus_wraparound_distance() {
    let d = distance(SurfaceModel::Torus, &Point::torus(0.0, 0.0), &Point::torus(0.9, 0.0));
    assert!((d - 0.1).abs() < 1e-15);
}

#[test]
fn antipodes_are_farthest() {
    let d = distance(SurfaceModel::Sphere, &Point::sphere(0.0, 0.0), &Point::infinity());
    assert!((d - SurfaceModel::Sphere.diameter()).abs() < 1e-15);
}

#[test]
fn locate_recovers_nodes() {
    for model in [SurfaceModel::Sphere, SurfaceModel::Torus] {
        let g = build_grid(model, 16).unwrap();
        for (i, p) in g.nodes.iter().enumerate() {
            assert_eq!(g.locate(p), i);
        }
    }
}

#[test]
fn equator_is_a_band_face() {
    let g = build_grid(SurfaceModel::Sphere, 32).unwrap();
    let l = g.sphere_layout().unwrap();
    assert_eq!(l.u_faces[l.bands / 2], 0.5);
}

#[test]
fn cell_masses_are_a_probability() {
    for model in [SurfaceModel::Sphere, SurfaceModel::Torus] {
        for res in [4, 16, 64] {
            let g = build_grid(model, res).unwrap();
            let total: f64 = g.cell_mass.iter().sum();
            assert!((total - 1.0).abs() < 1e-12, "{model:?} {res}");
        }
    }
}

#[test]
fn rejects_bad_resolution() {
    assert!(build_grid(SurfaceModel::Sphere, 2).is_err());
    assert!(build_grid(SurfaceModel::Sphere, 10).is_err());
}

#[test]
fn rejects_hole_covering_everything() {
    let g = build_grid(SurfaceModel::Sphere, 16).unwrap();
    assert!(domain_mask(&g, &DomainSpec::Disk { r: 1e12 }).is_err());
    assert!(domain_mask(&g, &DomainSpec::Disk { r: -1.0 }).is_err());
}

#[test]
fn disk_mask_matches_area() {
    // ω(|z| < 1) = 1/2 on the sphere.
    let g = build_grid(SurfaceModel::Sphere, 64).unwrap();
    let m = domain_mask(&g, &DomainSpec::Disk { r: 1.0 }).unwrap();
    let area: f64 = (0..g.len()).filter(|&i| m.closure()[i]).map(|i| g.cell_mass[i]).sum();
    assert!((area - 0.5).abs() < 2.0 * g.h, "{area}");
}

#[test]
fn domain_specs_parse_tagged() {
    let d: DomainSpec = serde_json::from_str(r#"{"type":"disk","r":0.5}"#).unwrap();
    assert_eq!(d, DomainSpec::Disk { r: 0.5 });
    assert!(serde_json::from_str::<DomainSpec>(r#"{"type":"disk","r":0.5,"s":1}"#).is_err());
    let e: DomainSpec = serde_json::from_str(r#"{"type":"empty"}"#).unwrap();
    assert!(e.is_empty());
}

fn sphere_point() -> impl Strategy<Value = Point> {
    (0.0..1.0f64, 0.0..std::f64::consts::TAU).prop_map(|(u, t)| Point::from_u_theta(u, t))
}

fn torus_point() -> impl Strategy<Value = Point> {
    (0.0..1.0f64, 0.0..1.0f64).prop_map(|(x, y)| Point::torus(x, y))
}

proptest! {
    #[test]
    fn sphere_distance_is_a_metric(a in sphere_point(), b in sphere_point(), c in sphere_point()) {
        let d = |p: &Point, q: &Point| distance(SurfaceModel::Sphere, p, q);
        prop_assert!(d(&a, &a).abs() < 1e-7);
        prop_assert!((d(&a, &b) - d(&b, &a)).abs() < 1e-12);
        prop_assert!(d(&a, &c) <= d(&a, &b) + d(&b, &c) + 1e-12);
        prop_assert!(d(&a, &b) <= SurfaceModel::Sphere.diameter() + 1e-12);
    }

    #[test]
    fn torus_distance_is_a_metric(a in torus_point(), b in torus_point(), c in torus_point()) {
        let d = |p: &Point, q: &Point| distance(SurfaceModel::Torus, p, q);
        prop_assert!((d(&a, &b) - d(&b, &a)).abs() < 1e-15);
        prop_assert!(d(&a, &c) <= d(&a, &b) + d(&b, &c) + 1e-12);
        prop_assert!(d(&a, &b) <= SurfaceModel::Torus.diameter() + 1e-12);
    }

    #[test]
    fn locate_finds_a_near_node(p in sphere_point()) {
        let g = build_grid(SurfaceModel::Sphere, 32).unwrap();
        let i = g.locate(&p);
        prop_assert!(distance(SurfaceModel::Sphere, &p, &g.nodes[i]) <= 2.0 * g.h);
    }
}
