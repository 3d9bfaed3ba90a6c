use holeq_core::radial_oracle::{
    annulus_solve, disk_radial_solve, mass_below, tangency_root, torus_strip_energy_small, torus_strip_solve,
};
use proptest::prelude::*;
use std::f64::consts::PI;

#[test]
fn unit_disk_is_all_boundary() {
    let p = disk_radial_solve(1.0).unwrap();
    assert!((p.energy - 0.5).abs() < 1e-12, "{}", p.energy);
    assert!((p.kink_mass() - 1.0).abs() < 1e-12);
    assert!(p.cap_mass().abs() < 1e-12);
}

#[test]
fn half_disk_tangency_at_one() {
    let t = tangency_root(0.5).unwrap();
    assert!((t - 1.0).abs() < 1e-10, "{t}");
    let p = disk_radial_solve(0.5).unwrap();
    // boundary carries ω(|z| < t), the cap carries the rest
    assert!((p.kink_mass() - t * t / (1.0 + t * t)).abs() < 1e-10);
    assert!((p.total_mass() - 1.0).abs() < 1e-10);
}

#[test]
fn small_disk_asymptotics() {
    let r = 1e-4;
    let t = tangency_root(r).unwrap();
    assert!((t / r - 0.5f64.exp()).abs() < 1e-3);
}

#[test]
fn large_disk_has_no_cap() {
    let p = disk_radial_solve(2.0).unwrap();
    assert!((p.kink_mass() - 1.0).abs() < 1e-10);
}

#[test]
fn torus_half_strip_splits_evenly() {
    let p = torus_strip_solve(0.5, PI).unwrap();
    assert_eq!(p.kinks.len(), 2);
    for k in &p.kinks {
        assert!((k.mass - 0.5).abs() < 1e-10);
    }
}

#[test]
fn thin_torus_strip_energy() {
    let r = 0.01;
    let p = torus_strip_solve(r, PI).unwrap();
    assert!((p.total_mass() - 1.0).abs() < 1e-10);
    let small = torus_strip_energy_small(r);
    assert!((p.energy - small).abs() < 0.05 * small.abs().max(1e-3), "{} {small}", p.energy);
}

#[test]
fn annulus_masses() {
    let p = annulus_solve(0.3, 2.0).unwrap();
    assert!((p.total_mass() - 1.0).abs() < 1e-10);
    assert!(p.energy > 0.0);
}

#[test]
fn rejects_bad_radii() {
    assert!(disk_radial_solve(0.0).is_err());
    assert!(annulus_solve(2.0, 1.0).is_err());
}

proptest! {
    #[test]
    fn disk_profile_is_a_probability(r in 0.05..5.0f64) {
        let p = disk_radial_solve(r).unwrap();
        prop_assert!((p.total_mass() - 1.0).abs() < 1e-9);
        prop_assert!(p.energy > 0.0);
        // the profile stays at or below the obstacle
        for k in 0..50 {
            let s = -6.0 + 0.24 * k as f64;
            prop_assert!(p.value(s) <= p.obstacle(s) + 1e-9);
        }
    }

    #[test]
    fn energy_grows_with_the_disk(r in 0.05..3.0f64) {
        let a = disk_radial_solve(r).unwrap().energy;
        let b = disk_radial_solve(r * 1.1).unwrap().energy;
        prop_assert!(b >= a - 1e-12);
    }

    #[test]
    fn mass_below_is_a_cdf(s in -20.0..20.0f64) {
        let m = mass_below(s);
        prop_assert!((0.0..=1.0).contains(&m));
        prop_assert!(mass_below(s + 0.1) >= m);
    }
}
