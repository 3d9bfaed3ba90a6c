use std::f64::consts::{PI, TAU};

use holeq_core::green::{green_sphere, kernel_matrix, GreenKernel, SPHERE_SELF_SMOOTH};
use holeq_core::surface::{build_grid, Ext, Point};
use holeq_core::validation::green_mean;
use holeq_core::SurfaceModel;
use num_complex::Complex64;
use proptest::prelude::*;

#[test]
fn self_smooth_constant() {
    assert!((SPHERE_SELF_SMOOTH - (0.5 + 0.5 * PI.ln())).abs() < 1e-15);
}

#[test]
fn structured_matvec_matches_entries() {
    for (model, res) in [(SurfaceModel::Sphere, 8), (SurfaceModel::Torus, 6)] {
        let g = build_grid(model, res).unwrap();
        let k = GreenKernel::for_model(model, 16).unwrap();
        let m = kernel_matrix(&g, &k).unwrap();
        let w: Vec<f64> = (0..g.len()).map(|i| ((i * 7919) % 13) as f64 / 13.0).collect();
        let fast = m.matvec(&w);
        for i in 0..g.len() {
            let slow: f64 = (0..g.len()).map(|j| m.get(i, j) * w[j]).sum();
            assert!((fast[i] - slow).abs() < 1e-12, "{model:?} row {i}");
        }
    }
}

#[test]
fn off_diagonal_entries_are_kernel_values() {
    let g = build_grid(SurfaceModel::Torus, 6).unwrap();
    let k = GreenKernel::for_model(SurfaceModel::Torus, 16).unwrap();
    let m = kernel_matrix(&g, &k).unwrap();
    for i in 0..g.len() {
        for j in 0..g.len() {
            if i != j {
                assert!((m.get(i, j) - k.eval(&g.nodes[i], &g.nodes[j])).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn pole_formula() {
    // From the origin G = ½ ln u + ½ with u = |z|²/(1+|z|²).
    for r in [0.1, 0.7, 1.0, 3.0] {
        let u: f64 = r * r / (1.0 + r * r);
        let g = green_sphere(Ext::Finite(Complex64::new(0.0, 0.0)), Ext::Finite(Complex64::new(r, 0.0)));
        assert!((g - (0.5 * u.ln() + 0.5)).abs() < 1e-13);
    }
}

#[test]
fn zero_mean_both_models() {
    for (m, p) in [(SurfaceModel::Sphere, Point::sphere(0.3, -0.4)), (SurfaceModel::Torus, Point::torus(0.2, 0.7))] {
        assert!(green_mean(m, &p, 1.0).abs() < 1e-6, "{m:?}");
        assert!(green_mean(m, &p, 2.0).abs() > 1e-3, "{m:?} mis-scaled");
    }
}

#[test]
fn torus_truncation_floor() {
    assert!(GreenKernel::torus(16).is_ok());
}

proptest! {
    #[test]
    fn sphere_kernel_is_rotation_invariant(r1 in 0.01..10.0f64, r2 in 0.01..10.0f64, t1 in 0.0..TAU, t2 in 0.0..TAU, s in 0.0..TAU) {
        let z = Complex64::from_polar(r1, t1);
        let w = Complex64::from_polar(r2, t2);
        let rot = Complex64::from_polar(1.0, s);
        let a = green_sphere(Ext::Finite(z), Ext::Finite(w));
        let b = green_sphere(Ext::Finite(rot * z), Ext::Finite(rot * w));
        prop_assert!((a - b).abs() < 1e-11);
        // and under the chart swap z ↦ 1/z
        let c = green_sphere(Ext::Finite(1.0 / z), Ext::Finite(1.0 / w));
        prop_assert!((a - c).abs() < 1e-10);
    }

    #[test]
    fn torus_kernel_is_translation_invariant(x in 0.0..1.0f64, y in 0.0..1.0f64, dx in 0.01..0.99f64, dy in 0.0..1.0f64, sx in 0.0..1.0f64, sy in 0.0..1.0f64) {
        let k = GreenKernel::torus(16).unwrap();
        let a = k.eval(&Point::torus(x, y), &Point::torus(x + dx, y + dy));
        let b = k.eval(&Point::torus(x + sx, y + sy), &Point::torus(x + dx + sx, y + dy + sy));
        prop_assert!((a - b).abs() < 1e-10);
        let c = k.eval(&Point::torus(x + dx, y + dy), &Point::torus(x, y));
        prop_assert!((a - c).abs() < 1e-12);
    }
}
