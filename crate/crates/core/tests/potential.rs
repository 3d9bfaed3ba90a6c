use holeq_core::green::{kernel_matrix, GreenKernel};
use holeq_core::potential::{energy, DiscreteMeasure};
use holeq_core::surface::build_grid;
use holeq_core::SurfaceModel;
use proptest::prelude::*;

#[test]
fn omega_has_zero_energy() {
    for m in [SurfaceModel::Sphere, SurfaceModel::Torus] {
        let g = build_grid(m, 32).unwrap();
        let k = kernel_matrix(&g, &GreenKernel::for_model(m, 16).unwrap()).unwrap();
        let e = energy(&DiscreteMeasure::omega(&g), &k, &g);
        assert!(e.value.abs() < 0.02, "{m:?} {}", e.value);
        assert!(!e.atomic_warning);
    }
}

#[test]
fn atoms_are_flagged() {
    let g = build_grid(SurfaceModel::Sphere, 16).unwrap();
    let k = kernel_matrix(&g, &GreenKernel::sphere()).unwrap();
    assert!(energy(&DiscreteMeasure::atom(g.len(), 5), &k, &g).atomic_warning);
}

#[test]
fn rejects_bad_weights() {
    assert!(DiscreteMeasure::new(vec![0.5, -0.1, 0.6]).is_err());
    assert!(DiscreteMeasure::normalized(vec![0.0, 0.0]).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]
    #[test]
    fn energy_is_convex_along_segments(seed_a in proptest::collection::vec(0.0..1.0f64, 98), seed_b in proptest::collection::vec(0.0..1.0f64, 98)) {
        let g = build_grid(SurfaceModel::Torus, 8).unwrap();
        let k = kernel_matrix(&g, &GreenKernel::torus(16).unwrap()).unwrap();
        let n = g.len();
        let a = DiscreteMeasure::normalized(seed_a.iter().cycle().take(n).map(|x| x + 0.01).collect()).unwrap();
        let b = DiscreteMeasure::normalized(seed_b.iter().cycle().take(n).map(|x| x + 0.01).collect()).unwrap();
        let e: Vec<f64> = (0..=10).map(|j| energy(&a.mix(&b, j as f64 / 10.0), &k, &g).value).collect();
        for w in e.windows(3) {
            prop_assert!(w[0] + w[2] - 2.0 * w[1] >= -1e-8);
        }
    }

    #[test]
    fn energy_is_nonnegative(seed in proptest::collection::vec(0.0..1.0f64, 130)) {
        let g = build_grid(SurfaceModel::Sphere, 16).unwrap();
        let k = kernel_matrix(&g, &GreenKernel::sphere()).unwrap();
        let w: Vec<f64> = (0..g.len()).map(|i| seed[i % seed.len()] * g.cell_mass[i]).collect();
        let e = energy(&DiscreteMeasure::normalized(w).unwrap(), &k, &g);
        prop_assert!(e.value >= -0.02);
    }
}
