use holeq_core::poly::{binomials, fs_residual, roots};
use holeq_core::surface::Ext;
use num_complex::Complex64;
use proptest::prelude::*;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn finite(v: &[Ext]) -> Vec<Complex64> {
    v.iter()
        .map(|z| match z {
            Ext::Finite(z) => *z,
            Ext::Infinity => panic!("unexpected root at infinity"),
        })
        .collect()
}

#[test]
fn monomial_roots_at_zero() {
    let mut co = vec![c(0.0, 0.0); 6];
    co[5] = c(1.0, 0.0);
    let r = finite(&roots(&co).unwrap());
    assert_eq!(r.len(), 5);
    assert!(r.iter().all(|z| z.norm() == 0.0));
}

#[test]
fn vanishing_top_coefficients_give_infinity() {
    // 1 + z with declared degree 3: roots −1, ∞, ∞.
    let co = vec![c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)];
    let r = roots(&co).unwrap();
    assert_eq!(r.iter().filter(|z| matches!(z, Ext::Infinity)).count(), 2);
    let f: Vec<_> = r.iter().filter_map(|z| if let Ext::Finite(z) = z { Some(*z) } else { None }).collect();
    assert!((f[0] + 1.0).norm() < 1e-14);
}

#[test]
fn repeated_root() {
    // (z − 1)^n: roots cluster at 1 within ~ε^{1/n}.
    let n = 6;
    let b = binomials(n);
    let co: Vec<Complex64> = (0..=n).map(|k| c(b[k] * if (n - k) % 2 == 0 { 1.0 } else { -1.0 }, 0.0)).collect();
    let r = finite(&roots(&co).unwrap());
    assert_eq!(r.len(), n);
    for z in &r {
        assert!((z - 1.0).norm() < 1e-2, "{z}");
    }
    let mean: Complex64 = r.iter().sum::<Complex64>() / n as f64;
    assert!((mean - 1.0).norm() < 1e-4, "{mean}");
}

#[test]
fn roots_of_unity() {
    let n = 12;
    let mut co = vec![c(0.0, 0.0); n + 1];
    co[0] = c(-1.0, 0.0);
    co[n] = c(1.0, 0.0);
    let r = finite(&roots(&co).unwrap());
    for z in &r {
        assert!((z.norm() - 1.0).abs() < 1e-13);
        assert!((z.powu(n as u32) - 1.0).norm() < 1e-12);
    }
}

#[test]
fn binomial_row() {
    assert_eq!(binomials(4), vec![1.0, 4.0, 6.0, 4.0, 1.0]);
}

fn coeffs() -> impl Strategy<Value = Vec<Complex64>> {
    (2usize..14).prop_flat_map(|n| proptest::collection::vec((-1.0..1.0f64, -1.0..1.0f64), n + 1)).prop_map(|v| {
        let mut v: Vec<Complex64> = v.into_iter().map(|(a, b)| c(a, b)).collect();
        let last = v.len() - 1;
        if v[last].norm() < 0.1 {
            v[last] = c(1.0, 0.0);
        }
        if v[0].norm() < 0.1 {
            v[0] = c(0.5, 0.0);
        }
        v
    })
}

proptest! {
    #[test]
    fn vieta(co in coeffs()) {
        let n = co.len() - 1;
        let r = finite(&roots(&co).unwrap());
        prop_assert_eq!(r.len(), n);
        let sum: Complex64 = r.iter().sum();
        let prod: Complex64 = r.iter().product();
        let lead = co[n];
        let scale = 1.0 + (co[n - 1] / lead).norm();
        prop_assert!((sum + co[n - 1] / lead).norm() < 1e-8 * scale);
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        let p = sign * co[0] / lead;
        prop_assert!((prod - p).norm() < 1e-7 * (1.0 + p.norm()));
    }

    #[test]
    fn roots_have_small_residual(co in coeffs()) {
        let norm: f64 = co.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        for z in roots(&co).unwrap() {
            prop_assert!(fs_residual(&co, norm, z) < 1e-10);
        }
    }
}
