use holeq_core::validation::{run_suite, ValidationOptions, Verdict};
use holeq_core::SurfaceModel;

fn quick() -> ValidationOptions {
    ValidationOptions { resolution: 32, fine_resolution: 32, fw_iters: 2000, ..ValidationOptions::default() }
}

#[test]
fn misscaled_omega_fails_the_zero_mean_check() {
    let opts = ValidationOptions { omega_scale: 2.0, only: vec![11], ..quick() };
    let r = run_suite(&opts, |_| {}).unwrap();
    assert_eq!(r[10].verdict, Verdict::Fail);
    assert!(r[10].checks.iter().any(|c| !c.passed && c.name.contains("zero ω-mean")));
}

#[test]
fn torus_filter_runs_torus_cases_only() {
    let opts = ValidationOptions { model: Some(SurfaceModel::Torus), only: vec![1, 2, 5, 12], ..quick() };
    let r = run_suite(&opts, |_| {}).unwrap();
    assert_eq!(r[0].verdict, Verdict::Skipped);
    assert_eq!(r[1].verdict, Verdict::Skipped);
    assert_eq!(r[4].verdict, Verdict::Pass, "{:?}", r[4].checks);
    assert_eq!(r[11].verdict, Verdict::Excluded);
}

#[test]
fn monte_carlo_is_opt_in() {
    let opts = ValidationOptions { only: vec![4], ..quick() };
    let r = run_suite(&opts, |_| {}).unwrap();
    assert_eq!(r[3].verdict, Verdict::Pass);
    assert_eq!(r[9].verdict, Verdict::Skipped);
}
