use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

fn scratch(name: &str) -> PathBuf {
    let d = std::env::temp_dir().join(format!("holeq-cli-{}-{name}", std::process::id()));
    let _ = fs::remove_dir_all(&d);
    fs::create_dir_all(&d).unwrap();
    d
}

fn run(dir: &Path, cmd: &str, config: &str) -> i32 {
    let cfg = dir.join("run.toml");
    fs::write(&cfg, config).unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_holeq"))
        .args([cmd, "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.join("out"))
        .args(["--threads", "1"])
        .output()
        .unwrap();
    out.status.code().unwrap()
}

fn report(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(dir.join("out/report.json")).unwrap()).unwrap()
}

#[test]
fn unit_disk_equilibrium() {
    let d = scratch("case1");
    assert_eq!(run(&d, "equilibrium", "resolution = 64\ndomain = {type=\"disk\", r=1.0}\n"), 0);
    let r = report(&d);
    assert!(r["result"]["masses"]["bd"].as_f64().unwrap() >= 0.97);
    assert_eq!(r["config_sha256"].as_str().unwrap().len(), 64);
    assert_eq!(r["version"], env!("CARGO_PKG_VERSION"));
    assert!(d.join("out/fields/equilibrium.csv").exists());
}

#[test]
fn hole_covering_the_surface_is_rejected() {
    let d = scratch("whole");
    assert_eq!(run(&d, "equilibrium", "resolution = 16\ndomain = {type=\"disk\", r=1e12}\n"), 1);
    assert!(!d.join("out/report.json").exists());
}

#[test]
fn unknown_keys_are_rejected() {
    let d = scratch("unknown");
    assert_eq!(run(&d, "equilibrium", "resolution = 16\n[solver]\nsor_factor = 1.5\n"), 1);
    assert_eq!(run(&d, "equilibrium", "resolution = 18\n"), 1);
}

#[test]
fn stall_writes_a_partial_report() {
    let d = scratch("stall");
    let cfg = "resolution = 32\ndomain = {type=\"disk\", r=0.5}\n[solver]\ngap_tol = 1e-300\nmax_outer = 2\n";
    assert_eq!(run(&d, "equilibrium", cfg), 3);
    assert_eq!(report(&d)["result"]["status"], "stalled");
}

#[test]
fn montecarlo_exit_codes() {
    let d = scratch("mc");
    let smoke = "resolution = 16\ndomain = {type=\"empty\"}\n[montecarlo]\ndegrees = [4, 5]\nbudget = 500\n";
    assert_eq!(run(&d, "montecarlo", smoke), 0);
    let r = report(&d);
    for s in r["result"]["experiment"]["per_degree"].as_array().unwrap() {
        assert_eq!(s["p_hat"].as_f64().unwrap(), 1.0);
    }
    let hard = "resolution = 32\ndomain = {type=\"disk\", r=1.0}\n[montecarlo]\ndegrees = [10, 12]\nbudget = 1000000\n";
    assert_eq!(run(&d, "montecarlo", hard), 4);
}

#[test]
fn identical_configs_give_identical_reports() {
    let cfg = "resolution = 16\ndomain = {type=\"disk\", r=0.4}\n[montecarlo]\ndegrees = [3, 4]\nbudget = 3000\nkeep = 2\nseed = 99\n";
    let (a, b) = (scratch("det-a"), scratch("det-b"));
    assert_eq!(run(&a, "montecarlo", cfg), 0);
    assert_eq!(run(&b, "montecarlo", cfg), 0);
    assert_eq!(fs::read(a.join("out/report.json")).unwrap(), fs::read(b.join("out/report.json")).unwrap());
    assert_eq!(
        fs::read(a.join("out/fields/zeros_n4.csv")).unwrap(),
        fs::read(b.join("out/fields/zeros_n4.csv")).unwrap()
    );
}

#[test]
fn validate_negative_control() {
    let d = scratch("neg");
    assert_eq!(run(&d, "green-selftest", "resolution = 32\n[validate]\nomega_scale = 2.0\n"), 2);
    assert_eq!(report(&d)["result"]["passed"], false);
    assert_eq!(run(&d, "green-selftest", "resolution = 32\n"), 0);
}

#[test]
fn oracle_and_envelope() {
    let d = scratch("oracle");
    assert_eq!(run(&d, "oracle", "domain = {type=\"disk\", r=0.5}\n"), 0);
    assert!((report(&d)["result"]["energy"].as_f64().unwrap()) > 0.0);
    assert!(d.join("out/profiles/oracle.csv").exists());
    assert_eq!(run(&d, "oracle", "model = \"torus\"\ndomain = {type=\"disk\", r=0.5}\n"), 1);
    assert_eq!(run(&d, "envelope", "resolution = 32\nmodel = \"torus\"\ndomain = {type=\"torus_strip\", r=0.3}\n"), 0);
    assert!(d.join("out/fields/envelope.csv").exists());
}
