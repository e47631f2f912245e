use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_dk-lab");

const DUALITY: &str = "\
experiment = laplace_duality
alpha = 2
dimension = 1
t = 0.5
nu = atoms[-1, 0, 0.5, 2]
phi = gaussian(0, 1, 1)
replicas = 2000
seed = 11
output_path = duality.csv
";

fn run(config: &str, dir: &Path, extra: &[&str], seed: Option<&str>) -> Output {
    let path = dir.join("experiment.cfg");
    std::fs::write(&path, config).unwrap();
    let mut cmd = Command::new(BIN);
    cmd.arg("run").arg(&path).arg("--output").arg(dir).args(extra);
    match seed {
        Some(s) => cmd.env("DK_LAB_SEED", s),
        None => cmd.env_remove("DK_LAB_SEED"),
    };
    cmd.output().unwrap()
}

#[test]
fn selftest_passes() {
    let out = Command::new(BIN).arg("selftest").output().unwrap();
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(out.status.success(), "{stdout}");
    assert!(!stdout.contains("[FAIL]"));
}

#[test]
fn output_is_identical_across_thread_counts() {
    let one = tempfile::tempdir().unwrap();
    let many = tempfile::tempdir().unwrap();
    assert!(run(DUALITY, one.path(), &["--threads", "1"], None).status.success());
    assert!(run(DUALITY, many.path(), &["--threads", "8"], None).status.success());
    let a = std::fs::read(one.path().join("duality.csv")).unwrap();
    let b = std::fs::read(many.path().join("duality.csv")).unwrap();
    assert_eq!(a, b);
    let text = String::from_utf8(a).unwrap();
    assert!(text.starts_with("test_name,alpha,d,t,replicas,seed,estimate,stderr,reference,z_score,pass,notes\n"));
}

#[test]
fn reference_offset_forces_failure() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&format!("{DUALITY}reference_offset = 0.1\n"), dir.path(), &[], None);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn seed_environment_variable_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    assert!(run(DUALITY, dir.path(), &[], Some("123")).status.success());
    let csv = std::fs::read_to_string(dir.path().join("duality.csv")).unwrap();
    let row: Vec<&str> = csv.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[5], "123");
}

#[test]
fn invalid_config_exits_with_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&DUALITY.replace("alpha = 2", "alpha = -1"), dir.path(), &[], None);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("alpha > 0"));
}
