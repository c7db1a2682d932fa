use std::path::Path;
use std::process::{Command, Output};

fn simpl(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_simpl"))
        .args(args)
        .current_dir(dir)
        .env("SIMPL_LOG", "quiet")
        .output()
        .expect("binary runs")
}

const COARSE: &str = r#"{"mesh": {"nx": 24, "ny": 8}}"#;

fn write_config(dir: &Path, text: &str) {
    std::fs::write(dir.join("config.json"), text).unwrap();
}

#[test]
fn run_writes_all_outputs() {
    let dir = tempfile::tempdir().unwrap();
    write_config(dir.path(), COARSE);
    let out = simpl(
        &["run", "--config", "config.json", "--max-iters", "4", "--method", "simpl-a", "--out", "res", "--vtk"],
        dir.path(),
    );
    // four iterations are not enough to converge
    assert_eq!(out.status.code(), Some(1), "{}", String::from_utf8_lossy(&out.stderr));
    let res = dir.path().join("res");
    let csv = std::fs::read_to_string(res.join("convergence.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("iter,compliance,stationarity,step,ls_trials,volume_error"));
    assert_eq!(lines.count(), 5);
    let pgm = std::fs::read(res.join("density.pgm")).unwrap();
    assert!(pgm.starts_with(b"P5\n24 8\n255\n"));
    assert_eq!(pgm.len(), b"P5\n24 8\n255\n".len() + 24 * 8);
    assert!(res.join("design.vtk").exists());
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(res.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["method"], "simpl-a");
    assert_eq!(summary["totals"]["iterations"], 4);
}

#[test]
fn converged_run_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    write_config(
        dir.path(),
        r#"{"mesh": {"nx": 24, "ny": 8}, "stopping": {"tol_s": 0.3, "tol_f": 0.5}}"#,
    );
    let out = simpl(&["run", "--config", "config.json"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    assert!(dir.path().join("simpl-out/convergence.csv").exists());
}

#[test]
fn bad_configuration_exits_two_and_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    write_config(dir.path(), r#"{"line_search": {"beta": 1.5}}"#);
    let out = simpl(&["run", "--config", "config.json"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("line_search.beta"), "{stderr}");

    let out = simpl(&["run", "--config", "missing.json"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn compare_writes_a_merged_table() {
    let dir = tempfile::tempdir().unwrap();
    write_config(dir.path(), COARSE);
    let out = simpl(&["compare", "--config", "config.json", "--max-iters", "3", "--out", "cmp"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    let root = dir.path().join("cmp");
    let merged = std::fs::read_to_string(root.join("comparison.csv")).unwrap();
    assert!(merged.starts_with("method,iter,"));
    for method in ["simpl-a", "simpl-b", "oc"] {
        assert_eq!(merged.lines().filter(|l| l.starts_with(&format!("{method},"))).count(), 4);
        assert!(root.join(method).join("density.pgm").exists());
    }
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    write_config(dir.path(), COARSE);
    for out in ["a", "b"] {
        let status = simpl(&["run", "--config", "config.json", "--max-iters", "6", "--out", out], dir.path()).status;
        assert_eq!(status.code(), Some(1));
    }
    for file in ["convergence.csv", "density.pgm"] {
        let a = std::fs::read(dir.path().join("a").join(file)).unwrap();
        let b = std::fs::read(dir.path().join("b").join(file)).unwrap();
        assert_eq!(a, b, "{file}");
    }
}
