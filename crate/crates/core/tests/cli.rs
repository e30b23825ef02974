use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use rotlayer::cli::{run, Mode, RunConfig};
use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_rotlayer"))
}

fn write_cfg(dir: &Path, name: &str, json: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    fs::write(&p, json).unwrap();
    p
}

fn exec(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn report(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("report.json")).unwrap()).unwrap()
}

#[test]
fn defaults_print_and_reload() {
    let out = exec(&["--print-defaults"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(RunConfig::from_json(&text).unwrap(), RunConfig::default());
}

#[test]
fn construct_only_writes_artifacts_and_passes() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write_cfg(d.path(), "c.json", r#"{"mode": "construct-only", "k_theta": 8, "m_theta": 24}"#);
    let out_dir = d.path().join("out");
    let o = exec(&["run", cfg.to_str().unwrap(), "--out", out_dir.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let stdout = String::from_utf8(o.stdout).unwrap();
    assert!(stdout.lines().all(|l| l.starts_with("PASS ")), "{stdout}");
    for f in ["report.json", "timing.json", "fields/u_a.csv", "fields/v_a.csv", "fields/p_a.csv"] {
        assert!(out_dir.join(f).exists(), "{f}");
    }
    let r = report(&out_dir);
    assert_eq!(r["mode"], "construct-only");
    assert!(r["residual"]["divergence"].as_f64().unwrap() < 1e-9);
}

#[test]
fn reports_are_byte_identical_across_runs() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write_cfg(d.path(), "c.json", r#"{"mode": "full-solve", "k_theta": 4, "m_theta": 12, "write_fields": false}"#);
    let mut texts = Vec::new();
    for name in ["a", "b"] {
        let dir = d.path().join(name);
        let o = exec(&["run", cfg.to_str().unwrap(), "--out", dir.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
        texts.push(fs::read(dir.join("report.json")).unwrap());
    }
    assert_eq!(texts[0], texts[1]);
    let r: Value = serde_json::from_slice(&texts[0]).unwrap();
    assert_eq!(r["error_solve"]["converged"], true);
    assert!(d.path().join("a/history.csv").exists());
}

#[test]
fn configuration_errors_exit_with_four() {
    let d = tempfile::tempdir().unwrap();
    let bad = write_cfg(d.path(), "bad.json", r#"{"omgea": 1.0}"#);
    let o = exec(&["run", bad.to_str().unwrap(), "--out", d.path().join("o").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&o.stderr).contains("omgea"));
    let regime = write_cfg(d.path(), "regime.json", r#"{"mode": "full-solve", "epsilon": 0.5, "k_theta": 4, "m_theta": 12}"#);
    let o = exec(&["run", regime.to_str().unwrap(), "--out", d.path().join("o").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(4));
    assert_eq!(exec(&[]).status.code(), Some(4));
}

#[test]
fn non_convergence_exits_with_three() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write_cfg(
        d.path(),
        "c.json",
        r#"{"mode": "full-solve", "k_theta": 4, "m_theta": 12, "error": {"max_iter": 1}, "write_fields": false}"#,
    );
    let out_dir = d.path().join("o");
    let o = exec(&["run", cfg.to_str().unwrap(), "--out", out_dir.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert_eq!(report(&out_dir)["error_solve"]["converged"], false);
}

#[test]
fn failed_gate_exits_with_two() {
    // at unit rotation the residual falls faster than the nominal order
    let d = tempfile::tempdir().unwrap();
    let cfg = write_cfg(d.path(), "c.json", r#"{"k_theta": 8, "m_theta": 24, "write_fields": false}"#);
    let out_dir = d.path().join("o");
    let o = exec(&[
        "--gates",
        "residual_order",
        "sweep",
        cfg.to_str().unwrap(),
        "--axis",
        "eps",
        "--values",
        "0.2,0.1,0.05",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stdout));
    assert!(String::from_utf8_lossy(&o.stdout).contains("FAIL residual_order"));
}

#[test]
fn delta_sweep_is_linear() {
    let mut cfg = RunConfig { mode: Mode::Sweep, k_theta: 8, m_theta: 24, ..Default::default() };
    cfg.sweep.axis = rotlayer::cli::Axis::Delta;
    cfg.sweep.values = vec![0.1, 0.05, 0.025];
    let a = run(&cfg).unwrap();
    let s = a.report.sweep.as_ref().unwrap();
    assert_eq!(s.delta_linearity.len(), 2);
    for q in &s.delta_linearity {
        assert!((q / 2.0 - 1.0).abs() < 0.1, "{q}");
    }
    assert!(a.report.passed(), "{:?}", a.report.gates);
}

#[test]
fn single_point_sweep_notes_missing_fit() {
    let mut cfg = RunConfig { mode: Mode::Sweep, k_theta: 4, m_theta: 12, ..Default::default() };
    cfg.sweep.values = vec![0.1];
    let a = run(&cfg).unwrap();
    let s = a.report.sweep.as_ref().unwrap();
    assert!(s.residual_exponent.is_none());
    assert_eq!(s.note.as_deref(), Some("insufficient points for a fit"));
}
