use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use rotlayer_ffi::*;

fn last_error() -> String {
    let p = rl_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn tilde_omega_and_null_checks() {
    let fs = [0.0, 1.0];
    let mut w = 0.0;
    let st = unsafe { rl_tilde_omega(2.0, 0.1, ptr::null(), 0, fs.as_ptr(), 2, &mut w) };
    assert_eq!(st, RlStatus::Ok);
    assert!((w - 4.005f64.sqrt()).abs() < 1e-15);
    let st = unsafe { rl_tilde_omega(2.0, 0.1, ptr::null(), 0, fs.as_ptr(), 2, ptr::null_mut()) };
    assert_eq!(st, RlStatus::NullPointer);
    let st = unsafe { rl_tilde_omega(0.0, 0.1, ptr::null(), 0, ptr::null(), 0, &mut w) };
    assert_eq!(st, RlStatus::InvalidParam);
    assert!(last_error().contains("omega"));
}

#[test]
fn config_round_trip_and_errors() {
    let mut cfg = ptr::null_mut();
    assert_eq!(unsafe { rl_config_default(&mut cfg) }, RlStatus::Ok);
    let mut s = ptr::null_mut();
    assert_eq!(unsafe { rl_config_to_json(cfg, &mut s) }, RlStatus::Ok);
    let text = unsafe { CStr::from_ptr(s) }.to_owned();
    unsafe { rl_string_free(s) };
    unsafe { rl_config_free(cfg) };
    let mut again = ptr::null_mut();
    assert_eq!(unsafe { rl_config_from_json(text.as_ptr(), &mut again) }, RlStatus::Ok);
    unsafe { rl_config_free(again) };

    let bad = CString::new(r#"{"mode": "rescale-lambda"}"#).unwrap();
    let mut h = ptr::null_mut();
    assert_eq!(unsafe { rl_config_from_json(bad.as_ptr(), &mut h) }, RlStatus::Config);
    assert!(h.is_null());
    assert!(last_error().contains("lambda"));
    let bytes = [0xffu8, 0];
    assert_eq!(unsafe { rl_config_from_json(bytes.as_ptr().cast(), &mut h) }, RlStatus::InvalidUtf8);
}

#[test]
fn hardy_through_abi() {
    let s: Vec<f64> = (0..4001).map(|i| 40.0 * i as f64 / 4000.0).collect();
    let f: Vec<f64> = s.iter().map(|x| x * (-x).exp()).collect();
    let (mut ratio, mut passed) = (0.0, false);
    let st = unsafe { rl_hardy_check(s.as_ptr(), f.as_ptr(), s.len(), false, 0.0, &mut ratio, &mut passed) };
    assert_eq!(st, RlStatus::Ok);
    assert!(passed && (ratio - 0.5).abs() < 1e-9);
    let g: Vec<f64> = s.iter().map(|x| (-x).exp()).collect();
    let st = unsafe { rl_hardy_check(s.as_ptr(), g.as_ptr(), s.len(), false, 0.0, &mut ratio, &mut passed) };
    assert_eq!(st, RlStatus::Precondition);
}

#[test]
fn run_handle_lifecycle() {
    let json = CString::new(r#"{"delta": 0.05, "assembly": {"n_r": 150}, "layer": {"n_zeta": 300}}"#).unwrap();
    let mut cfg = ptr::null_mut();
    assert_eq!(unsafe { rl_config_from_json(json.as_ptr(), &mut cfg) }, RlStatus::Ok);
    let mut run = ptr::null_mut();
    assert_eq!(unsafe { rl_run(cfg, &mut run) }, RlStatus::Ok);
    let mut w = 0.0;
    assert_eq!(unsafe { rl_run_tilde_omega(run, &mut w) }, RlStatus::Ok);
    assert!((w - (1.0f64 + 0.05 * 0.05 / 2.0).sqrt()).abs() < 1e-15);
    let mut n = 0usize;
    assert_eq!(unsafe { rl_run_field_count(run, &mut n) }, RlStatus::Ok);
    assert_eq!(n, 3);
    let mut name = ptr::null_mut();
    assert_eq!(unsafe { rl_run_field_name(run, 0, &mut name) }, RlStatus::Ok);
    assert_eq!(unsafe { CStr::from_ptr(name) }.to_str().unwrap(), "u_a");
    unsafe { rl_string_free(name) };
    let mut len = 0usize;
    assert_eq!(unsafe { rl_run_field_len(run, 0, &mut len) }, RlStatus::Ok);
    let (mut r, mut v) = (0.0, 0.0);
    assert_eq!(unsafe { rl_run_field_eval(run, 0, len - 1, 0.0, &mut r, &mut v) }, RlStatus::Ok);
    assert!((r - 64.0).abs() < 1e-9 && (v * r - w).abs() < 1e-3, "{r} {v}");
    assert_eq!(unsafe { rl_run_field_eval(run, 0, len, 0.0, &mut r, &mut v) }, RlStatus::OutOfRange);
    let dir = std::env::temp_dir().join(format!("rotlayer-ffi-{}", std::process::id()));
    let cdir = CString::new(dir.to_str().unwrap()).unwrap();
    assert_eq!(unsafe { rl_run_write(run, cdir.as_ptr(), false) }, RlStatus::Ok);
    assert!(dir.join("report.json").exists());
    let _ = std::fs::remove_dir_all(&dir);
    unsafe { rl_run_free(run) };
    unsafe { rl_config_free(cfg) };
}

#[test]
fn c_program_links_against_header() {
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let exe_dir = std::env::current_exe().unwrap().parent().unwrap().to_path_buf();
    let lib = [exe_dir.join("librotlayer_ffi.a"), exe_dir.parent().unwrap().join("librotlayer_ffi.a")]
        .into_iter()
        .find(|p| p.exists())
        .expect("static library next to the test binary");
    let exe = std::env::temp_dir().join(format!("rotlayer-smoke-{}", std::process::id()));
    let status = Command::new("cc")
        .arg(manifest.join("tests/smoke.c"))
        .arg("-I")
        .arg(manifest.join("include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .expect("C compiler");
    assert!(status.success());
    let out = Command::new(&exe).output().unwrap();
    let _ = std::fs::remove_file(&exe);
    assert!(out.status.success(), "smoke exit {:?}", out.status.code());
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("ok "));
}
