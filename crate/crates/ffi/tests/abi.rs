use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use subrad_ffi::*;

#[test]
fn sample_and_query_ensemble() {
    unsafe {
        let params = subrad_params_new();
        let mut ens = ptr::null_mut();
        let st = subrad_ensemble_sample(params, SUBRAD_KIND_COMMENSURATE, true, 100, 1, &mut ens);
        assert_eq!(st, SubradStatus::Ok);
        assert_eq!(subrad_ensemble_len(ens), 100);
        let mut n_eff = 0.0;
        assert_eq!(subrad_ensemble_effective_atom_number(ens, &mut n_eff), SubradStatus::Ok);
        assert!((n_eff - 100.0).abs() < 1e-9, "{n_eff}");
        let mut i = 0.0;
        assert_eq!(subrad_field_intensity(ens, params, 1e6, 0.0, &mut i), SubradStatus::Ok);
        assert!(i > 0.0);
        subrad_ensemble_free(ens);
        subrad_params_free(params);
    }
}

#[test]
fn spectrum_copy_out() {
    unsafe {
        let params = subrad_params_new();
        let mut spec = ptr::null_mut();
        let st = subrad_sweep_spectrum(params, SUBRAD_KIND_LATTICE, true, 500, 1e6, 3e7, 21, 4, 3, &mut spec);
        assert_eq!(st, SubradStatus::Ok);
        let n = subrad_spectrum_len(spec);
        assert_eq!(n, 21);
        let mut x = vec![0.0; n];
        let mut y = vec![0.0; n];
        assert_eq!(
            subrad_spectrum_copy(spec, x.as_mut_ptr(), y.as_mut_ptr(), ptr::null_mut(), n),
            SubradStatus::Ok
        );
        assert!((x[0] + 3e7).abs() < 1e-3 && (x[20] - 3e7).abs() < 1e-3);
        assert!(y.iter().all(|v| v.is_finite() && *v >= 0.0));
        assert_eq!(
            subrad_spectrum_copy(spec, x.as_mut_ptr(), ptr::null_mut(), ptr::null_mut(), n - 1),
            SubradStatus::InvalidArgument
        );
        subrad_spectrum_free(spec);
        subrad_params_free(params);
    }
}

#[test]
fn errors_are_reported() {
    unsafe {
        let mut out = 0.0;
        assert_eq!(subrad_cg_coefficient(3, 0, &mut out), SubradStatus::InvalidArgument);
        let msg = CStr::from_ptr(subrad_last_error()).to_str().unwrap();
        assert!(msg.contains("m must be"), "{msg}");
        assert_eq!(
            subrad_ensemble_effective_atom_number(ptr::null(), &mut out),
            SubradStatus::NullPointer
        );
        let params = subrad_params_new();
        let mut ens = ptr::null_mut();
        assert_eq!(
            subrad_ensemble_sample(params, 9, false, 10, 1, &mut ens),
            SubradStatus::InvalidArgument
        );
        assert!(ens.is_null());
        assert_eq!(subrad_params_set_coupling_hz(params, -1.0), SubradStatus::InvalidArgument);
        let bad = CString::new(r#"{"scenario": "nope"}"#).unwrap();
        let dir = CString::new("unused").unwrap();
        assert_eq!(subrad_run_config(bad.as_ptr(), dir.as_ptr()), SubradStatus::Config);
        subrad_params_free(params);
    }
}

#[test]
fn cg_and_peak_rate() {
    unsafe {
        let mut c = 0.0;
        assert_eq!(subrad_cg_coefficient(2, 1, &mut c), SubradStatus::Ok);
        assert!((c - 1.0).abs() < 1e-12);
        let params = subrad_params_new();
        let mut coupling = 0.0;
        assert_eq!(subrad_params_set_coupling_hz(params, 2e5), SubradStatus::Ok);
        assert_eq!(subrad_params_coupling_hz(params, &mut coupling), SubradStatus::Ok);
        assert!((coupling - 2e5).abs() < 1e-6);
        let mut rate = 0.0;
        assert_eq!(subrad_predicted_peak_rate_per_uw(params, 0.5, &mut rate), SubradStatus::Ok);
        assert!(rate > 0.0);
        assert_eq!(
            subrad_predicted_peak_rate_per_uw(params, 1.5, &mut rate),
            SubradStatus::InvalidArgument
        );
        subrad_params_free(params);
    }
}

#[test]
fn run_config_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = CString::new(r#"{"scenario": "cg-dump"}"#).unwrap();
    let out = CString::new(dir.path().to_str().unwrap()).unwrap();
    unsafe {
        assert_eq!(subrad_run_config(cfg.as_ptr(), out.as_ptr()), SubradStatus::Ok);
    }
    assert!(dir.path().join("cg_table.csv").exists());
    assert!(dir.path().join("manifest.json").exists());
}

fn header() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include/subrad.h")
}

#[test]
fn header_declares_every_export() {
    let text = std::fs::read_to_string(header()).unwrap();
    let src = include_str!("../src/lib.rs");
    let exports: Vec<&str> = src
        .split("extern \"C\" fn ")
        .skip(1)
        .map(|s| s.split('(').next().unwrap())
        .collect();
    assert!(exports.len() > 15);
    for name in exports {
        assert!(text.contains(&format!("{name}(")), "{name} missing from header");
    }
    assert!(text.contains("typedef struct SubradParams SubradParams;"));
}

#[test]
fn c_program_links_against_static_lib() {
    let cc = ["cc", "gcc", "clang"]
        .into_iter()
        .find(|c| Command::new(c).arg("--version").output().is_ok());
    let Some(cc) = cc else {
        eprintln!("no C compiler found, skipping");
        return;
    };
    let target = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../target/debug");
    let lib = target.join("libsubrad_ffi.a");
    if !lib.exists() {
        eprintln!("{} not built, skipping", lib.display());
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let exe = dir.path().join("smoke");
    let src = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/smoke.c");
    let status = Command::new(cc)
        .arg("-std=c99")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(header().parent().unwrap())
        .arg(&src)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm"])
        .arg("-o")
        .arg(&exe)
        .status()
        .unwrap();
    assert!(status.success());
    let out = Command::new(&exe).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains("ok"));
}
