use std::ffi::{CStr, CString};
use std::ptr;

use okdrop_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(okdrop_last_error()) }.to_string_lossy().into_owned()
}

fn params(eps: f64, lambda: f64) -> *mut OkdropParams {
    let mut p = ptr::null_mut();
    assert_eq!(unsafe { okdrop_params_new(eps, lambda, 1.0, &mut p) }, OkdropStatus::Ok);
    assert!(!p.is_null());
    p
}

#[test]
fn version_is_nul_terminated() {
    let v = unsafe { CStr::from_ptr(okdrop_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

#[test]
fn bracket_and_limit_minimizer() {
    let (mut lo, mut hi) = (0.0, 0.0);
    assert_eq!(unsafe { okdrop_lambda_c_bracket(&mut lo, &mut hi) }, OkdropStatus::Ok);
    assert!((lo - 3.0 / (4.0 * 2f64.cbrt())).abs() < 1e-14);
    assert!((hi - 3.0 / (2.0 * 5f64.cbrt())).abs() < 1e-14);
    let mut m = OkdropLimitMinimizer::default();
    let st = unsafe { okdrop_e0_minimizer(2.0, 1.0, std::f64::consts::FRAC_1_SQRT_2, hi, &mut m) };
    assert_eq!(st, OkdropStatus::Ok);
    assert!((m.mbar - (2.0 - hi) / 2.0).abs() < 1e-15);
    assert!((m.e0min - hi * (4.0 - hi)).abs() < 1e-13);
}

#[test]
fn trivial_energies_through_handles() {
    let p = params(0.02, 2.0);
    let mut ubar = 0.0;
    assert_eq!(unsafe { okdrop_params_ubar(p, &mut ubar) }, OkdropStatus::Ok);
    let mut u = ptr::null_mut();
    assert_eq!(unsafe { okdrop_field_constant(8, 1.0, ubar, &mut u) }, OkdropStatus::Ok);
    let mut e = OkdropEnergy::default();
    assert_eq!(unsafe { okdrop_diffuse_energy(u, p, &mut e) }, OkdropStatus::Ok);
    let w = 0.25 * (1.0 - ubar * ubar).powi(2);
    assert!((e.total - w).abs() < 1e-15);
    assert!((e.trivial_reference - w).abs() < 1e-15);

    let mut chi = ptr::null_mut();
    assert_eq!(unsafe { okdrop_field_constant(8, 1.0, 0.0, &mut chi) }, OkdropStatus::Ok);
    assert_eq!(unsafe { okdrop_sharp_energy(chi, p, &mut e) }, OkdropStatus::Ok);
    assert!((e.rescaled - 4.0).abs() < 1e-12);
    unsafe {
        okdrop_field_free(u);
        okdrop_field_free(chi);
        okdrop_params_free(p);
    }
}

#[test]
fn error_codes_and_messages() {
    let mut p = ptr::null_mut();
    assert_eq!(unsafe { okdrop_params_new(-1.0, 2.0, 1.0, &mut p) }, OkdropStatus::InvalidParameter);
    assert!(p.is_null());
    assert!(last_error().contains("epsilon"));

    assert_eq!(unsafe { okdrop_params_new(0.02, 2.0, 1.0, ptr::null_mut()) }, OkdropStatus::NullPointer);
    let mut ubar = 0.0;
    assert_eq!(unsafe { okdrop_params_ubar(ptr::null(), &mut ubar) }, OkdropStatus::NullPointer);

    let vals = [0.0f64; 7];
    let mut f = ptr::null_mut();
    assert_eq!(unsafe { okdrop_field_new(2, 1.0, vals.as_ptr(), 7, &mut f) }, OkdropStatus::InvalidField);

    let p = params(0.02, 2.0);
    let mut u = ptr::null_mut();
    assert_eq!(unsafe { okdrop_field_constant(4, 1.0, 0.0, &mut u) }, OkdropStatus::Ok);
    let mut e = OkdropEnergy::default();
    assert_eq!(unsafe { okdrop_diffuse_energy(u, p, &mut e) }, OkdropStatus::ConstraintViolation);
    let mut chi = ptr::null_mut();
    assert_eq!(unsafe { okdrop_field_constant(4, 1.0, 0.5, &mut chi) }, OkdropStatus::Ok);
    assert_eq!(unsafe { okdrop_sharp_energy(chi, p, &mut e) }, OkdropStatus::NonBinary);
    assert!(!last_error().is_empty());

    let mut small = [0.0; 8];
    assert_eq!(unsafe { okdrop_field_copy_values(u, small.as_mut_ptr(), 8) }, OkdropStatus::BufferTooSmall);
    let mut buf = vec![1.0; 64];
    assert_eq!(unsafe { okdrop_field_copy_values(u, buf.as_mut_ptr(), 64) }, OkdropStatus::Ok);
    assert!(buf.iter().all(|&x| x == 0.0));
    assert!(last_error().is_empty());
    unsafe {
        okdrop_field_free(u);
        okdrop_field_free(chi);
        okdrop_params_free(p);
        okdrop_params_free(ptr::null_mut());
    }
}

#[test]
fn field_round_trip() {
    let vals: Vec<f64> = (0..64).map(|i| i as f64 * 0.1).collect();
    let mut f = ptr::null_mut();
    assert_eq!(unsafe { okdrop_field_new(4, 2.0, vals.as_ptr(), vals.len(), &mut f) }, OkdropStatus::Ok);
    assert_eq!(unsafe { okdrop_field_n(f) }, 4);
    assert_eq!(unsafe { okdrop_field_n(ptr::null()) }, 0);
    let mut out = vec![0.0; 64];
    assert_eq!(unsafe { okdrop_field_copy_values(f, out.as_mut_ptr(), 64) }, OkdropStatus::Ok);
    assert_eq!(out, vals);
    unsafe { okdrop_field_free(f) };
}

#[test]
fn subthreshold_flow_returns_to_constant() {
    let p = params(0.05, 0.3);
    let opts = OkdropFlowOptions { n: 16, dt: 1.0, max_steps: 200, grad_tol: 1e-8, seed: 3, noise_amplitude: 0.01 };
    let mut u = ptr::null_mut();
    let mut e = OkdropEnergy::default();
    let mut converged = false;
    let st = unsafe { okdrop_minimize(p, &opts, &mut u, &mut e, &mut converged) };
    assert_eq!(st, OkdropStatus::Ok, "{}", last_error());
    assert!(converged);
    assert!((e.total - e.trivial_reference).abs() < 1e-12);
    assert_eq!(unsafe { okdrop_field_n(u) }, 16);
    unsafe {
        okdrop_field_free(u);
        okdrop_params_free(p);
    }
}

#[test]
fn run_json_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = format!(r#"{{"command": "e0-report", "output_dir": {:?}}}"#, dir.path().to_str().unwrap());
    let c = CString::new(cfg).unwrap();
    assert_eq!(unsafe { okdrop_run_json(c.as_ptr()) }, OkdropStatus::Ok, "{}", last_error());
    assert!(dir.path().join("report.json").exists());
    let bad = CString::new("{not json").unwrap();
    assert_eq!(unsafe { okdrop_run_json(bad.as_ptr()) }, OkdropStatus::Config);
    assert_eq!(unsafe { okdrop_run_json(ptr::null()) }, OkdropStatus::NullPointer);
}

#[test]
fn header_declares_the_api() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/okdrop.h")).unwrap();
    for name in [
        "okdrop_params_new",
        "okdrop_params_free",
        "okdrop_field_new",
        "okdrop_field_free",
        "okdrop_diffuse_energy",
        "okdrop_sharp_energy",
        "okdrop_minimize",
        "okdrop_run_json",
        "okdrop_last_error",
        "OKDROP_STATUS_OK",
        "typedef struct OkdropField OkdropField",
    ] {
        assert!(header.contains(name), "missing {name}");
    }
}
