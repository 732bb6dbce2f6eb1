use std::ffi::{c_char, CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use bundleforge::fixtures;
use bundleforge::io::{ConcreteBundleDoc, TpaDoc};
use bundleforge_ffi::*;

fn cstr(s: &str) -> CString {
    CString::new(s).unwrap()
}

unsafe fn take(s: *mut c_char) -> String {
    let out = CStr::from_ptr(s).to_str().unwrap().to_owned();
    bf_string_free(s);
    out
}

unsafe fn last_error() -> String {
    let p = bf_last_error();
    assert!(!p.is_null());
    CStr::from_ptr(p).to_str().unwrap().to_owned()
}

#[test]
fn pauli_document_validates_and_broken_one_fails() {
    let cfg = bf_config_default();
    unsafe {
        for (tpa, want) in [(fixtures::pauli_action(), BfStatus::Ok), (fixtures::pauli_action_broken(), BfStatus::AxiomFailure)] {
            let json = cstr(&serde_json::to_string(&TpaDoc::from_action(&tpa, None)).unwrap());
            let mut h = ptr::null_mut();
            assert_eq!(bf_tpa_from_json(json.as_ptr(), cfg, &mut h), BfStatus::Ok);
            let mut report = ptr::null_mut();
            assert_eq!(bf_tpa_validate(h, &mut report), want);
            let report: serde_json::Value = serde_json::from_str(&take(report)).unwrap();
            assert_eq!(report["e"]["pass"], serde_json::Value::Bool(want == BfStatus::Ok));
            bf_tpa_free(h);
        }
    }
}

#[test]
fn generate_represent_classify() {
    let mut cfg = bf_config_default();
    cfg.seed = 7;
    let group = cstr("cyclic:3");
    let sizes = [1usize, 1, 1];
    unsafe {
        let mut tpa = ptr::null_mut();
        assert_eq!(bf_tpa_generate(group.as_ptr(), sizes.as_ptr(), 3, 0.34, cfg, &mut tpa), BfStatus::Ok);
        let mut bundle = ptr::null_mut();
        assert_eq!(bf_bundle_represent(tpa, &mut bundle), BfStatus::Ok);
        assert_eq!(bf_bundle_check(bundle, cfg, ptr::null_mut()), BfStatus::Ok);

        let mut json = ptr::null_mut();
        assert_eq!(bf_bundle_to_json(bundle, &mut json), BfStatus::Ok);
        let json = cstr(&take(json));
        let mut again = ptr::null_mut();
        assert_eq!(bf_bundle_from_json(json.as_ptr(), cfg, &mut again), BfStatus::Ok);

        let mut cls = ptr::null_mut();
        assert_eq!(bf_classify(again, cfg, &mut cls), BfStatus::Ok);
        let mut r = f64::NAN;
        assert_eq!(bf_classification_max_residual(cls, &mut r), BfStatus::Ok);
        assert!(r < 1e-8, "{r}");
        let mut doc = ptr::null_mut();
        assert_eq!(bf_classification_to_json(cls, &mut doc), BfStatus::Ok);
        let doc: serde_json::Value = serde_json::from_str(&take(doc)).unwrap();
        assert_eq!(doc["frame"]["sizes"].as_array().unwrap().len(), 1);

        bf_classification_free(cls);
        bf_bundle_free(again);
        bf_bundle_free(bundle);
        bf_tpa_free(tpa);
    }
}

#[test]
fn rectangular_fiber_is_a_math_error() {
    let doc = ConcreteBundleDoc::from_bundle(&fixtures::rectangular_fiber_bundle());
    let json = cstr(&serde_json::to_string(&doc).unwrap());
    unsafe {
        let mut b = ptr::null_mut();
        assert_eq!(bf_bundle_from_json(json.as_ptr(), bf_config_default(), &mut b), BfStatus::Ok);
        let mut cls = ptr::null_mut();
        assert_eq!(bf_classify(b, bf_config_default(), &mut cls), BfStatus::MathError);
        assert!(cls.is_null());
        assert!(last_error().contains("fiber over 1"), "{}", last_error());
        bf_bundle_free(b);
    }
}

#[test]
fn bad_arguments() {
    let cfg = bf_config_default();
    unsafe {
        let mut h = ptr::null_mut();
        assert_eq!(bf_tpa_from_json(ptr::null(), cfg, &mut h), BfStatus::NullPointer);
        let junk = cstr("[1, 2");
        assert_eq!(bf_tpa_from_json(junk.as_ptr(), cfg, &mut h), BfStatus::InputError);
        let group = cstr("cyclic:0");
        assert_eq!(bf_tpa_generate(group.as_ptr(), ptr::null(), 0, 1.0, cfg, &mut h), BfStatus::InputError);
        let mut bad = cfg;
        bad.eps_eq = -1.0;
        let group = cstr("klein4");
        let sizes = [2usize];
        assert_eq!(bf_tpa_generate(group.as_ptr(), sizes.as_ptr(), 1, 1.0, bad, &mut h), BfStatus::InputError);
        assert!(h.is_null());
        assert_eq!(bf_bundle_check(ptr::null(), cfg, ptr::null_mut()), BfStatus::NullPointer);
        bf_tpa_free(ptr::null_mut());
        bf_string_free(ptr::null_mut());
    }
    assert_eq!(unsafe { CStr::from_ptr(bf_version()) }.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn tpa_without_witness_cannot_be_represented() {
    let json = cstr(&serde_json::to_string(&TpaDoc::from_action(&fixtures::pauli_action(), None)).unwrap());
    unsafe {
        let mut h = ptr::null_mut();
        assert_eq!(bf_tpa_from_json(json.as_ptr(), bf_config_default(), &mut h), BfStatus::Ok);
        let mut b = ptr::null_mut();
        assert_eq!(bf_bundle_represent(h, &mut b), BfStatus::InputError);
        assert!(last_error().contains("witness"));
        bf_tpa_free(h);
    }
}

fn target_dir() -> PathBuf {
    // tests/ binaries live in <target>/<profile>/deps
    let exe = std::env::current_exe().unwrap();
    exe.parent().unwrap().parent().unwrap().to_path_buf()
}

#[test]
fn c_program_links_against_the_header() {
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let lib = target_dir().join("libbundleforge_ffi.a");
    if !lib.exists() {
        panic!("static library not found at {}", lib.display());
    }
    let out = std::env::temp_dir().join(format!("bundleforge_smoke_{}", std::process::id()));
    let status = Command::new("cc")
        .arg(manifest.join("tests/c/smoke.c"))
        .arg("-I")
        .arg(manifest.join("include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&out)
        .status()
        .expect("cc runs");
    assert!(status.success());
    let run = Command::new(&out).output().unwrap();
    let _ = std::fs::remove_file(&out);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    assert!(String::from_utf8_lossy(&run.stdout).starts_with("ok "));
}
