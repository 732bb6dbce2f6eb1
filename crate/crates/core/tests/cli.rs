use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use bundleforge::fixtures;
use bundleforge::io::{ConcreteBundleDoc, TpaDoc};
use serde_json::Value;
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_bundleforge"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn json_of(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

fn write(dir: &TempDir, name: &str, value: &impl serde::Serialize) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, serde_json::to_string_pretty(value).unwrap()).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn tpa_validate_exit_codes() {
    let dir = TempDir::new().unwrap();
    let good = write(&dir, "pauli.json", &TpaDoc::from_action(&fixtures::pauli_action(), None));
    let bad = write(&dir, "pauli-broken.json", &TpaDoc::from_action(&fixtures::pauli_action_broken(), None));
    let junk = dir.path().join("junk.json");
    std::fs::write(&junk, "{\"group\": ").unwrap();

    assert_eq!(run(&["tpa-validate", s(&good)]).status.code(), Some(0));
    let out = run(&["tpa-validate", s(&bad), "--report", "json"]);
    assert_eq!(out.status.code(), Some(1));
    let report = json_of(&out);
    assert_eq!(report["reports"]["tpa"]["e"]["pass"], Value::Bool(false));
    assert_eq!(run(&["tpa-validate", s(&junk)]).status.code(), Some(2));
    assert_eq!(run(&["tpa-validate", "/no/such/file.json"]).status.code(), Some(2));
}

#[test]
fn shape_errors_are_input_errors() {
    let dir = TempDir::new().unwrap();
    let mut doc = serde_json::to_value(TpaDoc::from_action(&fixtures::pauli_action(), None)).unwrap();
    doc["isos"]["1"]["unitaries"]["0"] = serde_json::json!([[[1.0, 0.0]]]);
    let p = write(&dir, "shape.json", &doc);
    assert_eq!(run(&["tpa-validate", s(&p)]).status.code(), Some(2));
    assert_eq!(run(&["tpa-validate", s(&p), "--tol", "-1"]).status.code(), Some(2));
    assert_eq!(run(&["tpa-validate", s(&p), "--max-order", "2"]).status.code(), Some(2));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn generate_then_validate() {
    let dir = TempDir::new().unwrap();
    for (name, args) in [
        ("c3.json", vec!["--group", "cyclic:3", "--sizes", "1,1,1"]),
        ("k4.json", vec!["--group", "klein4", "--sizes", "2"]),
        ("triv.json", vec!["--group", "cyclic:1"]),
    ] {
        let path = dir.path().join(name);
        let mut cmd = vec!["generate", "--out", s(&path)];
        cmd.extend(args);
        assert_eq!(run(&cmd).status.code(), Some(0), "{name}");
        assert_eq!(run(&["tpa-validate", s(&path)]).status.code(), Some(0), "{name}");
        let doc: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
        assert!(doc.get("witness").is_some());
    }
    assert_eq!(run(&["generate", "--group", "cyclic:3", "--sizes", "0"]).status.code(), Some(2));
    assert_eq!(run(&["generate", "--group", "dihedral:5"]).status.code(), Some(2));
    assert_eq!(run(&["generate", "--sizes", "1,x"]).status.code(), Some(2));
}

#[test]
fn build_and_check_bundles() {
    let dir = TempDir::new().unwrap();
    let gen = dir.path().join("gen.json");
    assert!(run(&["generate", "--group", "s3", "--sizes", "1,2", "--fraction", "0.5", "--seed", "9", "--out", s(&gen)])
        .status
        .success());

    let abstract_out = dir.path().join("abstract.json");
    assert_eq!(run(&["build-bundle", s(&gen), "--out", s(&abstract_out)]).status.code(), Some(0));
    let doc: Value = serde_json::from_str(&std::fs::read_to_string(&abstract_out).unwrap()).unwrap();
    assert_eq!(doc["kind"], "semidirect");
    assert_eq!(doc["ideals"].as_object().unwrap().len(), 6);
    assert_eq!(run(&["bundle-check", s(&abstract_out)]).status.code(), Some(0));

    let concrete = dir.path().join("concrete.json");
    assert_eq!(run(&["build-bundle", s(&gen), "--witness", s(&gen), "--out", s(&concrete)]).status.code(), Some(0));
    assert_eq!(run(&["bundle-check", s(&concrete)]).status.code(), Some(0));
    assert_eq!(run(&["classify", s(&concrete)]).status.code(), Some(0));

    let noisy = fixtures::perturb_fiber(&fixtures::scalar_pauli_bundle(), 1, 0, 1e-2, 0);
    let noisy = write(&dir, "noisy.json", &ConcreteBundleDoc::from_bundle(&noisy));
    let out = run(&["bundle-check", s(&noisy), "--report", "json"]);
    assert_eq!(out.status.code(), Some(1));
    let report = json_of(&out);
    let bundle = &report["reports"]["bundle"];
    assert!(bundle["i"]["pass"] == false || bundle["vii"]["pass"] == false);
}

#[test]
fn trivial_group_bundle_classifies() {
    let dir = TempDir::new().unwrap();
    let gen = dir.path().join("t.json");
    assert!(run(&["generate", "--group", "trivial", "--sizes", "1,2", "--out", s(&gen)]).status.success());
    let b = dir.path().join("b.json");
    assert!(run(&["build-bundle", s(&gen), "--witness", s(&gen), "--out", s(&b)]).status.success());
    let out = run(&["classify", s(&b), "--report", "json"]);
    assert_eq!(out.status.code(), Some(0));
    let report = json_of(&out);
    assert_eq!(report["result"]["frame"]["sizes"], serde_json::json!([1, 2]));
}

#[test]
fn rectangular_fiber_is_reported_with_certificate() {
    let dir = TempDir::new().unwrap();
    let p = write(&dir, "rect.json", &ConcreteBundleDoc::from_bundle(&fixtures::rectangular_fiber_bundle()));
    let out = run(&["classify", s(&p), "--report", "json"]);
    assert_eq!(out.status.code(), Some(1));
    let report = json_of(&out);
    assert_eq!(report["error"]["kind"], "non-regular-fiber");
    assert_eq!(report["error"]["fiber"], 1);
    assert_eq!(report["error"]["certificate"]["range_dim"], 2);
    assert_eq!(report["error"]["certificate"]["source_dim"], 3);
}

#[test]
fn roundtrip_report_is_deterministic_and_text_matches() {
    let out = run(&["roundtrip", "--group", "klein4", "--sizes", "2", "--report", "json"]);
    assert_eq!(out.status.code(), Some(0));
    let report = json_of(&out);
    assert!(report["max_residual"].as_f64().unwrap() < 1e-7);
    assert_eq!(report["config"]["seed"], 0);
    assert_eq!(report["tool"], "bundleforge");
    let again = bin()
        .args(["roundtrip", "--group", "klein4", "--sizes", "2", "--report", "json"])
        .env("BUNDLEFORGE_THREADS", "1")
        .output()
        .unwrap();
    assert_eq!(out.stdout, again.stdout);

    let text = String::from_utf8(run(&["roundtrip", "--group", "klein4", "--sizes", "2"]).stdout).unwrap();
    for name in report["reports"].as_object().unwrap().keys() {
        assert!(text.contains(&format!("== {name} ==")));
    }
    assert!(text.trim_end().ends_with("RESULT: PASS"));
}

#[test]
fn roundtrip_needs_a_witness() {
    let dir = TempDir::new().unwrap();
    let p = write(&dir, "pauli.json", &TpaDoc::from_action(&fixtures::pauli_action(), None));
    assert_eq!(run(&["roundtrip", s(&p)]).status.code(), Some(2));
}

#[test]
fn bad_thread_setting() {
    let out = bin().args(["generate"]).env("BUNDLEFORGE_THREADS", "0").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}
