use serde_json::Value;
use std::path::Path;
use std::process::{Command, Output};

fn fan_cd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fan-cd")).args(args).output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("json on stdout")
}

fn gen(dir: &Path, family: &str, dim: usize) -> String {
    let path = dir.join(format!("{family}{dim}.json"));
    let out = fan_cd(&["gen", "--family", family, "--dim", &dim.to_string(), "-o", path.to_str().unwrap()]);
    assert!(out.status.success());
    path.to_str().unwrap().to_string()
}

#[test]
fn gen_writes_a_canonical_poset() {
    let dir = tempfile::tempdir().unwrap();
    let path = gen(dir.path(), "cube", 3);
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(v["elements"].as_array().unwrap().len(), 27);
    assert_eq!(v["rank"], 3);
}

#[test]
fn both_methods_agree_on_cube3() {
    let dir = tempfile::tempdir().unwrap();
    let path = gen(dir.path(), "cube", 3);
    let out = fan_cd(&["cd-index", &path, "--method", "both", "--seed", "42"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["agree"], true);
    assert_eq!(v["cd_index"], v["lefschetz_cd_index"]);
    assert_eq!(v["config"]["seed"], 42);
    assert!(v["version"].is_string());
    let words: Vec<(String, i64)> = v["cd_index"]
        .as_array()
        .unwrap()
        .iter()
        .map(|t| (t["word"].as_str().unwrap().to_string(), t["coeff"].as_i64().unwrap()))
        .collect();
    assert_eq!(words, vec![("ccc".into(), 1), ("cd".into(), 4), ("dc".into(), 6)]);
}

#[test]
fn invalid_poset_exits_with_validation_code() {
    let dir = tempfile::tempdir().unwrap();
    let path = gen(dir.path(), "polygon", 4);
    let mut v: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    let covers = v["covers"].as_array_mut().unwrap();
    let last = covers.len() - 1;
    covers.remove(last);
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, serde_json::to_string(&v).unwrap()).unwrap();
    let out = fan_cd(&["cd-index", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(!out.stderr.is_empty());
}

#[test]
fn unknown_family_and_missing_input() {
    assert_eq!(fan_cd(&["gen", "--family", "dodecahedron", "--dim", "3"]).status.code(), Some(1));
    assert_eq!(fan_cd(&["cd-index"]).status.code(), Some(1));
}

#[test]
fn certificates_are_byte_identical() {
    let a = fan_cd(&["lefschetz", "--family", "simplex", "--dim", "3", "--seed", "5", "--mode", "torus"]);
    let b = fan_cd(&["lefschetz", "--family", "simplex", "--dim", "3", "--seed", "5", "--mode", "torus"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let v = json(&a);
    assert_eq!(v["mode"], "torus");
    assert!(v["steps"].as_array().unwrap().iter().all(|s| s["hilbert_identity"] == true));
}

#[test]
fn empty_lab() {
    let out = fan_cd(&["lab", "--family", "polygon", "--dim", "4", "--trials", "0"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(String::from_utf8(out.stdout).unwrap().trim(), r#"{"trials":0}"#);
}

#[test]
fn lab_defaults_to_multiplication() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("lab.json");
    let out = fan_cd(&["lab", "--family", "polygon", "--dim", "5", "--trials", "3", "--json", report.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(v["mode"], "multiplication");
    assert_eq!(v["successes"], 3);
}

#[test]
fn verify_and_tsv() {
    let out = fan_cd(&["verify", "--family", "polygon", "--dim", "5"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["passed"], true);
    let tsv = fan_cd(&["cd-index", "--family", "polygon", "--dim", "5", "--tsv"]);
    assert_eq!(String::from_utf8(tsv.stdout).unwrap(), "cc\t1\nd\t3\n");
}
