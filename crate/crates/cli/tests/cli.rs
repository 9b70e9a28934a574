use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

fn glsm(args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_glsm"));
    cmd.args(args).env_remove("GLSM_THREADS").env_remove("GLSM_CACHE_DIR");
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap_or(-1)
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).expect("JSON output")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn validate_quintic() {
    let o = glsm(&["validate", path(&data("quintic.json"))], &[]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(json(&o)["overall"], "pass");
}

#[test]
fn input_errors_exit_2() {
    let o = glsm(&["validate", "/nonexistent/model.json"], &[]);
    assert_eq!(code(&o), 2);
    assert!(!o.stderr.is_empty());
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\"r\": 2,").unwrap();
    assert_eq!(code(&glsm(&["validate", path(&bad)], &[])), 2);
    assert_eq!(code(&glsm(&["ifun", path(&data("p1.json")), "--qbound", "x", "--no-cache"], &[])), 2);
    assert_eq!(code(&glsm(&["ifun", path(&data("p1.json")), "--qbound", "1", "--insert", "t", "--no-cache"], &[])), 2);
    assert_eq!(code(&glsm(&["frobnicate"], &[])), 2);
}

#[test]
fn failing_validation_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let m = dir.path().join("m.json");
    std::fs::write(&m, r#"{"r": 2, "k": 1, "weights": [[1, 1]], "r_charges": [0, 5], "d_w": 1, "theta": ["1"]}"#).unwrap();
    let o = glsm(&["validate", path(&m)], &[]);
    assert_eq!(code(&o), 1);
    assert_eq!(json(&o)["overall"], "fail");
}

#[test]
fn fjrw_cubic_glsm_ifun() {
    let o = glsm(&["glsm-ifun", path(&data("fjrw_cubic.json")), "--qbound", "2", "--torder", "0", "--no-cache"], &[]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(&o);
    let thetas: Vec<&str> = v["terms"].as_array().unwrap().iter().map(|t| t["theta_degree"].as_str().unwrap()).collect();
    assert_eq!(thetas, ["1/3", "2/3", "4/3", "5/3"]);
}

#[test]
fn cache_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("cache");
    let env = [("GLSM_CACHE_DIR", path(&cache))];
    let model = data("quintic.json");
    let args = ["glsm-ifun", path(&model), "--qbound", "2", "--torder", "1", "--insert", "t=rho1"];
    let cold = glsm(&[&args[..], &["--no-cache"]].concat(), &env);
    let first = glsm(&args, &env);
    assert!(std::fs::read_dir(&cache).unwrap().count() > 0);
    let warm = glsm(&args, &env);
    assert_eq!(code(&cold), 0);
    assert_eq!(cold.stdout, first.stdout);
    assert_eq!(cold.stdout, warm.stdout);
}

#[test]
fn threads_do_not_change_output() {
    let model = data("quintic.json");
    let args = ["ifun", path(&model), "--qbound", "3", "--torder", "1", "--insert", "t=rho1", "--no-cache"];
    let outs: Vec<Vec<u8>> = ["1", "2", "8"].iter().map(|n| glsm(&args, &[("GLSM_THREADS", n)]).stdout).collect();
    assert!(!outs[0].is_empty());
    assert!(outs.windows(2).all(|w| w[0] == w[1]));
}

#[test]
fn compare_dz_and_render() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    let o = glsm(&["ifun", path(&data("p1.json")), "--qbound", "2", "--torder", "1", "--insert", "t=rho1", "--no-cache", "--out", path(&a)], &[]);
    assert_eq!(code(&o), 0);
    assert!(o.stdout.is_empty());
    let o = glsm(&["compare", path(&a), path(&a), "--format", "text"], &[]);
    assert_eq!(code(&o), 0);
    assert!(String::from_utf8_lossy(&o.stdout).contains("equal on common truncation"));
    let o = glsm(&["compare", path(&a), path(&a), "--map", r#"{"degree": [["1"]], "t": [0]}"#], &[]);
    assert_eq!(code(&o), 0);
    assert_eq!(json(&o)["equal"], true);

    assert_eq!(code(&glsm(&["dz", path(&a), "--rho", "1", "--out", path(&b)], &[])), 0);
    assert_eq!(code(&glsm(&["compare", path(&a), path(&b)], &[])), 1);
    for m in ["insertion", "multiplication"] {
        let o = glsm(&["dz", path(&a), "--rho", "1", "--method", m], &[]);
        assert_eq!(o.stdout, std::fs::read(&b).unwrap());
    }

    let o = glsm(&["ifun", path(&data("p1.json")), "--qbound", "1", "--no-cache", "--out", path(&a)], &[]);
    assert_eq!(code(&o), 0);
    let o = glsm(&["render-latex", path(&a)], &[]);
    assert_eq!(String::from_utf8(o.stdout).unwrap(), "\\mathbb{1}_{(0)}\n+ q\\,\\left(z^{-2} - 2H z^{-3}\\right)\\,\\mathbb{1}_{(0)}\n");
}

#[test]
fn check_ct_and_twist() {
    let dir = tempfile::tempdir().unwrap();
    let g = dir.path().join("g.json");
    let amb = dir.path().join("amb.json");
    glsm(&["glsm-ifun", path(&data("quintic.json")), "--qbound", "2", "--no-cache", "--out", path(&g)], &[]);
    glsm(&["ifun", path(&data("quintic.json")), "--qbound", "2", "--no-cache", "--out", path(&amb)], &[]);
    let o = glsm(&["check-ct", path(&g)], &[]);
    assert_eq!(code(&o), 0);
    assert_eq!(json(&o)["full_compact_type_membership"], "unverified");
    assert_eq!(code(&glsm(&["check-ct", path(&amb)], &[])), 1);
    let o = glsm(&["twist", path(&g), "--tau", "5"], &[]);
    assert_eq!(code(&o), 0);
    assert_eq!(json(&o)["twist"], serde_json::json!([[5]]));
    // z∂ refuses GLSM series
    assert_eq!(code(&glsm(&["dz", path(&g), "--rho", "1"], &[])), 1);
}

#[test]
fn specializations() {
    for (kind, file) in [("fjrw", "fjrw_cubic.json"), ("hybrid", "hybrid_cubic.json"), ("ci", "ci_quintic.json")] {
        let o = glsm(&["specialize", kind, path(&data(file)), "--qbound", "2", "--torder", "1", "--no-cache"], &[]);
        assert_eq!(code(&o), 0, "{kind}: {}", String::from_utf8_lossy(&o.stderr));
        assert_eq!(json(&o)["kind"], kind);
    }
    let o = glsm(&["specialize", "hybrid", path(&data("fjrw_cubic.json")), "--qbound", "1"], &[]);
    assert_eq!(code(&o), 2);
    let o = glsm(&["specialize", "fjrw", path(&data("fjrw_cubic.json")), "--qbound", "2", "--format", "latex", "--no-cache"], &[]);
    assert!(String::from_utf8_lossy(&o.stdout).contains("\\mathbb{1}_{(\\frac{1}{3})}"));
}

#[test]
fn sectors_and_effective() {
    let o = glsm(&["sectors", path(&data("fjrw_cubic.json"))], &[]);
    assert_eq!(code(&o), 0);
    assert_eq!(json(&o)["sectors"].as_array().unwrap().len(), 3);
    let o = glsm(&["effective", path(&data("p1.json")), "--qbound", "5"], &[]);
    let degrees: Vec<String> = json(&o)["degrees"].as_array().unwrap().iter().map(|d| d["degree"][0].as_str().unwrap().to_string()).collect();
    assert_eq!(degrees, ["0", "1", "2", "3", "4", "5"]);
}
