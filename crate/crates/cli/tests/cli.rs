use std::path::Path;
use std::process::Command;

use serde_json::Value;

fn run(dir: &Path, cmd: &str, config: &str, extra: &[&str]) -> (i32, Value) {
    std::fs::write(dir.join("cfg.json"), config).unwrap();
    let status = Command::new(env!("CARGO_BIN_EXE_wzwlab"))
        .current_dir(dir)
        .args([cmd, "--config", "cfg.json", "--out", "out"])
        .args(extra)
        .status()
        .unwrap();
    let report = std::fs::read_to_string(dir.join("out/report.json")).map(|s| serde_json::from_str(&s).unwrap()).unwrap_or(Value::Null);
    (status.code().unwrap(), report)
}

fn table<'a>(report: &'a Value, name: &str) -> &'a Value {
    report["tables"].as_array().unwrap().iter().find(|t| t["name"] == name).unwrap()
}

fn column(report: &Value, table_name: &str, col: &str) -> Vec<Value> {
    let t = table(report, table_name);
    let i = t["columns"].as_array().unwrap().iter().position(|c| c == col).unwrap();
    t["rows"].as_array().unwrap().iter().map(|r| r[i].clone()).collect()
}

fn nums(v: Vec<Value>) -> Vec<f64> {
    v.into_iter().map(|x| x.as_f64().unwrap()).collect()
}

#[test]
fn measure_w1_within_inverse_k() {
    let dir = tempfile::tempdir().unwrap();
    let (code, rep) = run(dir.path(), "measure", r#"{"degrees": [0, 1], "k_ladder": [1,2,3,4,5,6,7,8,9,10,11,12,13,14,15,16]}"#, &[]);
    assert_eq!(code, 0);
    let k = nums(column(&rep, "convergence", "k"));
    let w = nums(column(&rep, "convergence", "wasserstein1"));
    assert_eq!(k.len(), 16);
    for (k, w) in k.iter().zip(&w) {
        assert!(*w <= 1.0 / k, "k {k}: W1 {w}");
    }
    for f in ["report.json", "convergence.csv", "atoms.csv", "w1_vs_k.dat"] {
        assert!(dir.path().join("out").join(f).exists(), "{f}");
    }
}

#[test]
fn measure_rank_one_is_exact() {
    let dir = tempfile::tempdir().unwrap();
    let (code, rep) = run(dir.path(), "measure", r#"{"degrees": [3], "k_ladder": [1, 2, 4]}"#, &[]);
    assert_eq!(code, 0);
    assert!(nums(column(&rep, "convergence", "wasserstein1")).iter().all(|w| *w == 0.0));
}

#[test]
fn failing_verdict_sets_exit_code() {
    // k·W1 tends to a third of the spread, far above one
    let dir = tempfile::tempdir().unwrap();
    let (code, rep) = run(dir.path(), "measure", r#"{"degrees": [-3, 3], "k_ladder": [1, 2, 4]}"#, &[]);
    assert_eq!(code, 1);
    assert_eq!(rep["passed"], false);
}

#[test]
fn reruns_are_byte_identical() {
    let cfg = r#"{"degrees": [0, 1, 2], "k_ladder": [1, 2, 4]}"#;
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    assert_eq!(run(a.path(), "measure", cfg, &["--seed", "7"]).0, 0);
    assert_eq!(run(b.path(), "measure", cfg, &["--seed", "7"]).0, 0);
    for f in ["report.json", "convergence.csv", "atoms.csv", "w1_vs_k.dat"] {
        let x = std::fs::read(a.path().join("out").join(f)).unwrap();
        let y = std::fs::read(b.path().join("out").join(f)).unwrap();
        assert_eq!(x, y, "{f}");
    }
}

#[test]
fn cohom_limits() {
    let dir = tempfile::tempdir().unwrap();
    for (deg, h0, h1) in [("[1, 0]", 1.0, 0.0), ("[-1, 1]", 0.5, 0.5), ("[-2, -1]", 0.0, 3.0)] {
        let (code, rep) = run(dir.path(), "cohom", &format!(r#"{{"degrees": {deg}}}"#), &[]);
        assert_eq!(code, 0, "{deg}");
        assert!((nums(column(&rep, "cohomology", "hhat0_formula"))[0] - h0).abs() < 1e-9, "{deg}");
        assert!((nums(column(&rep, "cohomology", "hhat1_formula"))[0] - h1).abs() < 1e-9, "{deg}");
    }
    let (_, rep) = run(dir.path(), "cohom", r#"{"degrees": [-2, -1]}"#, &[]);
    assert!(nums(column(&rep, "cohomology", "hhat0")).iter().all(|v| *v == 0.0));
}

#[test]
fn ratio_widths_shrink() {
    let dir = tempfile::tempdir().unwrap();
    let (code, rep) = run(dir.path(), "ratio", r#"{"degrees": [0, 0], "k_ladder": [1], "l_ladder": [2, 4, 8]}"#, &[]);
    assert_eq!(code, 0);
    let w = nums(column(&rep, "ratio", "width"));
    assert!(w[0] > w[1] && w[1] > w[2], "{w:?}");
}

#[test]
fn minimize_product_saturates() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"{"degrees": [0, 0], "k_ladder": [1, 2], "s_ladder": [0, 1], "t_grid": [-1, 0, 0.5], "perturbation": 0}"#;
    let (code, rep) = run(dir.path(), "minimize", cfg, &[]);
    assert_eq!(code, 0);
    for g in nums(column(&rep, "minimize", "gap")) {
        assert!(g.abs() <= 2e-3, "gap {g}");
    }
    assert!(dir.path().join("out/gap_vs_s.dat").exists());
    assert!(rep["asserted"].as_array().unwrap().iter().any(|v| v["name"] == "product_saturation"));
}

#[test]
fn props_pass_and_replay_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"{"instances": 40, "measure_instances": 20, "geometry": false, "max_dim": 4}"#;
    let (code, rep) = run(dir.path(), "props", cfg, &[]);
    assert_eq!(code, 0);
    assert!(rep["suites"].as_array().unwrap().iter().all(|s| s["failures"] == 0));
    let replay = r#"{"instances": 5, "measure_instances": 5, "geometry": false, "max_dim": 4, "replay": {"suite": "ky_fan", "seed": 99}}"#;
    let (_, a) = run(dir.path(), "props", replay, &[]);
    let (_, b) = run(dir.path(), "props", replay, &[]);
    assert_eq!(table(&a, "replay"), table(&b, "replay"));
}

#[test]
fn non_positive_metric_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"{"geometry": false, "instances": 5, "measure_instances": 5,
                  "fixture": {"gram": [[[1, 0], [2, 0]], [[2, 0], [1, 0]]], "weights": [0, 1]}}"#;
    let (code, rep) = run(dir.path(), "props", cfg, &[]);
    assert_eq!(code, 2);
    assert_eq!(rep, Value::Null);
}

#[test]
fn bad_configs_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    for cfg in [r#"{"k_ladder": []}"#, r#"{"s_ladder": [1, 0]}"#, r#"{"unknown": 1}"#, r#"{"degrees": [0, 0, 0], "k_ladder": [300]}"#] {
        assert_eq!(run(dir.path(), "measure", cfg, &[]).0, 2, "{cfg}");
    }
}
