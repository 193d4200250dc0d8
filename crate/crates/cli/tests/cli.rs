use std::path::Path;
use std::process::{Command, Output};

fn spc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spc")).args(args).output().unwrap()
}

fn stdout_json(out: &Output) -> serde_json::Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn write(path: &Path, text: &str) {
    std::fs::write(path, text).unwrap();
}

const CONFIG: &str = r#"{
  "model": {"kind": "poisson_gamma", "shape": 0.1, "rate": 0.2},
  "truths": [{"label": "null", "spec": {"family": "poisson", "rate": 2.0}}],
  "statistics": ["mean"],
  "methods": [{"method": "ppc"}, {"method": "single_spc"}, {"method": "divided_spc", "k": 4}],
  "n_grid": [40],
  "replications": 50,
  "master_seed": 9
}"#;

#[test]
fn simulate_writes_all_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    write(&cfg, CONFIG);
    let out = dir.path().join("run");
    let res = spc(&["simulate", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));

    let report = std::fs::read_to_string(out.join("report.csv")).unwrap();
    let mut lines = report.lines();
    assert_eq!(lines.next(), Some("method,statistic,N,q,k,alpha,estimate,ci_low,ci_high,reps,seed"));
    assert_eq!(lines.count(), 3);
    let pvalues = std::fs::read_to_string(out.join("pvalues.csv")).unwrap();
    assert!(pvalues.starts_with("cell_id,replication,p,p_two_sided\n"));
    assert_eq!(pvalues.lines().count(), 1 + 3 * 50);
    let qq = std::fs::read_to_string(out.join("qq.csv")).unwrap();
    assert!(qq.starts_with("cell_id,u,p_sorted\n"));
    let run: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("run.json")).unwrap()).unwrap();
    assert_eq!(run["config"]["master_seed"], 9);
    assert_eq!(run["config"]["alpha"], 0.05);
}

#[test]
fn simulate_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    write(&cfg, CONFIG);
    let mut reports = Vec::new();
    for name in ["a", "b"] {
        let out = dir.path().join(name);
        assert!(spc(&["simulate", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]).status.success());
        reports.push(std::fs::read(out.join("pvalues.csv")).unwrap());
    }
    assert_eq!(reports[0], reports[1]);
}

#[test]
fn simulate_rejects_unknown_fields() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    write(&cfg, &CONFIG.replace("\"master_seed\"", "\"replicates\": 3, \"master_seed\""));
    let res = spc(&["simulate", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert!(!res.status.success());
    assert!(String::from_utf8_lossy(&res.stderr).contains("replicates"));
}

#[test]
fn check_prints_a_result() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d.csv");
    let rows: String = (0..60).map(|i| format!("{}\n", i % 5)).collect();
    write(&data, &format!("value\n{rows}"));
    let args = |method: &str| {
        vec![
            "check".to_string(),
            "--data".into(),
            data.to_str().unwrap().into(),
            "--model".into(),
            "poisson_gamma:0.1,0.2".into(),
            "--statistic".into(),
            "mean".into(),
            "--method".into(),
            method.into(),
            "--seed".into(),
            "4".into(),
            "--mc".into(),
            "200".into(),
        ]
    };
    for method in ["ppc", "single_spc", "divided_spc"] {
        let a = args(method);
        let json = stdout_json(&spc(&a.iter().map(String::as_str).collect::<Vec<_>>()));
        let p = json["p"]["value"].as_f64().unwrap();
        assert!((0.0..=1.0).contains(&p), "{method}: {p}");
        assert_eq!(json["method"], method);
    }
    let mut a = args("divided_spc");
    a.extend(["--k".into(), "3".into()]);
    let json = stdout_json(&spc(&a.iter().map(String::as_str).collect::<Vec<_>>()));
    assert_eq!(json["fold_pvalues"].as_array().unwrap().len(), 3);

    a.extend(["--beta".into(), "0.5".into()]);
    assert!(!spc(&a.iter().map(String::as_str).collect::<Vec<_>>()).status.success());
}

#[test]
fn check_reports_schema_errors() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d.csv");
    write(&data, "x\n1\n2\n");
    let res = spc(&[
        "check",
        "--data",
        data.to_str().unwrap(),
        "--model",
        "normal_improper",
        "--statistic",
        "mean",
        "--method",
        "ppc",
    ]);
    assert!(!res.status.success());
    assert!(String::from_utf8_lossy(&res.stderr).contains("value"));
}

#[test]
fn theory_matches_closed_form() {
    let json = stdout_json(&spc(&["theory", "--scenario", "negbin:0.01", "--alpha", "0.05"]));
    assert!((json["rho_squared"].as_f64().unwrap() - 201.0).abs() < 1e-9);
    assert!((json["two_sided"].as_f64().unwrap() - 0.8900466332936794).abs() < 1e-9);
    let json = stdout_json(&spc(&["theory", "--scenario", "binomial:0.5", "--alpha", "0.05", "--q", "0.3"]));
    assert!((json["rho_squared"].as_f64().unwrap() - 0.5).abs() < 1e-12);
    assert_eq!(json["q"], 0.3);
    assert!(!spc(&["theory", "--scenario", "negbin:0.01", "--alpha", "1.5"]).status.success());
}
