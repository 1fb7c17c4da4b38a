use serde_json::Value;
use std::path::Path;
use std::process::{Command, Output};

const STEP_PAIR: &str = r#""problems": {
    "a": {"q": "1", "beta": 2},
    "b": {"q": [{"lo": 0, "hi": 2.356194490192345, "expr": "2"},
                {"lo": 2.356194490192345, "hi": 3.141592653589793, "expr": "1"}], "beta": 2},
    "free": {"q": "0"}
}"#;

fn run(dir: &Path, sub: &str, config: &str, extra: &[&str]) -> Output {
    let path = dir.join(format!("{sub}.json"));
    std::fs::write(&path, config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_sturmdisc"))
        .arg(sub)
        .arg("--config")
        .arg(&path)
        .args(extra)
        .env("STURMDISC_THREADS", "2")
        .output()
        .unwrap()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("{e}: {}\n{}", String::from_utf8_lossy(&out.stdout), String::from_utf8_lossy(&out.stderr))
    })
}

fn config(params: &str) -> String {
    format!("{{{STEP_PAIR}, \"params\": {params}}}")
}

#[test]
fn free_spectrum_is_the_squares() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), "spectrum", &config(r#"{"problem": "free", "bound": 100}"#), &[]);
    assert!(out.status.success());
    let doc = json(&out);
    assert_eq!(doc["status"], "ok");
    assert_eq!(doc["config"]["params"]["which"], "b");
    let eig = doc["result"]["eigenvalues"].as_array().unwrap();
    assert_eq!(eig.len(), 10);
    for (n, e) in eig.iter().enumerate() {
        assert!((e["re"].as_f64().unwrap() - (n * n) as f64).abs() < 1e-8, "{e}");
        assert!(e["im"].as_f64().unwrap().abs() < 1e-8);
        assert_eq!(e["multiplicity"], 1);
    }
}

#[test]
fn free_norming_signs_alternate() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), "norming", &config(r#"{"problem": "free", "bound": 40}"#), &[]);
    assert!(out.status.success());
    let doc = json(&out);
    let consts = doc["result"]["constants"].as_array().unwrap();
    assert_eq!(consts.len(), 7);
    for (n, c) in consts.iter().enumerate() {
        let kappa = c["kappas"][0]["re"].as_f64().unwrap();
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        assert!((kappa - sign).abs() < 1e-8, "{n}: {kappa}");
        let alpha = c["alphas"][0]["re"].as_f64().unwrap();
        let expected = if n == 0 { std::f64::consts::PI } else { std::f64::consts::FRAC_PI_2 };
        assert!((alpha - expected).abs() < 1e-8, "{n}: {alpha}");
    }
}

#[test]
fn identical_pair_has_no_bracket_gap() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), "uniq", &config(r#"{"probe": "brackets", "pair": ["a", "a"], "b": 2.0, "m": -1}"#), &[]);
    assert!(out.status.success());
    let doc = json(&out);
    assert_eq!(doc["result"]["discrepancy"].as_f64(), Some(0.0));
    assert_eq!(doc["pass"], true);
}

#[test]
fn step_pair_brackets_agree() {
    let dir = tempfile::tempdir().unwrap();
    let params = r#"{"probe": "brackets", "pair": ["a", "b"], "b": 2.356194490192345, "m": -1}"#;
    let out = run(dir.path(), "uniq", &config(params), &[]);
    assert!(out.status.success());
    assert!(json(&out)["result"]["discrepancy"].as_f64().unwrap() < 1e-10);
}

#[test]
fn failed_property_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let params = r#"{"probe": "brackets", "pair": ["a", "b"], "b": 2.356194490192345, "m": -1, "tolerance": 1e-30}"#;
    let out = run(dir.path(), "uniq", &config(params), &[]);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(json(&out)["status"], "property-failed");
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(r#"{"problem": "a", "lambdas": [1, [2, 1], [-3, 0.5]], "derivatives": 2, "partner": "b"}"#);
    let first = run(dir.path(), "charfn", &cfg, &[]);
    let second = run(dir.path(), "charfn", &cfg, &[]);
    assert!(first.status.success());
    assert_eq!(first.stdout, second.stdout);
}

#[test]
fn validation_errors_name_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), "spectrum", &config(r#"{"problem": "free", "bound": "many"}"#), &[]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("params.bound"));
    assert_eq!(json(&out)["status"], "failed");

    let out = run(dir.path(), "spectrum", &config(r#"{"problem": "nowhere", "bound": 10}"#), &[]);
    assert_eq!(out.status.code(), Some(1));

    let bad_expr = r#"{"problems": {"p": {"q": "sin(x"}}, "params": {"problem": "p", "bound": 10}}"#;
    let out = run(dir.path(), "spectrum", bad_expr, &[]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("problems.p"));
}

#[test]
fn command_mismatch_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = format!("{{{STEP_PAIR}, \"command\": \"norming\", \"params\": {{\"problem\": \"a\", \"bound\": 10}}}}");
    let out = run(dir.path(), "spectrum", &cfg, &[]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn csv_output_to_file() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("g.csv");
    let out = run(dir.path(), "growth", &config(r#"{"problem": "a"}"#), &["--out", target.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(&target).unwrap();
    let mut lines = text.lines().skip_while(|l| l.starts_with('#'));
    assert_eq!(lines.next(), Some("y,log_abs_f,model_prediction"));
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|c| c.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 9);
    assert!(rows.iter().all(|r| r.len() == 3 && (r[1] - r[2]).abs() < 0.1));
}

#[test]
fn step_pair_decay_orders_pass() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), "asympt", &config(r#"{"pair": ["a", "b"], "x0": 2.356194490192345, "m": -1}"#), &[]);
    assert!(out.status.success());
    let doc = json(&out);
    assert_eq!(doc["result"]["fits"].as_array().unwrap().len(), 4);
    assert_eq!(doc["pass"], true);
}

#[test]
fn charfn_csv_matches_free_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), "charfn", &config(r#"{"problem": "free", "lambdas": [2.25, [0, 3]]}"#), &["--format", "csv"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines().skip_while(|l| l.starts_with('#'));
    let header = lines.next().unwrap();
    assert!(header.starts_with("lambda_re,lambda_im,delta_re,delta_im,delta_inf_re,delta_inf_im"));
    for line in lines {
        let v: Vec<f64> = line.split(',').map(|c| c.parse().unwrap()).collect();
        let lambda = num_complex::Complex64::new(v[0], v[1]);
        let k = lambda.sqrt();
        let delta = -k * (k * std::f64::consts::PI).sin();
        let delta_inf = -(k * std::f64::consts::PI).cos();
        assert!((num_complex::Complex64::new(v[2], v[3]) - delta).norm() < 1e-8 * delta.norm().max(1.0));
        assert!((num_complex::Complex64::new(v[4], v[5]) - delta_inf).norm() < 1e-8 * delta_inf.norm().max(1.0));
    }
}
