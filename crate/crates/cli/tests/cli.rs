use std::path::Path;
use std::process::{Command, Output};

fn tailasym(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tailasym")).args(args).output().expect("spawn tailasym")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn cauchy_sample(dir: &Path, n: usize) -> std::path::PathBuf {
    let out = dir.join("cc.csv");
    let o = tailasym(&["sample", "--model", "clayton-cauchy:theta=5", "--n", &n.to_string(), "--seed", "11", "--out", p(&out)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    out
}

#[test]
fn sample_is_reproducible_and_has_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for out in [&a, &b] {
        let o = tailasym(&["sample", "--model", "gumbel:theta=2", "--n", "300", "--seed", "42", "--out", p(out)]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
    }
    let text = std::fs::read_to_string(&a).unwrap();
    assert_eq!(text, std::fs::read_to_string(&b).unwrap());
    assert!(text.starts_with("u1,u2\n"));
    assert_eq!(text.lines().count(), 301);
    let side: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("a.csv.json")).unwrap()).unwrap();
    assert_eq!(side["family"], "gumbel");
    assert_eq!(side["params"]["theta"], 2.0);
    assert_eq!(side["n"], 300);
    assert_eq!(side["master_seed"], 42);
    assert_eq!(side["stream_id"], 0);
}

#[test]
fn sample_requires_seed() {
    let dir = tempfile::tempdir().unwrap();
    let o = tailasym(&["sample", "--model", "frank:theta=2", "--n", "10", "--out", p(&dir.path().join("x.csv"))]);
    assert_eq!(code(&o), 2);
}

#[test]
fn measure_writes_curve_schema() {
    let o = tailasym(&["measure", "--model", "clayton:theta=1", "--u-grid", "0.25:0.5:0.25"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = String::from_utf8(o.stdout).unwrap();
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows[0], "u,value,kind,param_json");
    let v: f64 = rows[1].split(',').nth(1).unwrap().parse().unwrap();
    assert!((v - 0.7f64.ln()).abs() < 1e-12);
    assert!(rows[2].starts_with("0.5,0.0,alpha,"));
}

#[test]
fn measure_summary_reports_limit() {
    let o = tailasym(&["measure", "--model", "amh:theta=0.7", "--summary"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let limit: f64 = v["alpha_limit"].as_str().unwrap().parse().unwrap();
    assert!((limit - 0.51f64.ln()).abs() < 1e-12);
    assert_eq!(v["tail"]["kappa_lower"], 2.0);
}

#[test]
fn estimate_known_margin_and_bootstrap() {
    let dir = tempfile::tempdir().unwrap();
    let data = cauchy_sample(dir.path(), 2000);
    let o = tailasym(&["estimate", "--input", p(&data), "--margin", "cauchy(0,1)", "--u-grid", "0.1:0.5:0.1"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.starts_with("u,alpha_hat,lower,upper,t_lower,t_upper,flags\n"));
    assert_eq!(text.lines().count(), 6);

    let args = ["estimate", "--input", p(&data), "--method", "bootstrap", "--resamples", "49", "--seed", "3"];
    let a = tailasym(&args);
    let b = tailasym(&args);
    assert_eq!(code(&a), 0, "{}", stderr(&a));
    assert_eq!(a.stdout, b.stdout);

    let o = tailasym(&["estimate", "--input", p(&data), "--method", "bootstrap"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("--seed"));
}

#[test]
fn data_errors_exit_3_with_line_numbers() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "x,y\r\n1,2\r\n3,abc\r\n").unwrap();
    let o = tailasym(&["estimate", "--input", p(&bad)]);
    assert_eq!(code(&o), 3);
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));

    let o = tailasym(&["estimate", "--input", p(&dir.path().join("missing.csv"))]);
    assert_eq!(code(&o), 3);

    let unif = dir.path().join("u.csv");
    std::fs::write(&unif, "0.2,0.3\n1.5,0.1\n").unwrap();
    let o = tailasym(&["estimate", "--input", p(&unif), "--scale", "uniform"]);
    assert_eq!(code(&o), 3);
}

#[test]
fn domain_and_usage_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let data = cauchy_sample(dir.path(), 100);
    let o = tailasym(&["estimate", "--input", p(&data), "--margin", "student_t(0,0,1)"]);
    assert_eq!(code(&o), 2);
    let o = tailasym(&["measure", "--model", "amh:theta=1.5"]);
    assert_eq!(code(&o), 2);
    let o = tailasym(&["measure", "--model", "clayton:theta=1", "--u-grid", "0.3:0.7:0.1"]);
    assert_eq!(code(&o), 2);
    let o = tailasym(&["measure", "--model", "frank:theta=1", "--beta", "0.5"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn inadmissible_test_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("few.csv");
    std::fs::write(&f, "0.3,0.4\n0.6,0.7\n0.45,0.55\n").unwrap();
    let o = tailasym(&["test", "--input", p(&f), "--scale", "uniform", "--u-points", "0.05,0.1"]);
    assert_eq!(code(&o), 4, "{}", stderr(&o));
}

#[test]
fn test_against_null_curve() {
    let dir = tempfile::tempdir().unwrap();
    let data = cauchy_sample(dir.path(), 5000);
    let curve = dir.path().join("null.csv");
    let o = tailasym(&["measure", "--model", "clayton:theta=5", "--u-grid", "0.01:0.5:0.01", "--out", p(&curve)]);
    assert_eq!(code(&o), 0);
    let o = tailasym(&[
        "test", "--input", p(&data), "--margin", "cauchy(0,1)", "--u-points", "0.1,0.2,0.3", "--null", p(&curve),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let r: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(r["dof"], 3);
    let nulls = r["null_values"].as_array().unwrap();
    assert!(nulls.iter().all(|v| v.as_f64().unwrap() < 0.0));

    let o = tailasym(&["test", "--input", p(&data), "--margin", "cauchy(0,1)"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let r: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(r["dof"], 11);
    assert_eq!(r["reject"], true);
}

#[test]
fn simulate_is_independent_of_threading() {
    let dir = tempfile::tempdir().unwrap();
    let scen = dir.path().join("s.json");
    std::fs::write(
        &scen,
        r#"{"model":"clayton-cauchy:theta=3","n":300,"replications":8,"methods":["asymptotic","bootstrap"],"resamples":19,"master_seed":9}"#,
    )
    .unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let o = tailasym(&["simulate", "--scenario", p(&scen), "--out", p(&a)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let o = tailasym(&["simulate", "--scenario", p(&scen), "--out", p(&b), "--sequential"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    for f in ["report.json", "coverage.csv", "quartet.csv"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }
    assert!(a.join("runtime.json").exists());
}

#[test]
fn simulate_rejects_bad_scenarios() {
    let dir = tempfile::tempdir().unwrap();
    let scen = dir.path().join("s.json");
    std::fs::write(&scen, r#"{"model":"frank:theta=2","replications":0,"master_seed":1}"#).unwrap();
    let o = tailasym(&["simulate", "--scenario", p(&scen), "--out", p(dir.path())]);
    assert_eq!(code(&o), 2);
    std::fs::write(&scen, r#"{"model":"frank:theta=2","master_seed":1,"colour":"red"}"#).unwrap();
    let o = tailasym(&["simulate", "--scenario", p(&scen), "--out", p(dir.path())]);
    assert_eq!(code(&o), 2);
    let o = tailasym(&["simulate", "--preset", "large", "--model", "frank:theta=2", "--out", p(dir.path())]);
    assert_eq!(code(&o), 2);
}

#[test]
fn analyze_manifest_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let data = cauchy_sample(dir.path(), 1500);
    let cfg = dir.path().join("cfg.json");
    let body = serde_json::json!({
        "input": data,
        "scale": "raw",
        "methods": ["asymptotic", "bootstrap"],
        "resamples": 39,
        "seed": 4,
        "negate": true,
    });
    std::fs::write(&cfg, body.to_string()).unwrap();
    let one = dir.path().join("one");
    let two = dir.path().join("two");
    let o = tailasym(&["analyze", "--config", p(&cfg), "--out", p(&one)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let o = tailasym(&["analyze", "--manifest", p(&one.join("manifest.json")), "--out", p(&two)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(one.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["mode"], "pseudo");
    for f in manifest["outputs"].as_array().unwrap() {
        let f = f.as_str().unwrap();
        assert_eq!(std::fs::read(one.join(f)).unwrap(), std::fs::read(two.join(f)).unwrap(), "{f}");
    }
    let curve = std::fs::read_to_string(one.join("alpha_curve.csv")).unwrap();
    assert!(curve.lines().nth(1).unwrap().contains("alpha_star"));
}

#[test]
fn analyze_rejects_bootstrap_with_known_margins() {
    let dir = tempfile::tempdir().unwrap();
    let data = cauchy_sample(dir.path(), 50);
    let cfg = dir.path().join("cfg.json");
    let body = serde_json::json!({
        "input": data, "scale": "raw", "margin": "cauchy(0,1)", "methods": ["bootstrap"], "seed": 1,
    });
    std::fs::write(&cfg, body.to_string()).unwrap();
    let o = tailasym(&["analyze", "--config", p(&cfg), "--out", p(&dir.path().join("o"))]);
    assert_eq!(code(&o), 2);
}
