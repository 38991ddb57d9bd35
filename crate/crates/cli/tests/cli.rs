use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn wwrank(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wwrank"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).expect("stdout is JSON")
}

/// The error record: exactly one line of JSON on stderr.
fn error_record(o: &Output) -> Value {
    let text = String::from_utf8(o.stderr.clone()).unwrap();
    assert_eq!(text.trim_end().lines().count(), 1, "stderr: {text}");
    let v: Value = serde_json::from_str(text.trim_end()).unwrap();
    assert_eq!(v["exit_code"].as_i64().unwrap(), code(o) as i64);
    v
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn dense_csv(n: usize, f: impl Fn(usize, usize) -> f64) -> String {
    let mut s = String::new();
    for i in 0..n {
        let row: Vec<String> = (0..n)
            .map(|j| if i == j { "0".into() } else { f(i.min(j), i.max(j)).to_string() })
            .collect();
        s.push_str(&row.join(","));
        s.push('\n');
    }
    s
}

#[test]
fn test_smoke_on_small_matrix() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(dir.path(), "a.csv", "0,5,1\n5,0,3\n1,3,0\n");
    let o = wwrank(&["test", &path]);
    assert!(matches!(code(&o), 0 | 10));
    let v = stdout_json(&o);
    assert_eq!(v["n"], 3);
    for key in ["lambda1", "t_stat", "p_value", "alpha", "reject", "sigma_sq", "sigma_tilde", "centering", "u1_dot_uhat"] {
        assert!(v.get(key).is_some(), "{key}");
    }
    assert_eq!(code(&o) == 10, v["reject"].as_bool().unwrap());
}

#[test]
fn monotone_transform_gives_identical_output() {
    let dir = tempfile::tempdir().unwrap();
    let g = |i: usize, j: usize| ((i * 7 + j * 13) % 23) as f64 + 0.1 * i as f64;
    let a = write(dir.path(), "a.csv", &dense_csv(12, g));
    let b = write(dir.path(), "b.csv", &dense_csv(12, |i, j| g(i, j).exp()));
    let oa = wwrank(&["test", &a]);
    let ob = wwrank(&["test", &b]);
    assert_eq!(oa.stdout, ob.stdout);
    assert_eq!(code(&oa), code(&ob));
}

#[test]
fn strong_blocks_reject_with_exit_10() {
    let dir = tempfile::tempdir().unwrap();
    let n = 60;
    let block = |i: usize| i < n / 2;
    let noise = |i: usize, j: usize| ((i * 31 + j * 17) % 97) as f64 / 97.0 + (i * n + j) as f64 * 1e-6;
    let text = dense_csv(n, |i, j| if block(i) == block(j) { 2.0 + noise(i, j) } else { noise(i, j) });
    let path = write(dir.path(), "blocks.csv", &text);
    let out = dir.path().join("result.json");
    let o = wwrank(&["test", &path, "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 10);
    let v: Value = serde_json::from_str(&fs::read_to_string(out).unwrap()).unwrap();
    assert_eq!(v["reject"], true);
}

#[test]
fn error_paths_have_distinct_codes() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.csv");
    let o = wwrank(&["test", missing.to_str().unwrap()]);
    assert_eq!(code(&o), 66);
    assert_eq!(error_record(&o)["error"], "io");

    let bad = write(dir.path(), "bad.csv", "0,x\n1,0\n");
    let o = wwrank(&["test", &bad]);
    assert_eq!(code(&o), 65);
    assert_eq!(error_record(&o)["error"], "parse");

    let tied = write(dir.path(), "tied.csv", "0,1,1\n1,0,2\n1,2,0\n");
    let o = wwrank(&["test", &tied]);
    assert_eq!(code(&o), 67);
    assert_eq!(error_record(&o)["error"], "ties");

    let o = wwrank(&["test", &tied, "--ties", "random"]);
    assert_eq!(code(&o), 64);
    assert!(error_record(&o)["message"].as_str().unwrap().contains("--seed"));

    let o = wwrank(&["test", &tied, "--ties", "random", "--seed", "3"]);
    assert!(matches!(code(&o), 0 | 10));

    let o = wwrank(&["frobnicate"]);
    assert_eq!(code(&o), 64);
    error_record(&o);
}

#[test]
fn formats_are_selectable() {
    let dir = tempfile::tempdir().unwrap();
    let dense = write(dir.path(), "a.csv", "0,5,1\n5,0,3\n1,3,0\n");
    let edges = write(dir.path(), "a.edges", "0 1 5\n0 2 1\n1 2 3\n");
    let a = wwrank(&["test", &dense]);
    let b = wwrank(&["test", &edges, "--format", "weighted-edge-list"]);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn simulate_reports_and_is_deterministic() {
    let args = ["simulate", "two_block", "normal(1,0.4)", "normal(1.6,0.4)", "--n", "40", "--replicates", "10", "--seed", "5"];
    let o = wwrank(&args);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let mut a = stdout_json(&o);
    let rate = a["summary"]["rejection_rate"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&rate));
    assert_eq!(a["config"]["model"], "two_block");
    let mut b = stdout_json(&wwrank(&args));
    a.as_object_mut().unwrap().remove("elapsed_s");
    b.as_object_mut().unwrap().remove("elapsed_s");
    assert_eq!(a, b);

    let mut threaded = args.to_vec();
    threaded.extend(["--threads", "3"]);
    let mut c = stdout_json(&wwrank(&threaded));
    c.as_object_mut().unwrap().remove("elapsed_s");
    assert_eq!(a["summary"], c["summary"]);
}

#[test]
fn simulate_requires_seed_and_valid_specs() {
    let o = wwrank(&["simulate", "homogeneous", "uniform(0,1)", "--n", "20"]);
    assert_eq!(code(&o), 64);

    let o = wwrank(&["simulate", "homogeneous", "normal(1,x)", "--n", "20", "--seed", "1"]);
    assert_eq!(code(&o), 65);
    let msg = error_record(&o)["message"].as_str().unwrap().to_string();
    assert!(msg.contains("position 9"), "{msg}");

    let o = wwrank(&["simulate", "planted", "normal(2,1)", "normal(1,1)", "--n", "20", "--seed", "1"]);
    assert_eq!(code(&o), 64);
}

#[test]
fn simulate_from_config_with_dump() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "cfg.json",
        r#"{"id":"null","n":30,"model":"homogeneous","f":"pareto(1,1)","replicates":12,"master_seed":8}"#,
    );
    let dump = dir.path().join("reps.csv");
    let o = wwrank(&["simulate", "--config", &cfg, "--dump", dump.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v = stdout_json(&o);
    assert_eq!(v["config"]["id"], "null");
    assert!(v["replicates_path"].as_str().unwrap().ends_with("reps.csv"));
    let csv = fs::read_to_string(dump).unwrap();
    assert_eq!(csv.lines().count(), 13);
    let rejected = csv.lines().skip(1).filter(|l| l.ends_with(",1")).count();
    assert_eq!(rejected as u64, v["summary"]["rejections"].as_u64().unwrap());
}

#[test]
fn reproduce_writes_csv_and_json() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = wwrank(&["reproduce", "table2", "--seed", "1", "--scale", "0.01", "--n", "20", "--out", out]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(dir.path().join("table2.csv")).unwrap();
    assert_eq!(csv.lines().count(), 8);
    assert!(csv.starts_with("row,F1,F2,"));
    let v: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("table2.json")).unwrap()).unwrap();
    assert_eq!(v["summary"]["scale"], 0.01);
    assert_eq!(v["summary"]["replicates"], 4);

    let o = wwrank(&["reproduce", "fig1", "--scale", "0.5", "--out", out]);
    assert_eq!(code(&o), 64);
    let o = wwrank(&["reproduce", "table9", "--seed", "1"]);
    assert_eq!(code(&o), 64);
}

#[test]
fn esd_and_qq() {
    let dir = tempfile::tempdir().unwrap();
    let hist = dir.path().join("esd.csv");
    let o = wwrank(&["esd", "--n", "60", "--bins", "10", "--seed", "4", "--out", hist.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(stdout_json(&o)["n"], 60);
    assert_eq!(fs::read_to_string(hist).unwrap().lines().count(), 11);

    let qq = dir.path().join("qq.csv");
    let o = wwrank(&["qq", "--statistic", "eigenvector", "--n", "30", "--replicates", "40", "--seed", "2", "--out", qq.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(stdout_json(&o)["summary"]["statistic"], "eigenvector");
    assert_eq!(fs::read_to_string(qq).unwrap().lines().count(), 100);

    assert_eq!(code(&wwrank(&["qq", "--n", "30"])), 64);
}
