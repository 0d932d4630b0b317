use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_stochcausal");

// Small budget so the end-to-end tests finish in seconds.
const TINY: &str = "samples = 1\nouter_iters = 3\nrestarts = 1\nq_steps = 2\nw_iters = 20\nmc_samples = 50\n";

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(BIN).current_dir(dir).env("RUST_BACKTRACE", "0").args(args).output().unwrap()
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = run(dir, args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn fitted(dir: &Path, t_len: &str) {
    fs::write(dir.join("tiny.toml"), TINY).unwrap();
    ok(dir, &["generate", "--illustration", "linear", "--T", t_len, "--seed", "5", "--out", "d.csv"]);
    ok(dir, &["--config", "tiny.toml", "fit", "--data", "d.csv", "--out", "m.json"]);
}

#[test]
fn generate_shape_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["generate", "--illustration", "linear", "--T", "1000", "--seed", "0", "--out", "a.csv"]);
    ok(d, &["generate", "--illustration", "linear", "--T", "1000", "--seed", "0", "--out", "b.csv"]);
    let a = fs::read(d.join("a.csv")).unwrap();
    assert_eq!(a, fs::read(d.join("b.csv")).unwrap());
    let text = String::from_utf8(a).unwrap();
    assert_eq!(text.lines().count(), 1001);
    assert!(text.starts_with("t,y,w,"));
    let meta = json(&d.join("a.csv.meta.json"));
    assert_eq!(meta["seed"], 0);
    assert_eq!(meta["length"], 1000);
    assert!((meta["true_ate_all_ones_vs_all_zeros"].as_f64().unwrap() - 1.7).abs() < 1e-12);
    assert!(d.join("a.csv.config.json").exists());
    ok(d, &["generate", "--td", "2", "--iid", "--T", "30", "--seed", "1", "--out", "td.csv"]);
    assert_eq!(fs::read_to_string(d.join("td.csv")).unwrap().lines().count(), 31);
}

#[test]
fn zero_length_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["generate", "--illustration", "linear", "--T", "0", "--out", "x.csv"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--T"));
    assert!(!dir.path().join("x.csv").exists());
}

#[test]
fn unknown_config_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("bad.toml"), "samples = 2\nlearning_rate = 0.1\n").unwrap();
    let out = run(dir.path(), &["--config", "bad.toml", "generate", "--illustration", "linear", "--T", "5", "--out", "x.csv"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("learning_rate"));
}

#[test]
fn malformed_csv_names_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["generate", "--illustration", "linear", "--T", "10", "--out", "d.csv"]);
    let text = fs::read_to_string(d.join("d.csv")).unwrap();
    let broken: Vec<String> = text
        .lines()
        .enumerate()
        .map(|(i, l)| {
            let mut f: Vec<&str> = l.split(',').collect();
            if i == 4 {
                f[2] = "2";
            }
            f.join(",")
        })
        .collect();
    fs::write(d.join("bad.csv"), broken.join("\n")).unwrap();
    let out = run(d, &["fit", "--data", "bad.csv", "--out", "m.json"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 5"), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(!d.join("m.json").exists());
}

#[test]
fn fit_estimate_evaluate_diagnose() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fitted(d, "60");
    assert!(d.join("m.json.config.json").exists());

    ok(d, &["--config", "tiny.toml", "estimate", "--model", "m.json", "--data", "d.csv", "--w1", "all-ones", "--w2", "all-ones", "--out", "same.json"]);
    let same = json(&d.join("same.json"));
    assert_eq!(same["ate"].as_f64(), Some(0.0));

    let args = ["--config", "tiny.toml", "estimate", "--model", "m.json", "--data", "d.csv", "--w1", "alternating-10", "--w2", "alternating-01"];
    ok(d, &[&args[..], &["--window", "3:40", "--out", "e1.json"]].concat());
    ok(d, &[&args[..], &["--window", "3:40", "--out", "e2.json"]].concat());
    assert_eq!(fs::read(d.join("e1.json")).unwrap(), fs::read(d.join("e2.json")).unwrap());
    let e = json(&d.join("e1.json"));
    assert_eq!(e["ep"]["data"].as_array().unwrap().len(), 38);

    let bad = run(d, &["estimate", "--model", "m.json", "--data", "d.csv", "--w1", "0101", "--w2", "all-ones", "--out", "x.json"]);
    assert!(!bad.status.success());
    assert!(String::from_utf8_lossy(&bad.stderr).contains("length 4"));

    ok(d, &["--config", "tiny.toml", "evaluate", "--model", "m.json", "--data", "d.csv", "--out", "ev.json"]);
    let ev = json(&d.join("ev.json"));
    assert!((ev["true_ate"].as_f64().unwrap() - 1.7).abs() < 1e-12);
    assert!(ev["eps_ate"].as_f64().unwrap() >= 0.0);

    ok(d, &["diagnose", "--model", "m.json", "--out", "h.csv"]);
    let heat = fs::read_to_string(d.join("h.csv")).unwrap();
    assert!(heat.starts_with("t,l,weight"));
    assert_eq!(heat.lines().count(), 61);
}

#[test]
fn fit_is_reproducible_from_the_config_echo() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fitted(d, "40");
    ok(d, &["--config", "tiny.toml", "fit", "--data", "d.csv", "--out", "again.json"]);
    assert_eq!(fs::read(d.join("m.json")).unwrap(), fs::read(d.join("again.json")).unwrap());
    let echo = json(&d.join("m.json.config.json"));
    assert_eq!(echo["seed"], 0);
    assert_eq!(echo["pipeline"]["fit"]["outer_iters"], 3);
}

#[test]
fn bench_writes_reports() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(d.join("b.toml"), "samples = 1\nouter_iters = 1\nq_steps = 1\nw_iters = 5\nmc_samples = 10\ntune = false\n").unwrap();
    ok(d, &["--config", "b.toml", "bench", "--experiment", "null-effect", "--replications", "2", "--out", "null"]);
    let csv = fs::read_to_string(d.join("null/null_effect.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);
    assert!(d.join("null/report.config.json").exists());
    let bad = run(d, &["bench", "--experiment", "nope", "--out", "x"]);
    assert!(!bad.status.success());
}
