use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn spca(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spca")).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = spca(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn pipeline_recovers_planted_support() {
    let dir = tempfile::tempdir().unwrap();
    let truth = dir.path().join("truth");
    let obs = dir.path().join("obs");
    let sol = dir.path().join("sol");
    ok(&["generate", "--d", "20", "--s", "4", "--gap", "20", "--seed", "3", "--out", p(&truth)]);
    ok(&[
        "observe", "--input", p(&truth.join("m_star.csv")), "--p", "0.9", "--bound", "5",
        "--sigma-normal", "0.1", "--seed", "4", "--out", p(&obs),
    ]);
    ok(&["solve", "--input", p(&obs.join("m.csv")), "--rho", "0.1", "--write-x", "--out", p(&sol)]);

    let planted = json(&truth.join("truth.json"))["support"].clone();
    let found = json(&sol.join("solution.json"))["support"].clone();
    assert_eq!(planted, found);
    assert!(sol.join("x_hat.csv").exists());
    let mask = fs::read_to_string(obs.join("mask.csv")).unwrap();
    assert_eq!(mask.lines().count(), 21);

    let out = ok(&["theory", "--truth", p(&truth.join("m_star.csv")), "--p", "0.9", "--bound", "5"]);
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(report["success_prob_bound"].as_f64().unwrap() < 1.0);

    let out = ok(&[
        "witness", "--input", p(&obs.join("m.csv")), "--truth", p(&truth.join("m_star.csv")), "--rho", "0.1",
        "--compare",
    ]);
    let w: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(w.get("certified").is_some());
}

#[test]
fn experiment_writes_csv_and_plots() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.cfg");
    fs::write(&cfg, "# tiny grid\nd = 12\ns = 3\ns_ref = 3\np = 0.5, 0.9\ntrials = 2\n").unwrap();
    let out = dir.path().join("out");
    ok(&["exp1", "--config", p(&cfg), "--full-grid", "--out", p(&out)]);
    let trials = fs::read_to_string(out.join("trials.csv")).unwrap();
    assert_eq!(trials.lines().count(), 1 + 2 * 2);
    assert!(out.join("summary.csv").exists());
    assert!(fs::read_dir(&out).unwrap().any(|e| e.unwrap().path().extension().is_some_and(|x| x == "svg")));
}

#[test]
fn invalid_input_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.csv");
    fs::write(&bad, "c1,c2\n1,2\n3,4\n").unwrap();
    assert_eq!(spca(&["solve", "--input", p(&bad)]).status.code(), Some(2));

    let cfg = dir.path().join("exp.cfg");
    fs::write(&cfg, "colour = blue\n").unwrap();
    let out = spca(&["exp1", "--config", p(&cfg), "--out", p(dir.path())]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn iteration_cap_exits_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let truth = dir.path().join("truth");
    ok(&["generate", "--d", "15", "--s", "3", "--seed", "1", "--out", p(&truth)]);
    let out = spca(&["solve", "--input", p(&truth.join("m_star.csv")), "--rho", "0.5", "--max-iter", "2"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn cov_selects_high_variance_columns() {
    let dir = tempfile::tempdir().unwrap();
    let table = dir.path().join("t.csv");
    let mut text = String::from("a,b,c,d\n");
    for i in 0..40 {
        let x = ((i * 37) % 11) as f64 - 5.0;
        let y = ((i * 13) % 7) as f64 - 3.0;
        let miss = if i % 9 == 0 { "NA".to_owned() } else { format!("{}", 0.1 * y) };
        text += &format!("{},{},{},{}\n", 0.1 * x, miss, 0.05 * (x + y), 6.0 * x);
    }
    fs::write(&table, text).unwrap();
    let out = dir.path().join("cov");
    ok(&["cov", "--input", p(&table), "--out", p(&out)]);
    let report = json(&out.join("support.json"));
    assert_eq!(report["selected"], serde_json::json!(["d"]));
}
