use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn repcl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_repcl")).args(args).output().unwrap()
}

fn fixture(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name).to_string_lossy().into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn replay_of_the_eps5_fixture() {
    for seed in ["1", "2", "99"] {
        let o = repcl(&["replay", "--trace", &fixture("fig2_eps5.jsonl"), "--seed", seed]);
        assert!(o.status.success());
        assert_eq!(stdout(&o), "C A B D\n");
    }
}

#[test]
fn enumerate_lists_every_order() {
    let o = repcl(&["enumerate", "--trace", &fixture("fig2_eps20.jsonl")]);
    assert!(o.status.success());
    assert_eq!(stdout(&o), "A B C D\nA C B D\nC A B D\n");
    let o = repcl(&["enumerate", "--trace", &fixture("fig2_eps20.jsonl"), "--max-events", "3"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn validate_reports_the_first_violation() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.txt");
    std::fs::write(&bad, "A C B D\n").unwrap();
    let o = repcl(&["validate", "--trace", &fixture("fig2_eps5.jsonl"), "--order", p(&bad)]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(stdout(&o), "invalid: C must be replayed before A\n");

    let good = dir.path().join("good.txt");
    let o = repcl(&["replay", "--trace", &fixture("fig2_eps20.jsonl"), "--seed", "4", "--out", p(&good)]);
    assert!(o.status.success());
    assert!(std::fs::read_to_string(&good).unwrap().starts_with("# trace=fig2_eps20.jsonl seed=4"));
    let o = repcl(&["validate", "--trace", &fixture("fig2_eps20.jsonl"), "--order", p(&good)]);
    assert!(o.status.success());
    assert_eq!(stdout(&o), "valid\n");

    std::fs::write(&bad, "A B\n").unwrap();
    let o = repcl(&["validate", "--trace", &fixture("fig2_eps20.jsonl"), "--order", p(&bad)]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn simulate_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let args = |out: &Path| {
        vec![
            "simulate".to_string(), "--n".into(), "8".into(), "--epsilon-ms".into(), "0.2".into(),
            "--interval-us".into(), "8".into(), "--alpha".into(), "400".into(), "--delta-us".into(),
            "8".into(), "--duration-ms".into(), "200".into(), "--seed".into(), "7".into(),
            "--out".into(), p(out).to_string(),
        ]
    };
    let (a, b) = (dir.path().join("a.jsonl"), dir.path().join("b.jsonl"));
    let oa = Command::new(env!("CARGO_BIN_EXE_repcl")).args(args(&a)).output().unwrap();
    let ob = Command::new(env!("CARGO_BIN_EXE_repcl")).args(args(&b)).output().unwrap();
    assert!(oa.status.success(), "{}", String::from_utf8_lossy(&oa.stderr));
    assert_eq!(stdout(&oa), stdout(&ob));
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let m: serde_json::Value = serde_json::from_str(&stdout(&oa)).unwrap();
    assert!(m["events"].as_u64().unwrap() > 500);
    assert!(m["tau_mean"].as_f64().unwrap() >= 1.0);
    assert!(m["max_observed_skew"].as_u64().unwrap() <= 200);

    let o = repcl(&["partial-replay", "--trace", p(&a), "--declared-epsilon-ms", "0.12"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(r["requirement1_violations"], 0);
    assert_eq!(r["declared_epsilon_us"], 120);
    let o = repcl(&["partial-replay", "--trace", p(&a), "--declared-epsilon-us", "400"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn sweep_and_feasibility_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("spec.json");
    std::fs::write(
        &spec,
        r#"{"grid": {"alpha": [200, 2000], "delta_us": [8, 500]},
            "fixed": {"n": 4, "epsilon_us": 100, "interval_us": 4, "duration_us": 50000},
            "repeats": 2}"#,
    )
    .unwrap();
    let (csv, plot) = (dir.path().join("rows.csv"), dir.path().join("plot.jsonl"));
    let o = repcl(&[
        "sweep", "--spec", p(&spec), "--csv", p(&csv), "--plot-out", p(&plot), "--plot-x", "delta",
        "--plot-series", "alpha", "--plot-y", "tau_mean",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(std::fs::read_to_string(&csv).unwrap().lines().count(), 1 + 8);
    assert_eq!(std::fs::read_to_string(&plot).unwrap().lines().count(), 4);

    let o = repcl(&["feasibility", "--spec", p(&spec), "--tau-budget", "1.5"]);
    assert!(o.status.success());
    assert!(stdout(&o).starts_with("n=4 E=100us I=4us budget=1.5"));

    std::fs::write(&spec, r#"{"grid": {}, "bogus": 1}"#).unwrap();
    assert_eq!(repcl(&["sweep", "--spec", p(&spec)]).status.code(), Some(1));
}

#[test]
fn exit_codes() {
    assert_eq!(repcl(&["--help"]).status.code(), Some(0));
    let o = repcl(&["replay"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"));
    assert_eq!(repcl(&["replay", "--trace", "/nonexistent.jsonl"]).status.code(), Some(2));
    assert_eq!(
        repcl(&["serve", "--trace-dir", "/nonexistent-dir", "--port", "0"]).status.code(),
        Some(2)
    );
}
