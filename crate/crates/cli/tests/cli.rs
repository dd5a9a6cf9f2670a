use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const TINY: [&str; 16] = [
    "--preset",
    "reduced-i",
    "--set",
    "network.sites=4",
    "--set",
    "network.layers=2",
    "--set",
    "data.count=16",
    "--set",
    "data.train=12",
    "--set",
    "data.validation=4",
    "--set",
    "train.minibatch=4",
    "--set",
    "sampler.shots=50",
];

fn qnn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qnn")).args(["--threads", "1", "-q"]).args(args).output().unwrap()
}

fn ok(args: &[&str]) -> Output {
    let o = qnn(args);
    assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    o
}

fn train(out: &Path, rounds: usize, extra: &[&str]) -> Output {
    let rounds = format!("train.rounds={rounds}");
    let mut args = vec!["train", "--out", out.to_str().unwrap(), "--set", &rounds];
    args.extend(TINY);
    args.extend(extra);
    ok(&args)
}

#[test]
fn gen_data_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for d in [&a, &b] {
        ok(&["gen-data", "--preset", "reduced-i", "--count", "30", "--out", d.to_str().unwrap()]);
    }
    for f in ["dataset.jsonl", "split.json"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    assert_eq!(fs::read_to_string(a.join("dataset.jsonl")).unwrap().lines().count(), 1 + 30);
}

#[test]
fn gen_data_second_dataset() {
    let dir = tempfile::tempdir().unwrap();
    let o = ok(&["gen-data", "--dataset", "ii", "--count", "60", "--out", dir.path().to_str().unwrap()]);
    assert!(String::from_utf8_lossy(&o.stdout).contains("60 samples"));
}

#[test]
fn train_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let o = train(dir.path(), 2, &[]);
    assert!(String::from_utf8_lossy(&o.stdout).starts_with("best round"));
    for f in ["losses.csv", "history.json", "loss.svg", "best_params.json", "centroids.json", "dataset.jsonl", "split.json"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
    let csv = fs::read_to_string(dir.path().join("losses.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);
    assert!(csv.starts_with("round,"));
    assert!(dir.path().join("checkpoints/round-0002/params.json").exists());
}

#[test]
fn resume_matches_an_uninterrupted_run() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    train(&a, 2, &[]);
    train(&a, 4, &["--resume"]);
    train(&b, 4, &[]);
    for f in ["history.json", "best_params.json", "centroids.json"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn resume_refuses_a_different_configuration() {
    let dir = tempfile::tempdir().unwrap();
    train(dir.path(), 1, &[]);
    let rounds = "train.rounds=2";
    let mut args = vec!["train", "--resume", "--seed", "9", "--out", dir.path().to_str().unwrap(), "--set", rounds];
    args.extend(TINY);
    assert_eq!(qnn(&args).status.code(), Some(1));
}

#[test]
fn evaluate_reports_and_enforces_thresholds() {
    let dir = tempfile::tempdir().unwrap();
    train(dir.path(), 1, &[]);
    let out = dir.path().to_str().unwrap();
    let params = dir.path().join("best_params.json");
    let params = params.to_str().unwrap();
    let mut args = vec!["evaluate", "--params", params, "--out", out];
    args.extend(TINY);
    let o = ok(&args);
    let report: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let acc = report["accuracy"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&acc));
    assert!(dir.path().join("report.json").exists());
    args.extend(["--min-accuracy", "1.01"]);
    assert_eq!(qnn(&args).status.code(), Some(3));
}

#[test]
fn trajectory_writes_one_row_per_state_and_layer() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = vec!["trajectory", "--limit", "3", "--export-shots", "5", "--out", dir.path().to_str().unwrap()];
    args.extend(TINY);
    ok(&args);
    let csv = fs::read_to_string(dir.path().join("trajectories.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("state_id,label,layer,mx"));
    assert_eq!(lines.count(), 3 * 3);
    let shots = fs::read_to_string(dir.path().join("shots.csv")).unwrap();
    assert_eq!(shots.lines().count(), 1 + 3 * 5 * 4);
    assert!(dir.path().join("trajectories.svg").exists());
}

#[test]
fn bad_arguments_exit_with_one() {
    assert_eq!(qnn(&["train", "--no-such-flag"]).status.code(), Some(1));
    assert_eq!(qnn(&["gen-data", "--preset", "nope"]).status.code(), Some(1));
    assert_eq!(qnn(&["gen-data", "--set", "network.sites=zero"]).status.code(), Some(1));
    assert_eq!(qnn(&["--help"]).status.code(), Some(0));
}

#[test]
fn selftest_passes() {
    let o = ok(&["selftest"]);
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.contains("PASS"));
    assert!(!text.contains("FAIL"));
}
