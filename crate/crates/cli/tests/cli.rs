use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn segcons(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_segcons"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn synth(dir: &Path) {
    let out = segcons(&["synth", "--cases", "8", "--test-cases", "2", "--size", "32", "--out", p(dir)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn synth_writes_dataset_and_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    synth(&data);
    let ds: Value = serde_json::from_str(&std::fs::read_to_string(data.join("dataset.json")).unwrap()).unwrap();
    assert_eq!(ds.as_array().unwrap().len(), 10);
    let manifest: Value = serde_json::from_str(&std::fs::read_to_string(data.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "synth");
    assert_eq!(manifest["seeds"], serde_json::json!([0]));
    assert!(manifest["finished_unix"].is_u64());
}

#[test]
fn synth_refuses_non_empty_directory_without_force() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::write(tmp.path().join("keep.txt"), "x").unwrap();
    let out = segcons(&["synth", "--cases", "4", "--test-cases", "1", "--size", "16", "--out", p(tmp.path())]);
    assert_eq!(out.status.code(), Some(2));
    let out = segcons(&["synth", "--cases", "4", "--test-cases", "1", "--size", "16", "--force", "--out", p(tmp.path())]);
    assert!(out.status.success());
}

#[test]
fn train_then_eval_reproduces_report() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    let run = tmp.path().join("run");
    let ev = tmp.path().join("eval");
    synth(&data);
    let out = segcons(&[
        "train", "--data", p(&data), "--out", p(&run), "--desk", "--iters", "6", "--patch", "32", "--mc-passes", "2",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["checkpoint.json", "history.csv", "report.csv", "manifest.json"] {
        assert!(run.join(f).exists(), "{f} missing");
    }
    let out = segcons(&["eval", "--run", p(&run), "--data", p(&data), "--out", p(&ev)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let a = std::fs::read_to_string(run.join("report.csv")).unwrap();
    let b = std::fs::read_to_string(ev.join("report.csv")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn config_file_is_overridden_by_flags() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    let run = tmp.path().join("run");
    synth(&data);
    let cfg = tmp.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"max_iters": 3, "mc_passes": 2, "patch": [32, 32], "alpha": 0.9}"#).unwrap();
    let out = segcons(&["train", "--data", p(&data), "--out", p(&run), "--config", p(&cfg), "--alpha", "0.95"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let manifest: Value = serde_json::from_str(&std::fs::read_to_string(run.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["config"]["max_iters"], 3);
    assert_eq!(manifest["config"]["alpha"], 0.95);
}

#[test]
fn conflicting_flags_are_usage_errors() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("run");
    for args in [
        vec!["--ablate", "itc", "--mc-passes", "4"],
        vec!["--ablate", "ctc", "--k", "100"],
        vec!["--ablate", "dis,ctc", "--beta", "0.5"],
        vec!["--ablate", "itc", "--teacher-noise", "0.1"],
    ] {
        let mut full = vec!["train", "--data", "nowhere", "--out", p(&out)];
        full.extend(args.iter().copied());
        let r = segcons(&full);
        assert_eq!(r.status.code(), Some(2), "{args:?}");
    }
    assert_eq!(segcons(&["sweep", "--data", "x", "--out", "y"]).status.code(), Some(2));
}

#[test]
fn missing_dataset_is_a_data_error() {
    let tmp = tempfile::tempdir().unwrap();
    let r = segcons(&["train", "--data", p(&tmp.path().join("absent")), "--out", p(&tmp.path().join("run"))]);
    assert_eq!(r.status.code(), Some(3));
}

#[test]
fn sdf_round_trip_recovers_mask() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    synth(&data);
    let mask = data.join("case_0000.mask.json");
    let dist = tmp.path().join("d.json");
    let back = tmp.path().join("m.json");
    assert!(segcons(&["sdf", "--in", p(&mask), "--out", p(&dist)]).status.success());
    assert!(segcons(&["sdf", "--in", p(&dist), "--out", p(&back), "--invert"]).status.success());
    assert_eq!(
        std::fs::read(data.join("case_0000.mask.raw")).unwrap(),
        std::fs::read(tmp.path().join("m.raw")).unwrap()
    );
    let wrong = segcons(&["sdf", "--in", p(&dist), "--out", p(&tmp.path().join("x.json"))]);
    assert_eq!(wrong.status.code(), Some(3));
}

#[test]
fn unknown_flags_are_rejected() {
    let r = segcons(&["train", "--data", "d", "--out", "o", "--no-such-flag"]);
    assert_eq!(r.status.code(), Some(2));
}

#[test]
fn manifest_reruns_reproduce_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    let first = tmp.path().join("first");
    let second = tmp.path().join("second");
    synth(&data);
    let out = segcons(&[
        "train", "--data", p(&data), "--out", p(&first), "--desk", "--iters", "5", "--patch", "32", "--mc-passes", "2",
        "--seed", "4",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let manifest = first.join("manifest.json");
    let out = segcons(&["train", "--data", p(&data), "--out", p(&second), "--config", p(&manifest)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["history.csv", "report.csv"] {
        assert_eq!(
            std::fs::read_to_string(first.join(f)).unwrap(),
            std::fs::read_to_string(second.join(f)).unwrap(),
            "{f} differs"
        );
    }
}
