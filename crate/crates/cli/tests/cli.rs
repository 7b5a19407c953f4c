//! The binary end to end: outputs, determinism and exit codes.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::OnceLock;

use serde_json::Value;
use tempfile::TempDir;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hulksmash"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Checkpoint from one default training run, shared by the tests.
fn checkpoint() -> &'static Path {
    static DIR: OnceLock<TempDir> = OnceLock::new();
    let dir = DIR.get_or_init(|| {
        let d = tempfile::tempdir().unwrap();
        ok(&["train", "--out", s(d.path())]);
        d
    });
    static CKPT: OnceLock<PathBuf> = OnceLock::new();
    CKPT.get_or_init(|| dir.path().join("checkpoint.hsck"))
}

fn files_in(dir: &Path) -> usize {
    std::fs::read_dir(dir).map(|d| d.count()).unwrap_or(0)
}

fn timeline(path: &Path) -> Vec<Value> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

#[test]
fn train_is_reproducible_and_logs_each_epoch() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("toy.toml");
    std::fs::write(&cfg, "corpus_seeds = [0]\n[train]\nepochs = 2\n").unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        ok(&["train", "--config", s(&cfg), "--seed", "7", "--out", s(out)]);
    }
    let read = |d: &Path, f: &str| std::fs::read(d.join(f)).unwrap();
    assert_eq!(read(&a, "checkpoint.hsck"), read(&b, "checkpoint.hsck"));
    assert_eq!(read(&a, "train_log.json"), read(&b, "train_log.json"));
    let log: Value = serde_json::from_slice(&read(&a, "train_log.json")).unwrap();
    assert_eq!(log.as_array().unwrap().len(), 2);
    ok(&["train", "--config", s(&cfg), "--seed", "8", "--out", s(&b)]);
    assert_ne!(read(&a, "checkpoint.hsck"), read(&b, "checkpoint.hsck"));
}

#[test]
fn segment_is_reproducible_and_renders_every_stage() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let ck = s(checkpoint());
    ok(&[
        "segment",
        "--checkpoint",
        ck,
        "--scenario",
        "multistream",
        "--seed",
        "3",
        "--render",
        "--out",
        s(&a),
    ]);
    ok(&[
        "segment",
        "--checkpoint",
        ck,
        "--scenario",
        "multistream",
        "--seed",
        "3",
        "--out",
        s(&b),
    ]);
    let json = |d: &Path| std::fs::read(d.join("segment.json")).unwrap();
    assert_eq!(json(&a), json(&b));
    let records: Value = serde_json::from_slice(&json(&a)).unwrap();
    let buffers = records.as_array().unwrap().len();
    assert_eq!(buffers, 30);
    assert_eq!(files_in(&a.join("frames")), 4 * buffers);
    assert_eq!(files_in(&b.join("frames")), 0);
}

#[test]
fn single_object_segments_to_one_object_per_buffer() {
    let dir = tempfile::tempdir().unwrap();
    ok(&[
        "segment",
        "--checkpoint",
        s(checkpoint()),
        "--scenario",
        "single_face",
        "--out",
        s(dir.path()),
    ]);
    let records: Value = serde_json::from_slice(&std::fs::read(dir.path().join("segment.json")).unwrap()).unwrap();
    for r in records.as_array().unwrap() {
        assert_eq!(r["objects"].as_array().unwrap().len(), 1);
        assert!(!r["mask"][0].as_array().unwrap().is_empty());
    }
}

#[test]
fn crossing_objects_keep_their_ids() {
    let dir = tempfile::tempdir().unwrap();
    ok(&[
        "track",
        "--checkpoint",
        s(checkpoint()),
        "--scenario",
        "crossing",
        "--seed",
        "2",
        "--render",
        "--out",
        s(dir.path()),
    ]);
    let lines = timeline(&dir.path().join("timeline.jsonl"));
    let ids_in = |b: u64| {
        let mut v: Vec<u64> = lines
            .iter()
            .filter(|l| l["buffer"] == b)
            .map(|l| l["id"].as_u64().unwrap())
            .collect();
        v.sort_unstable();
        v
    };
    assert_eq!(ids_in(0).len(), 2);
    assert_eq!(ids_in(29), ids_in(0));
    assert_eq!(files_in(&dir.path().join("frames")), 30);
}

#[test]
fn timeline_length_follows_buffer_count() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(&["synth", "--scenario", "single_diamond", "--out", s(d)]);
    let rec = d.join("single_diamond.bin");
    assert!(d.join("single_diamond.json").exists());
    let one = d.join("one");
    ok(&[
        "track",
        "--checkpoint",
        s(checkpoint()),
        "--input",
        s(&rec),
        "--window-us",
        "300000",
        "--out",
        s(&one),
    ]);
    let lines = timeline(&one.join("timeline.jsonl"));
    assert!(!lines.is_empty());
    assert!(lines.iter().all(|l| l["buffer"] == 0));

    let empty = d.join("empty.bin");
    std::fs::write(&empty, []).unwrap();
    let none = d.join("none");
    ok(&[
        "track",
        "--checkpoint",
        s(checkpoint()),
        "--input",
        s(&empty),
        "--out",
        s(&none),
    ]);
    assert!(timeline(&none.join("timeline.jsonl")).is_empty());
}

#[test]
fn eval_reports_recovery_and_self_match() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("eval.toml");
    std::fs::write(&cfg, "[experiment]\nseeds = [0, 1, 2]\n").unwrap();
    ok(&[
        "eval",
        "--config",
        s(&cfg),
        "--checkpoint",
        s(checkpoint()),
        "--scenario",
        "recovery",
        "--scenario",
        "self_match_with_query",
        "--out",
        s(dir.path()),
    ]);
    let reports: Value = serde_json::from_slice(&std::fs::read(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(reports[0]["recovery_rate"], 100.0);
    assert_eq!(reports[1]["self_match"][0]["k"], 1);
    assert_eq!(reports[1]["self_match"][0]["rate"], 100.0);
    let table = std::fs::read_to_string(dir.path().join("report.txt")).unwrap();
    assert!(table.contains("recovery rate"));
}

#[test]
fn feature_atlas_has_a_tile_per_map() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(&["synth", "--scenario", "single_face", "--out", s(d)]);
    ok(&[
        "viz-features",
        "--checkpoint",
        s(checkpoint()),
        "--input",
        s(&d.join("single_face.bin")),
        "--out",
        s(d),
    ]);
    let tiles = std::fs::read_dir(d.join("features"))
        .unwrap()
        .filter(|e| !e.as_ref().unwrap().file_name().to_string_lossy().starts_with("atlas_"))
        .count();
    assert_eq!(tiles, 41);
    assert_eq!(files_in(&d.join("overlays")), 30);
}

#[test]
fn usage_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let d = s(dir.path());
    let missing = dir.path().join("no_such_corpus");
    let out = run(&["train", "--input", s(&missing), "--out", d]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("no_such_corpus"));
    let out = run(&[
        "eval",
        "--checkpoint",
        s(checkpoint()),
        "--scenario",
        "teleport",
        "--out",
        d,
    ]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(&[
        "segment",
        "--checkpoint",
        s(&missing),
        "--scenario",
        "multistream",
        "--out",
        d,
    ]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(&[
        "segment",
        "--checkpoint",
        s(checkpoint()),
        "--scenario",
        "spiral",
        "--out",
        d,
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn runtime_failures_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.bin");
    std::fs::write(&bad, [1, 2, 3]).unwrap();
    let out = run(&[
        "segment",
        "--checkpoint",
        s(checkpoint()),
        "--input",
        s(&bad),
        "--out",
        s(dir.path()),
    ]);
    assert_eq!(out.status.code(), Some(1));
}
