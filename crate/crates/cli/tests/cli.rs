use std::path::Path;
use std::process::{Command, Output};

fn kinform(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kinform")).args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

const TINY: &str = r#"{"train": {"epochs": 4, "batches_per_epoch": 4, "batch_size": 32, "validation_size": 32}, "hidden": [16], "checkpoint_epochs": [2]}"#;

#[test]
fn usage_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = p(dir.path());
    assert_eq!(code(&kinform(&["train", "--method", "sac", "--scenario", "planar2", "--out", out])), 2);
    assert_eq!(code(&kinform(&["train", "--method", "ann", "--scenario", "moon", "--out", out])), 2);
    assert_eq!(code(&kinform(&["gen-data", "--scenario", "planar2", "--n", "0", "--out", out])), 2);
    assert_eq!(code(&kinform(&["frobnicate"])), 2);
    let cfg = dir.path().join("bad.json");
    std::fs::write(&cfg, r#"{"train": {"learning_rate": -1}}"#).unwrap();
    let r = kinform(&["train", "--method", "ann", "--scenario", "planar2", "--config", p(&cfg), "--out", out]);
    assert_eq!(code(&r), 2);
    assert!(String::from_utf8_lossy(&r.stderr).contains("learning_rate"));
}

#[test]
fn gen_data_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.jsonl"), dir.path().join("b.jsonl"));
    for f in [&a, &b] {
        let out = kinform(&["gen-data", "--scenario", "ammr9_wbc", "--n", "25", "--seed", "3", "--out", p(f)]);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn train_resume_and_export() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("tiny.json");
    std::fs::write(&cfg, TINY).unwrap();
    let run = dir.path().join("runs/robkinet");
    let out = kinform(&["train", "--method", "robkinet", "--scenario", "planar2", "--config", p(&cfg), "--out", p(&run)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));

    let resumed = dir.path().join("resumed");
    let ckpt = run.join("checkpoints/epoch_0002.json");
    let out = kinform(&["train", "--method", "robkinet", "--scenario", "planar2", "--config", p(&cfg), "--resume", p(&ckpt), "--out", p(&resumed)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(std::fs::read(run.join("weights.json")).unwrap(), std::fs::read(resumed.join("weights.json")).unwrap());

    let csv = dir.path().join("drp.csv");
    assert_eq!(code(&kinform(&["export", "--what", "drp", "--run", p(&run), "--out", p(&csv)])), 0);
    assert_eq!(std::fs::read_to_string(&csv).unwrap().lines().count(), 5);

    // a RobKiNet run has no critic
    assert_eq!(code(&kinform(&["export", "--what", "rewards", "--run", p(&run), "--out", p(&csv)])), 1);

    let table = dir.path().join("cmp");
    let out = kinform(&["compare", "--scenario", "planar2", "--methods", "rs,robkinet", "--runs", p(&dir.path().join("runs")), "--targets", "20", "--attempts", "10", "--out", p(&table)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(table.join("table1.csv").is_file() && table.join("table2.csv").is_file());
}

#[test]
fn exporting_a_missing_run_fails_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let out = kinform(&["export", "--what", "drp", "--run", p(&dir.path().join("none")), "--out", p(&dir.path().join("x.csv"))]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("not found"));
}
