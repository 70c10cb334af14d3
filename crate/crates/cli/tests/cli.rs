use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

const QUICK: &[&str] = &[
    "models=LR,DT,GB",
    "cv.outer=3",
    "cv.inner=2",
    "grid.lr.lambda=0.1",
    "grid.dt.max_depth=4",
    "grid.dt.min_leaf=2",
    "grid.gb.stages=20",
    "grid.gb.shrinkage=0.1",
    "grid.gb.max_depth=2",
    "explain.background=20",
    "explain.coalitions=256",
];

fn protoscope(args: &[&str], extra: &[&str]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_protoscope"));
    cmd.args(args);
    for s in extra {
        cmd.args(["--set", s]);
    }
    cmd.output().expect("binary runs")
}

fn ok(out: Output) -> String {
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(out.status.success(), "exit {:?}: {stderr}", out.status);
    String::from_utf8(out.stdout).unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn synth_build_train_explain() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("run");
    let o = path(&out);
    ok(protoscope(&["synth", "--seed", "3", "--out", o], &["synth.n=120"]));
    assert_eq!(std::fs::read_dir(out.join("dicom")).unwrap().count(), 120);
    assert!(out.join("ground_truth.json").is_file());

    let dicom = out.join("dicom");
    let common = ["--seed", "3", "--out", o, "--input", path(&dicom)];
    ok(protoscope(&[&["ingest"], &common[..]].concat(), &[]));
    assert!(out.join("metadata.csv").is_file());
    let summary = ok(protoscope(&[&["build"], &common[..]].concat(), &[]));
    assert!(summary.contains("wrote"));
    ok(protoscope(&[&["train"], &common[..]].concat(), QUICK));
    let eval: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("evaluation.json")).unwrap()).unwrap();
    assert_eq!(eval["models"].as_array().unwrap().len(), 3);
    assert!(std::fs::read_to_string(out.join("evaluation.md")).unwrap().contains(" ± "));

    ok(protoscope(&[&["explain"], &common[..]].concat(), QUICK));
    assert!(out.join("explanation.json").is_file());
    assert!(out.join("figures/bubble.svg").is_file());
    assert!(out.join("figures/beeswarm_GB.svg").is_file());
}

#[test]
fn config_file_is_read_and_flags_override_it() {
    let tmp = TempDir::new().unwrap();
    let file = tmp.path().join("run.conf");
    let out = tmp.path().join("from_flag");
    std::fs::write(&file, "# synthetic\nseed = 9\nsynth.n = 60\nout = ignored\n").unwrap();
    ok(protoscope(&["synth", "--config", path(&file), "--out", path(&out)], &["synth.n=55"]));
    assert_eq!(std::fs::read_dir(out.join("dicom")).unwrap().count(), 55);
    assert!(!tmp.path().join("ignored").exists());
}

#[test]
fn errors_exit_nonzero_with_a_message() {
    let tmp = TempDir::new().unwrap();
    let o = path(tmp.path());
    let cases: Vec<(Vec<&str>, Vec<&str>)> = vec![
        (vec!["train", "--out", o], vec![]),
        (vec!["synth", "--seed", "1", "--out", o], vec!["no.such.key=1"]),
        (vec!["synth", "--seed", "1", "--out", o], vec!["synth.n"]),
        (vec!["synth", "--seed", "1", "--out", o], vec!["synth.n=10"]),
        (vec!["build", "--seed", "1", "--out", o, "--config", "/nonexistent/run.conf"], vec![]),
        (vec!["train", "--seed", "1", "--out", o], vec![]),
    ];
    for (args, sets) in cases {
        let out = protoscope(&args, &sets);
        assert!(!out.status.success(), "{args:?} {sets:?} succeeded");
        let stderr = String::from_utf8_lossy(&out.stderr);
        assert!(stderr.contains("error:"), "{args:?}: {stderr}");
    }
}

#[test]
fn unknown_subcommand_is_a_usage_error() {
    let out = protoscope(&["frobnicate"], &[]);
    assert_eq!(out.status.code(), Some(2));
}
