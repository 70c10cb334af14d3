//! End-to-end runs through the command functions on temporary directories.

use std::path::{Path, PathBuf};

use protoscope::config::RunConfig;
use protoscope::dataset::read_csv;
use protoscope::learners::{HyperGrid, HyperParams, ModelKind};
use protoscope::pipeline::{
    build_in_memory, cmd_build, cmd_explain, cmd_ingest, cmd_synth, cmd_train, layout, write_artifacts, BuildManifest,
    Outcome,
};
use protoscope::synth::{gen_cohort, PhysicsConfig, MIN_COHORT};
use tempfile::TempDir;

fn config(seed: u64, input: &Path, out: &Path) -> RunConfig {
    let mut cfg = RunConfig::default();
    cfg.seed = Some(seed);
    cfg.input = vec![input.to_path_buf()];
    cfg.out = out.to_path_buf();
    cfg
}

/// Small grids and folds so the commands run in seconds.
fn quick(cfg: &mut RunConfig) {
    cfg.cv_outer = 3;
    cfg.cv_inner = 2;
    cfg.explain.background = 20;
    cfg.explain.coalitions = 256;
    let single = |k: ModelKind| match k {
        ModelKind::Lr => HyperParams::Lr { lambda: 0.1 },
        ModelKind::Dt => HyperParams::Dt { max_depth: Some(4), min_leaf: 2 },
        ModelKind::Rf => HyperParams::Rf { trees: 20, max_depth: Some(5), min_leaf: 2 },
        ModelKind::Gb => HyperParams::Gb { stages: 30, shrinkage: 0.1, max_depth: 2 },
        ModelKind::Mlp => HyperParams::Mlp { hidden: vec![8], learning_rate: 0.01, epochs: 20 },
    };
    cfg.grids = ModelKind::ALL.iter().map(|&k| HyperGrid::single(&single(k))).collect();
}

/// Write the first `n` images of a synthetic cohort under `dir/dicom`. The
/// generator refuses cohorts below its minimum, so small trees are cut
/// from a larger one.
fn synth_tree(dir: &Path, n: usize, seed: u64) -> PathBuf {
    let mut cfg = config(seed, dir, dir);
    cfg.synth_n = n.max(MIN_COHORT);
    let out = cmd_synth(&cfg).unwrap();
    let dicom: Vec<_> = out.artifacts.into_iter().filter(|a| a.path.starts_with(layout::DICOM)).take(n).collect();
    write_artifacts(dir, &dicom).unwrap();
    dir.join(layout::DICOM)
}

fn run(cmd: fn(&RunConfig) -> protoscope::pipeline::Result<Outcome>, cfg: &RunConfig) -> Outcome {
    let out = cmd(cfg).unwrap();
    write_artifacts(&cfg.out, &out.artifacts).unwrap();
    out
}

fn artifact<'a>(out: &'a Outcome, name: &str) -> &'a str {
    let a = out.artifacts.iter().find(|a| a.path == Path::new(name)).expect("artifact present");
    std::str::from_utf8(&a.bytes).unwrap()
}

fn manifest(out: &Outcome) -> BuildManifest {
    serde_json::from_str(artifact(out, layout::MANIFEST)).unwrap()
}

fn data_lines(csv: &str) -> usize {
    csv.lines().count() - 1
}

#[test]
fn ingest_ten_files() {
    let tmp = TempDir::new().unwrap();
    let dicom = synth_tree(tmp.path(), 10, 1);
    let out = cmd_ingest(&config(1, &dicom, tmp.path())).unwrap();
    assert_eq!(data_lines(artifact(&out, layout::METADATA)), 10);
    assert!(out.warnings.is_empty());
}

#[test]
fn corrupt_file_is_logged_and_skipped() {
    let tmp = TempDir::new().unwrap();
    let dicom = synth_tree(tmp.path(), 10, 2);
    let victim = dicom.join("case_0003.dcm");
    let bytes = std::fs::read(&victim).unwrap();
    std::fs::write(&victim, &bytes[..bytes.len() / 3]).unwrap();

    let out = cmd_ingest(&config(2, &dicom, tmp.path())).unwrap();
    assert_eq!(data_lines(artifact(&out, layout::METADATA)), 9);
    assert_eq!(out.warnings.len(), 1);
    assert!(out.warnings[0].contains("case_0003.dcm"));
    let report: serde_json::Value = serde_json::from_str(artifact(&out, layout::INGEST_REPORT)).unwrap();
    assert_eq!(report["warning_count"], 1);
    assert_eq!(report["records"], 9);
}

#[test]
fn empty_directory_gives_empty_table_and_warning() {
    let tmp = TempDir::new().unwrap();
    let empty = tmp.path().join("empty");
    std::fs::create_dir(&empty).unwrap();
    let out = cmd_ingest(&config(3, &empty, tmp.path())).unwrap();
    assert_eq!(data_lines(artifact(&out, layout::METADATA)), 0);
    assert_eq!(out.warnings.len(), 1);
}

#[test]
fn build_of_292_rows_splits_234_58() {
    let tmp = TempDir::new().unwrap();
    let dicom = synth_tree(tmp.path(), 292, 4);
    let out = cmd_build(&config(4, &dicom, tmp.path())).unwrap();
    let m = manifest(&out);
    assert_eq!(m.rows, 292);
    assert_eq!((m.split.train.len(), m.split.test.len()), (234, 58));
    assert!(!m.small_cohort_warning);
    assert_eq!(data_lines(artifact(&out, layout::DATASET)), 292);
}

#[test]
fn small_cohort_is_flagged() {
    let tmp = TempDir::new().unwrap();
    let dicom = synth_tree(tmp.path(), 60, 5);
    let mut cfg = config(5, &dicom, tmp.path());
    let m = manifest(&cmd_build(&cfg).unwrap());
    assert!(!m.small_cohort_warning);
    cfg.min_cohort = 61;
    let m = manifest(&cmd_build(&cfg).unwrap());
    assert!(m.small_cohort_warning);
    assert!(m.warnings.iter().any(|w| w.contains("below the minimum")));
}

/// Writing a generated cohort to DICOM and reading it back yields the
/// feature table built from the in-memory cohort.
#[test]
fn full_loop_fidelity() {
    let tmp = TempDir::new().unwrap();
    let (n, seed) = (80, 6);
    let dicom = synth_tree(tmp.path(), n, seed);
    let cfg = config(seed, &dicom, tmp.path());
    let out = cmd_build(&cfg).unwrap();
    let from_files = read_csv(artifact(&out, layout::DATASET)).unwrap();

    let cohort = gen_cohort(n, seed, &PhysicsConfig::default()).unwrap();
    let built = build_in_memory(&cohort.records, &cohort.pixels, &cfg, seed).unwrap();
    assert_eq!(from_files.feature_names(), built.table.feature_names());
    assert_eq!(from_files.x, built.table.x);
    assert_eq!(from_files.labels, built.table.labels);
    assert_eq!(from_files.scores, built.table.scores);
    assert_eq!(manifest(&out).split, built.split);
}

#[test]
fn commands_are_rerun_deterministic() {
    let tmp = TempDir::new().unwrap();
    let dicom = synth_tree(tmp.path(), 70, 7);
    let again = synth_tree(&tmp.path().join("again"), 70, 7);
    for i in 0..70 {
        let name = format!("case_{i:04}.dcm");
        assert_eq!(std::fs::read(dicom.join(&name)).unwrap(), std::fs::read(again.join(&name)).unwrap());
    }

    let mut outputs = Vec::new();
    for round in 0..2 {
        let out_dir = tmp.path().join(format!("run{round}"));
        let mut cfg = config(7, &dicom, &out_dir);
        quick(&mut cfg);
        let built = run(cmd_build, &cfg);
        let mut m = manifest(&built);
        assert!(m.metadata.take().is_some());
        let trained = run(cmd_train, &cfg);
        let explained = run(cmd_explain, &cfg);
        let mut files: Vec<(PathBuf, Vec<u8>)> = trained
            .artifacts
            .iter()
            .chain(&explained.artifacts)
            .map(|a| (a.path.clone(), a.bytes.clone()))
            .collect();
        files.push((layout::DATASET.into(), artifact(&built, layout::DATASET).as_bytes().to_vec()));
        outputs.push((serde_json::to_string(&m).unwrap(), files));
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn train_and_explain_write_every_artifact() {
    let tmp = TempDir::new().unwrap();
    let dicom = synth_tree(tmp.path(), 90, 8);
    let out_dir = tmp.path().join("out");
    let mut cfg = config(8, &dicom, &out_dir);
    quick(&mut cfg);
    run(cmd_build, &cfg);
    let trained = run(cmd_train, &cfg);
    let eval: serde_json::Value = serde_json::from_str(artifact(&trained, layout::EVALUATION)).unwrap();
    assert_eq!(eval["format_version"], 1);
    assert_eq!(eval["models"].as_array().unwrap().len(), 5);
    for kind in ModelKind::ALL {
        assert!(out_dir.join(layout::MODELS).join(format!("{kind}.json")).is_file());
    }

    run(cmd_explain, &cfg);
    let figures = out_dir.join(layout::FIGURES);
    let svgs = std::fs::read_dir(&figures).unwrap().count();
    assert_eq!(svgs, 7);
    for kind in ModelKind::ALL {
        assert!(figures.join(format!("beeswarm_{kind}.svg")).is_file());
        let csv = std::fs::read_to_string(out_dir.join(layout::ATTRIBUTIONS).join(format!("{kind}.csv"))).unwrap();
        assert_eq!(data_lines(&csv), 18);
    }
    assert!(figures.join("top5.svg").is_file() && figures.join("bubble.svg").is_file());
    let ex: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join(layout::EXPLANATION)).unwrap()).unwrap();
    assert_eq!(ex["format_version"], 1);
    assert!(ex["top_features"].as_array().unwrap().len() <= 5);
}

#[test]
fn training_requires_a_seed() {
    let tmp = TempDir::new().unwrap();
    let mut cfg = config(0, tmp.path(), tmp.path());
    cfg.seed = None;
    assert!(cmd_train(&cfg).is_err());
    assert!(cmd_build(&cfg).is_err());
}
