use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::build::{RunMetadata, FORMAT_VERSION};
use super::explain::explain_fitted;
use super::{build_dataset, ingest, io_err, load_pixels, metadata_csv, train_models, Artifact, PipelineError, Result};
use crate::config::RunConfig;
use crate::dataset::{read_csv, write_csv, FeatureTable};
use crate::dicom::write_file;
use crate::eval::evaluate_holdout;
use crate::learners::FittedModel;
use crate::pipeline::BuildManifest;
use crate::report::{beeswarm_svg, bubble_svg, top_features_svg, EvaluationReport, ExplanationReport};
use crate::synth::{gen_cohort, GroundTruth, PhysicsConfig};

/// File names inside the output directory.
pub mod layout {
    pub const METADATA: &str = "metadata.csv";
    pub const INGEST_REPORT: &str = "ingest.json";
    pub const DATASET: &str = "dataset.csv";
    pub const MANIFEST: &str = "manifest.json";
    pub const EVALUATION: &str = "evaluation.json";
    pub const EVALUATION_TABLE: &str = "evaluation.md";
    pub const MODELS: &str = "models";
    pub const ATTRIBUTIONS: &str = "attributions";
    pub const EXPLANATION: &str = "explanation.json";
    pub const FIGURES: &str = "figures";
    pub const DICOM: &str = "dicom";
    pub const GROUND_TRUTH: &str = "ground_truth.json";
}

/// What a command produced: files to write, warnings, and a one-line
/// summary for the terminal.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub artifacts: Vec<Artifact>,
    pub warnings: Vec<String>,
    pub summary: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IngestReport {
    pub format_version: u32,
    pub files: usize,
    pub records: usize,
    pub warning_count: usize,
    pub failures: Vec<(String, String)>,
    pub metadata: RunMetadata,
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| io_err(path, e))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    serde_json::from_str(&read_text(path)?).map_err(|e| PipelineError::Json {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

fn json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("value serializes");
    s.push('\n');
    s
}

/// Where train and explain look for the dataset: a single input directory
/// holding one, otherwise the output directory.
fn dataset_dir(cfg: &RunConfig) -> PathBuf {
    match cfg.input.as_slice() {
        [dir] if dir.join(layout::DATASET).is_file() => dir.clone(),
        _ => cfg.out.clone(),
    }
}

fn load_dataset(cfg: &RunConfig) -> Result<(FeatureTable, BuildManifest)> {
    let dir = dataset_dir(cfg);
    let path = dir.join(layout::DATASET);
    let table = read_csv(&read_text(&path)?)?;
    let manifest: BuildManifest = read_json(&dir.join(layout::MANIFEST))?;
    if manifest.rows != table.nrows() || manifest.columns != table.feature_names() {
        return Err(PipelineError::Inconsistent(format!(
            "{} does not match its manifest",
            path.display()
        )));
    }
    Ok((table, manifest))
}

pub fn cmd_ingest(cfg: &RunConfig) -> Result<Outcome> {
    let result = ingest(&cfg.input)?;
    let mut warnings: Vec<String> =
        result.failures.iter().map(|f| format!("{}: {}", f.path.display(), f.error)).collect();
    if result.files.is_empty() && result.failures.is_empty() {
        warnings.push("no files found".into());
    }
    let report = IngestReport {
        format_version: FORMAT_VERSION,
        files: result.files.len() + result.failures.len(),
        records: result.files.len(),
        warning_count: warnings.len(),
        failures: result
            .failures
            .iter()
            .map(|f| (f.path.display().to_string(), f.error.clone()))
            .collect(),
        metadata: RunMetadata::now(),
    };
    Ok(Outcome {
        artifacts: vec![
            Artifact::new(layout::METADATA, metadata_csv(&result)?),
            Artifact::new(layout::INGEST_REPORT, json(&report)),
        ],
        summary: format!("{} records, {} unreadable files", result.files.len(), result.failures.len()),
        warnings,
    })
}

pub fn cmd_build(cfg: &RunConfig) -> Result<Outcome> {
    let seed = cfg.require_seed()?;
    let result = ingest(&cfg.input)?;
    let warnings: Vec<String> =
        result.failures.iter().map(|f| format!("{}: {}", f.path.display(), f.error)).collect();
    let records: Vec<_> = result.files.iter().map(|f| f.record.clone()).collect();
    let paths: Vec<&Path> = result.files.iter().map(|f| f.path.as_path()).collect();
    let mut built = build_dataset(&records, &|i| load_pixels(paths[i]), cfg, seed, warnings)?;
    built.manifest.metadata = Some(RunMetadata::now());
    let m = &built.manifest;
    Ok(Outcome {
        artifacts: vec![
            Artifact::new(layout::DATASET, write_csv(&built.table)?),
            Artifact::new(layout::MANIFEST, json(m)),
        ],
        summary: format!(
            "cohort {}: {} rows, {} columns ({} removed), split {}/{}",
            m.cohort,
            m.rows,
            m.columns.len(),
            m.removals.len(),
            m.split.train.len(),
            m.split.test.len()
        ),
        warnings: m.warnings.clone(),
    })
}

pub fn cmd_train(cfg: &RunConfig) -> Result<Outcome> {
    let seed = cfg.require_seed()?;
    let (table, manifest) = load_dataset(cfg)?;
    let reports = train_models(&table, &manifest.split, cfg, seed)?;
    let eval = EvaluationReport::new(&reports, seed, &manifest.cohort, manifest.split.train.len(), manifest.split.test.len());
    let mut artifacts = vec![
        Artifact::new(layout::EVALUATION, eval.to_json() + "\n"),
        Artifact::new(layout::EVALUATION_TABLE, eval.render_table()),
    ];
    for r in &reports {
        artifacts.push(Artifact::new(
            Path::new(layout::MODELS).join(format!("{}.json", r.kind)),
            r.model.to_json() + "\n",
        ));
    }
    let best = reports.iter().max_by(|a, b| a.holdout.f1.total_cmp(&b.holdout.f1));
    Ok(Outcome {
        artifacts,
        warnings: manifest.warnings.clone(),
        summary: match best {
            Some(b) => format!("{} models trained; best holdout F1 {:.2} ({})", reports.len(), b.holdout.f1, b.kind),
            None => "no models configured".into(),
        },
    })
}

pub fn cmd_explain(cfg: &RunConfig) -> Result<Outcome> {
    let seed = cfg.require_seed()?;
    let (table, manifest) = load_dataset(cfg)?;
    let model_dir = cfg.out.join(layout::MODELS);
    let mut models = Vec::new();
    for kind in &cfg.models {
        let path = model_dir.join(format!("{kind}.json"));
        if path.is_file() {
            models.push(FittedModel::from_json(&read_text(&path)?)?);
        }
    }
    if models.is_empty() {
        return Err(io_err(&model_dir, "no trained models found; run `train` first"));
    }
    let x_test = table.x.select_rows(&manifest.split.test);
    let y_test: Vec<u8> = manifest.split.test.iter().map(|&i| table.labels[i]).collect();
    let mut pairs = Vec::new();
    for m in &models {
        pairs.push((m, evaluate_holdout(m, &x_test, &y_test)?.f1));
    }
    let ex = explain_fitted(&table, &manifest.split, &pairs, cfg, seed)?;
    let opts = &cfg.explain.summary;
    let report = ExplanationReport::new(&ex, seed, opts.trend_threshold, opts.top_k);

    let mut artifacts = Vec::new();
    let figures = Path::new(layout::FIGURES);
    for (slot, m) in ex.models.iter().enumerate() {
        artifacts.push(Artifact::new(
            Path::new(layout::ATTRIBUTIONS).join(format!("{}.csv", m.kind)),
            m.attribution.to_csv(),
        ));
        artifacts.push(Artifact::new(
            figures.join(format!("beeswarm_{}.svg", m.kind)),
            beeswarm_svg(&format!("{} (F1 {:.2})", m.kind, m.f1), &m.beeswarm, seed, slot as u64),
        ));
    }
    artifacts.push(Artifact::new(
        figures.join("top5.svg"),
        top_features_svg(
            &format!("Top {} features, rank score weighted by F1", opts.top_k),
            &report.top_features,
        ),
    ));
    artifacts.push(Artifact::new(
        figures.join("bubble.svg"),
        bubble_svg(&format!("Parameter trends, {}", manifest.cohort), &ex.summary),
    ));
    artifacts.push(Artifact::new(layout::EXPLANATION, report.to_json() + "\n"));
    let top: Vec<&str> = report.top_features.iter().map(|t| t.0.as_str()).collect();
    Ok(Outcome {
        artifacts,
        warnings: manifest.warnings.clone(),
        summary: format!("{} models explained; top features: {}", ex.models.len(), top.join(", ")),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthReport {
    pub format_version: u32,
    pub seed: u64,
    pub n: usize,
    pub physics: PhysicsConfig,
    pub truth: GroundTruth,
    pub flipped: usize,
}

pub fn cmd_synth(cfg: &RunConfig) -> Result<Outcome> {
    let seed = cfg.require_seed()?;
    let cohort = gen_cohort(cfg.synth_n, seed, &cfg.physics)?;
    let mut artifacts = Vec::with_capacity(cohort.records.len() + 1);
    for (i, (r, p)) in cohort.records.iter().zip(&cohort.pixels).enumerate() {
        artifacts.push(Artifact::new(
            Path::new(layout::DICOM).join(format!("case_{i:04}.dcm")),
            write_file(r, p)?,
        ));
    }
    let report = GroundTruthReport {
        format_version: FORMAT_VERSION,
        seed,
        n: cfg.synth_n,
        physics: cfg.physics.clone(),
        truth: cohort.truth.clone(),
        flipped: cohort.flipped.iter().filter(|f| **f).count(),
    };
    artifacts.push(Artifact::new(layout::GROUND_TRUTH, json(&report)));
    Ok(Outcome {
        artifacts,
        warnings: Vec::new(),
        summary: format!("{} synthetic images, {} with mirrored noise", cfg.synth_n, report.flipped),
    })
}
