//! End-to-end stages: ingest, build, train, explain, synth.
//!
//! Each stage is a pure function over in-memory data. The `cmd_*` wrappers
//! read their inputs from disk and return the files they would write as
//! [`Artifact`]s; [`write_artifacts`] is the only place that writes.

mod build;
mod commands;
mod explain;
mod ingest;
mod train;

use std::path::{Path, PathBuf};

use thiserror::Error;

pub use build::{build_dataset, BuildManifest, Built, RunMetadata, FORMAT_VERSION};
pub use commands::{cmd_build, cmd_explain, cmd_ingest, cmd_synth, cmd_train, layout, Outcome};
pub use explain::{explain_models, Explanations, ModelExplanation};
pub use ingest::{discover, ingest, load_pixels, metadata_csv, FileFailure, Ingest, IngestedFile};
pub use train::{train_models, ModelReport};

use crate::config::ConfigError;
use crate::dataset::DatasetError;
use crate::dicom::{DicomError, MetaRecord, PixelSlab};
use crate::eval::EvalError;
use crate::learners::LearnerError;
use crate::quality::QualityError;
use crate::shap::ShapError;
use crate::synth::{gen_cohort, SynthCohort, SynthError};
use crate::config::RunConfig;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Dicom(#[from] DicomError),
    #[error(transparent)]
    Quality(#[from] QualityError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Learner(#[from] LearnerError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Shap(#[from] ShapError),
    #[error(transparent)]
    Synth(#[from] SynthError),
    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error("{path}: invalid json: {message}")]
    Json { path: PathBuf, message: String },
    #[error("no eligible cohort (sagittal T1 or T2) among {0} images")]
    NoEligibleCohort(usize),
    #[error("cohort {0:?} not found")]
    CohortNotFound(String),
    #[error("{0}")]
    Inconsistent(String),
}

pub type Result<T, E = PipelineError> = std::result::Result<T, E>;

/// One output file, path relative to the output directory.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Artifact {
    pub path: PathBuf,
    pub bytes: Vec<u8>,
}

impl Artifact {
    pub fn new(path: impl Into<PathBuf>, bytes: impl Into<Vec<u8>>) -> Self {
        Artifact {
            path: path.into(),
            bytes: bytes.into(),
        }
    }
}

pub(crate) fn io_err(path: &Path, e: impl std::fmt::Display) -> PipelineError {
    PipelineError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

/// Write every artifact under `out`, creating directories as needed.
pub fn write_artifacts(out: &Path, artifacts: &[Artifact]) -> Result<()> {
    for a in artifacts {
        let path = out.join(&a.path);
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
        }
        std::fs::write(&path, &a.bytes).map_err(|e| io_err(&path, e))?;
    }
    Ok(())
}

/// Everything an in-memory synthetic run produces.
#[derive(Debug, Clone)]
pub struct SyntheticRun {
    pub cohort: SynthCohort,
    pub built: Built,
    pub reports: Vec<ModelReport>,
    pub explanations: Explanations,
}

impl SyntheticRun {
    pub fn holdout_f1(&self, kind: crate::learners::ModelKind) -> Option<f64> {
        self.reports.iter().find(|r| r.kind == kind).map(|r| r.holdout.f1)
    }
}

/// Generate a cohort of `cfg.synth_n` images and run build, train and
/// explain on it without touching the filesystem.
pub fn run_synthetic(cfg: &RunConfig) -> Result<SyntheticRun> {
    let seed = cfg.require_seed()?;
    let cohort = gen_cohort(cfg.synth_n, seed, &cfg.physics)?;
    let built = build_in_memory(&cohort.records, &cohort.pixels, cfg, seed)?;
    let reports = train_models(&built.table, &built.split, cfg, seed)?;
    let explanations = explain_models(&built.table, &built.split, &reports, cfg, seed)?;
    Ok(SyntheticRun {
        cohort,
        built,
        reports,
        explanations,
    })
}

/// [`build_dataset`] over records whose pixels are already loaded.
pub fn build_in_memory(records: &[MetaRecord], pixels: &[PixelSlab], cfg: &RunConfig, seed: u64) -> Result<Built> {
    if records.len() != pixels.len() {
        return Err(PipelineError::Inconsistent(format!(
            "{} records but {} pixel slabs",
            records.len(),
            pixels.len()
        )));
    }
    build_dataset(records, &|i| Ok(pixels[i].clone()), cfg, seed, Vec::new())
}
