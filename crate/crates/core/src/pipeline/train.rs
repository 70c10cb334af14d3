use serde::{Deserialize, Serialize};

use super::{PipelineError, Result};
use crate::config::RunConfig;
use crate::dataset::{FeatureTable, SplitIndices};
use crate::eval::{evaluate_holdout, nested_cv_on, select_final, CvOptions, CvResult, FinalSelection, MetricSet};
use crate::learners::{fit, FittedModel, ModelKind};
use crate::rng::{derive_seed, stream};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelReport {
    pub kind: ModelKind,
    pub cv: CvResult,
    pub selection: FinalSelection,
    pub holdout: MetricSet,
    pub model: FittedModel,
}

fn check_split(table: &FeatureTable, split: &SplitIndices) -> Result<()> {
    let n = table.nrows();
    if split.train.iter().chain(&split.test).any(|&i| i >= n) {
        return Err(PipelineError::Inconsistent(format!("split indices exceed the {n} table rows")));
    }
    Ok(())
}

/// Nested CV on the training rows, final selection, a refit on all training
/// rows and a single holdout evaluation, for each configured kind. Every
/// kind sees the same outer folds.
pub fn train_models(table: &FeatureTable, split: &SplitIndices, cfg: &RunConfig, seed: u64) -> Result<Vec<ModelReport>> {
    check_split(table, split)?;
    let opts = CvOptions {
        outer: cfg.cv_outer,
        inner: cfg.cv_inner,
        seed,
    };
    let x_train = table.x.select_rows(&split.train);
    let y_train: Vec<u8> = split.train.iter().map(|&i| table.labels[i]).collect();
    let x_test = table.x.select_rows(&split.test);
    let y_test: Vec<u8> = split.test.iter().map(|&i| table.labels[i]).collect();

    let mut out = Vec::new();
    for &kind in &cfg.models {
        let cv = nested_cv_on(cfg.grid(kind), &table.x, &table.labels, &split.train, &opts)?;
        let selection = select_final(&cv);
        let model = fit(&selection.params, &x_train, &y_train, derive_seed(seed, &[stream::FIT, u64::MAX]))?;
        let holdout = evaluate_holdout(&model, &x_test, &y_test)?;
        log::info!("{kind}: ncv f1 {:.3}, holdout f1 {:.3}", cv.mean.f1, holdout.f1);
        out.push(ModelReport {
            kind,
            cv,
            selection,
            holdout,
            model,
        });
    }
    Ok(out)
}
