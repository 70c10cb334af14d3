use super::{ModelReport, Result};
use crate::config::{ExplainRows, RunConfig};
use crate::dataset::{canonical_columns, FeatureTable, SplitIndices};
use crate::learners::{FittedModel, ModelKind};
use crate::matrix::Matrix;
use crate::rng::{derive_seed, stream};
use crate::shap::{
    background_sample, beeswarm_data, explain, rank_importance, trend_direction, weighted_cross_model_summary,
    Attribution, BeeswarmPoint, Direction, ExplainOptions, ImportanceRanking, ModelTrends, TrendSummary,
};

#[derive(Debug, Clone, PartialEq)]
pub struct ModelExplanation {
    pub kind: ModelKind,
    pub f1: f64,
    pub attribution: Attribution,
    /// The explained rows.
    pub x: Matrix,
    pub ranking: ImportanceRanking,
    pub directions: Vec<Direction>,
    pub beeswarm: Vec<BeeswarmPoint>,
    pub ridged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Explanations {
    pub models: Vec<ModelExplanation>,
    pub summary: TrendSummary,
}

impl Explanations {
    pub fn get(&self, kind: ModelKind) -> Option<&ModelExplanation> {
        self.models.iter().find(|m| m.kind == kind)
    }
}

/// Explain each model against a background drawn from the training rows
/// and aggregate the trends. `reports` supplies each model and the holdout
/// F1 used as its weight.
pub fn explain_models(
    table: &FeatureTable,
    split: &SplitIndices,
    reports: &[ModelReport],
    cfg: &RunConfig,
    seed: u64,
) -> Result<Explanations> {
    let pairs: Vec<(&FittedModel, f64)> = reports.iter().map(|r| (&r.model, r.holdout.f1)).collect();
    explain_fitted(table, split, &pairs, cfg, seed)
}

pub(crate) fn explain_fitted(
    table: &FeatureTable,
    split: &SplitIndices,
    models: &[(&FittedModel, f64)],
    cfg: &RunConfig,
    seed: u64,
) -> Result<Explanations> {
    let names = table.feature_names();
    let background = background_sample(&table.x.select_rows(&split.train), cfg.explain.background, seed);
    let x = match cfg.explain.rows {
        ExplainRows::Test => table.x.select_rows(&split.test),
        ExplainRows::All => table.x.clone(),
    };
    let mut out = Vec::new();
    for &(model, f1) in models {
        model.check_schema(&x)?;
        let slot = ModelKind::ALL.iter().position(|&k| k == model.kind).expect("kind listed") as u64;
        let opts = ExplainOptions {
            kernel_coalitions: cfg.explain.coalitions,
            seed: derive_seed(seed, &[stream::KERNEL, slot]),
        };
        let (attribution, ridged) = explain(model, &x, &background, &names, &opts)?;
        if ridged {
            log::warn!("{}: kernel solve needed a ridge term", model.kind);
        }
        out.push(ModelExplanation {
            kind: model.kind,
            f1,
            ranking: rank_importance(&attribution)?,
            directions: trend_direction(&attribution, &x, cfg.explain.summary.trend_threshold)?,
            beeswarm: beeswarm_data(&attribution, &x)?,
            attribution,
            x: x.clone(),
            ridged,
        });
    }
    let trends: Vec<ModelTrends> = out
        .iter()
        .map(|m| ModelTrends {
            model: m.kind.name().to_string(),
            f1: m.f1,
            ranking: m.ranking.clone(),
            directions: names.iter().cloned().zip(m.directions.iter().copied()).collect(),
        })
        .collect();
    let universe: Vec<String> = canonical_columns().into_iter().map(|c| c.name).collect();
    let summary = weighted_cross_model_summary(&trends, &universe, &cfg.explain.summary);
    Ok(Explanations { models: out, summary })
}
