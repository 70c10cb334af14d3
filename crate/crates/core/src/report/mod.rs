//! Versioned JSON reports, the mean ± std table and SVG figures.

mod svg;

use serde::{Deserialize, Serialize};

pub use svg::{beeswarm_svg, bubble_svg, direction_color, top_features_svg, DIRECT_COLOR, INVERSE_COLOR, NONE_COLOR};

use crate::eval::{format_mean_std, MetricSet, SelectionRationale};
use crate::learners::{HyperParams, ModelKind};
use crate::pipeline::{Explanations, ModelReport, FORMAT_VERSION};
use crate::shap::{Direction, ImportanceRanking, TrendCell, TrendSummary};

/// Each metric as a two-decimal "mean ± std" string.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MeanStdText {
    pub accuracy: String,
    pub precision: String,
    pub recall: String,
    pub f1: String,
    pub auc_roc: String,
    pub auc_pr: String,
}

impl MeanStdText {
    pub fn new(mean: &MetricSet, std: &MetricSet) -> Self {
        let [a, p, r, f, roc, pr] = std::array::from_fn(|k| format_mean_std(mean.values()[k], std.values()[k]));
        MeanStdText {
            accuracy: a,
            precision: p,
            recall: r,
            f1: f,
            auc_roc: roc,
            auc_pr: pr,
        }
    }

    pub fn cells(&self) -> [&str; 6] {
        [&self.accuracy, &self.precision, &self.recall, &self.f1, &self.auc_roc, &self.auc_pr]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldBlock {
    pub fold: usize,
    pub n_train: usize,
    pub n_valid: usize,
    pub params: HyperParams,
    pub inner_best_f1: f64,
    pub metrics: MetricSet,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NcvBlock {
    pub per_fold: Vec<FoldBlock>,
    pub mean: MetricSet,
    pub std: MetricSet,
    pub mean_std: MeanStdText,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionBlock {
    pub rationale: SelectionRationale,
    pub votes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelBlock {
    pub kind: ModelKind,
    pub ncv: NcvBlock,
    pub final_params: HyperParams,
    pub final_params_text: String,
    pub selection: SelectionBlock,
    pub holdout: MetricSet,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub format_version: u32,
    pub seed: u64,
    pub cohort: String,
    pub outer_folds: usize,
    pub inner_folds: usize,
    pub train_rows: usize,
    pub test_rows: usize,
    pub models: Vec<ModelBlock>,
}

impl EvaluationReport {
    pub fn new(reports: &[ModelReport], seed: u64, cohort: &str, train_rows: usize, test_rows: usize) -> Self {
        let models = reports
            .iter()
            .map(|r| ModelBlock {
                kind: r.kind,
                ncv: NcvBlock {
                    per_fold: r
                        .cv
                        .folds
                        .iter()
                        .map(|f| FoldBlock {
                            fold: f.fold,
                            n_train: f.n_train,
                            n_valid: f.n_valid,
                            params: f.params.clone(),
                            inner_best_f1: f.inner.mean_f1[f.inner.best],
                            metrics: f.metrics,
                        })
                        .collect(),
                    mean: r.cv.mean,
                    std: r.cv.std,
                    mean_std: MeanStdText::new(&r.cv.mean, &r.cv.std),
                },
                final_params: r.selection.params.clone(),
                final_params_text: r.selection.params.to_string(),
                selection: SelectionBlock {
                    rationale: r.selection.rationale,
                    votes: r.selection.votes,
                },
                holdout: r.holdout,
            })
            .collect();
        EvaluationReport {
            format_version: FORMAT_VERSION,
            seed,
            cohort: cohort.to_string(),
            outer_folds: reports.first().map_or(0, |r| r.cv.folds.len()),
            inner_folds: reports
                .first()
                .and_then(|r| r.cv.folds.first())
                .map_or(0, |f| f.inner.fold_f1.first().map_or(0, Vec::len)),
            train_rows,
            test_rows,
            models,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Markdown tables: nested-CV "mean ± std" per model, then holdout.
    pub fn render_table(&self) -> String {
        let header = "| Model | Accuracy | Precision | Recall | F1 | AUC-ROC | AUC-PR |\n|---|---|---|---|---|---|---|\n";
        let mut out = format!("Nested CV ({} outer folds), mean ± std\n\n{header}", self.outer_folds);
        for m in &self.models {
            out.push_str(&format!("| {} | {} |\n", m.kind, m.ncv.mean_std.cells().join(" | ")));
        }
        out.push_str(&format!("\nHoldout ({} rows)\n\n{header}", self.test_rows));
        for m in &self.models {
            let cells: Vec<String> = m.holdout.values().iter().map(|v| format!("{v:.2}")).collect();
            out.push_str(&format!("| {} | {} |\n", m.kind, cells.join(" | ")));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelTrendBlock {
    pub kind: ModelKind,
    pub f1: f64,
    pub ranking: ImportanceRanking,
    pub directions: Vec<(String, Direction)>,
    pub kernel_ridge_used: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplanationReport {
    pub format_version: u32,
    pub seed: u64,
    pub explained_rows: usize,
    pub direction_rule: String,
    pub top_k: usize,
    pub models: Vec<ModelTrendBlock>,
    pub features: Vec<String>,
    pub cells: Vec<TrendCell>,
    /// Features ordered by summed impact weight across models.
    pub top_features: Vec<(String, f64)>,
}

/// Summed impact weight per feature, descending, zero totals left out.
/// Ties keep the summary's feature order.
pub fn top_features(summary: &TrendSummary, k: usize) -> Vec<(String, f64)> {
    let mut totals: Vec<(String, f64)> = summary
        .features
        .iter()
        .map(|f| {
            let w = summary.cells.iter().filter(|c| &c.feature == f).map(|c| c.impact_weight).sum();
            (f.clone(), w)
        })
        .filter(|(_, w)| *w > 0.0)
        .collect();
    totals.sort_by(|a, b| b.1.total_cmp(&a.1));
    totals.truncate(k);
    totals
}

impl ExplanationReport {
    pub fn new(ex: &Explanations, seed: u64, threshold: f64, top_k: usize) -> Self {
        ExplanationReport {
            format_version: FORMAT_VERSION,
            seed,
            explained_rows: ex.models.first().map_or(0, |m| m.x.nrows()),
            direction_rule: format!(
                "spearman(feature value, phi) >= {threshold} is direct, <= -{threshold} inverse, else none; \
                 only features in a model's top {top_k} report a direction"
            ),
            top_k,
            models: ex
                .models
                .iter()
                .map(|m| ModelTrendBlock {
                    kind: m.kind,
                    f1: m.f1,
                    ranking: m.ranking.clone(),
                    directions: m.attribution.feature_names.iter().cloned().zip(m.directions.iter().copied()).collect(),
                    kernel_ridge_used: m.ridged,
                })
                .collect(),
            features: ex.summary.features.clone(),
            cells: ex.summary.cells.clone(),
            top_features: top_features(&ex.summary, top_k),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}
