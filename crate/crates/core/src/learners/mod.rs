//! The five classifier families behind one `fit` / `predict_proba` API.
//!
//! Logistic regression and the MLP see standardized inputs; the stats are
//! estimated on the training rows and stored with the model. Tree models
//! work on raw values.

pub mod boost;
pub mod forest;
pub mod logistic;
pub mod mlp;
mod params;
mod standardize;
pub mod tree;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use params::{HyperGrid, HyperParams};
pub use standardize::Standardizer;

use crate::matrix::Matrix;

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LearnerError {
    #[error("training labels contain a single class")]
    SingleClassTraining,
    #[error("non-finite feature value at row {row}, column {col}")]
    NonFiniteFeature { row: usize, col: usize },
    #[error("model expects {expected} features, got {actual}")]
    SchemaMismatch { expected: usize, actual: usize },
    #[error("{rows} rows but {labels} labels")]
    LengthMismatch { rows: usize, labels: usize },
    #[error("labels must be 0 or 1")]
    NonBinaryLabel,
    #[error("invalid hyperparameters: {0}")]
    InvalidParams(String),
    #[error("model json: {0}")]
    Json(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ModelKind {
    #[serde(rename = "LR")]
    Lr,
    #[serde(rename = "DT")]
    Dt,
    #[serde(rename = "RF")]
    Rf,
    #[serde(rename = "GB")]
    Gb,
    #[serde(rename = "MLP")]
    Mlp,
}

impl ModelKind {
    pub const ALL: [ModelKind; 5] = [
        ModelKind::Lr,
        ModelKind::Dt,
        ModelKind::Rf,
        ModelKind::Gb,
        ModelKind::Mlp,
    ];

    pub fn needs_standardization(self) -> bool {
        matches!(self, ModelKind::Lr | ModelKind::Mlp)
    }

    pub fn is_tree(self) -> bool {
        matches!(self, ModelKind::Dt | ModelKind::Rf | ModelKind::Gb)
    }

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Lr => "LR",
            ModelKind::Dt => "DT",
            ModelKind::Rf => "RF",
            ModelKind::Gb => "GB",
            ModelKind::Mlp => "MLP",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name().eq_ignore_ascii_case(s))
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ModelState {
    Logistic(logistic::Logistic),
    Tree(tree::Tree),
    Forest(forest::Forest),
    Boosted(boost::Boosted),
    Mlp(mlp::Mlp),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedModel {
    pub format_version: u32,
    pub kind: ModelKind,
    pub params: HyperParams,
    pub n_features: usize,
    pub standardizer: Option<Standardizer>,
    pub seed: u64,
    pub state: ModelState,
}

fn check_training(x: &Matrix, y: &[u8]) -> Result<(), LearnerError> {
    if x.nrows() != y.len() {
        return Err(LearnerError::LengthMismatch {
            rows: x.nrows(),
            labels: y.len(),
        });
    }
    if y.iter().any(|&v| v > 1) {
        return Err(LearnerError::NonBinaryLabel);
    }
    check_finite(x)?;
    if !(y.contains(&0) && y.contains(&1)) {
        return Err(LearnerError::SingleClassTraining);
    }
    Ok(())
}

fn check_finite(x: &Matrix) -> Result<(), LearnerError> {
    for (row, r) in x.rows_iter().enumerate() {
        if let Some(col) = r.iter().position(|v| !v.is_finite()) {
            return Err(LearnerError::NonFiniteFeature { row, col });
        }
    }
    Ok(())
}

/// Train one model. Deterministic in `(x, y, params, seed)` regardless of
/// how many threads rayon uses.
pub fn fit(params: &HyperParams, x: &Matrix, y: &[u8], seed: u64) -> Result<FittedModel, LearnerError> {
    params.validate()?;
    check_training(x, y)?;
    let kind = params.kind();
    let yf: Vec<f64> = y.iter().map(|&v| f64::from(v)).collect();
    let standardizer = kind.needs_standardization().then(|| Standardizer::fit(x));
    let xs = match &standardizer {
        Some(s) => s.transform(x),
        None => x.clone(),
    };
    let state = match params {
        HyperParams::Lr { lambda } => ModelState::Logistic(logistic::fit(&xs, &yf, *lambda)),
        HyperParams::Dt { max_depth, min_leaf } => {
            ModelState::Tree(tree::fit_classifier(&xs, &yf, *max_depth, *min_leaf))
        }
        HyperParams::Rf { trees, max_depth, min_leaf } => {
            ModelState::Forest(forest::fit(&xs, &yf, *trees, *max_depth, *min_leaf, seed))
        }
        HyperParams::Gb { stages, shrinkage, max_depth } => {
            ModelState::Boosted(boost::fit(&xs, &yf, *stages, *shrinkage, *max_depth))
        }
        HyperParams::Mlp { hidden, learning_rate, epochs } => {
            ModelState::Mlp(mlp::fit(&xs, &yf, hidden, *learning_rate, *epochs, seed))
        }
    };
    Ok(FittedModel {
        format_version: MODEL_FORMAT_VERSION,
        kind,
        params: params.clone(),
        n_features: x.ncols(),
        standardizer,
        seed,
        state,
    })
}

impl FittedModel {
    /// Probability of class 1 for one raw feature row.
    pub fn proba_row(&self, row: &[f64]) -> f64 {
        match &self.standardizer {
            Some(s) => {
                let mut buf = vec![0.0; row.len()];
                s.apply_row(row, &mut buf);
                self.proba_standardized(&buf)
            }
            None => self.proba_standardized(row),
        }
    }

    fn proba_standardized(&self, row: &[f64]) -> f64 {
        match &self.state {
            ModelState::Logistic(m) => m.proba(row),
            ModelState::Tree(t) => t.predict(row),
            ModelState::Forest(f) => f.proba(row),
            ModelState::Boosted(b) => b.proba(row),
            ModelState::Mlp(n) => n.proba(row),
        }
    }

    /// Probabilities for every row of `x`; the schema is not checked.
    pub fn proba_batch(&self, x: &Matrix) -> Vec<f64> {
        if let ModelState::Mlp(net) = &self.state {
            let logits = match &self.standardizer {
                Some(s) => mlp::logits(net, &s.transform(x)),
                None => mlp::logits(net, x),
            };
            return logits.into_iter().map(logistic::sigmoid).collect();
        }
        x.rows_iter().map(|r| self.proba_row(r)).collect()
    }

    pub fn check_schema(&self, x: &Matrix) -> Result<(), LearnerError> {
        if x.ncols() != self.n_features {
            return Err(LearnerError::SchemaMismatch {
                expected: self.n_features,
                actual: x.ncols(),
            });
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, LearnerError> {
        let m: FittedModel = serde_json::from_str(s).map_err(|e| LearnerError::Json(e.to_string()))?;
        if m.format_version != MODEL_FORMAT_VERSION {
            return Err(LearnerError::Json(format!(
                "unsupported format_version {}",
                m.format_version
            )));
        }
        Ok(m)
    }
}

pub fn predict_proba(model: &FittedModel, x: &Matrix) -> Result<Vec<f64>, LearnerError> {
    model.check_schema(x)?;
    Ok(model.proba_batch(x))
}

/// Class 1 iff probability ≥ `threshold`.
pub fn predict(model: &FittedModel, x: &Matrix, threshold: f64) -> Result<Vec<u8>, LearnerError> {
    Ok(predict_proba(model, x)?
        .into_iter()
        .map(|p| u8::from(p >= threshold))
        .collect())
}
