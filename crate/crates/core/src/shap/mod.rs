//! Shapley attributions under the interventional value function
//! v(S) = mean over background rows b of f(x_S, b_rest), on the
//! probability scale for every model kind.

mod kernel;
mod summary;
mod tree;

pub use kernel::{kernel_shap, KernelOutput};
pub use summary::{
    beeswarm_data, rank_importance, trend_direction, weighted_cross_model_summary, BeeswarmPoint, Direction,
    ImportanceRanking, ModelTrends, SummaryOptions, TrendCell, TrendSummary,
};
pub use tree::{tree_shap, tree_shap_pair};

use rand::seq::index::sample;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::learners::{FittedModel, ModelKind};
use crate::matrix::Matrix;
use crate::rng::{rng_for, stream};

pub const MAX_EXACT_FEATURES: usize = 15;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ShapError {
    #[error("exact enumeration supports at most {MAX_EXACT_FEATURES} features, got {0}")]
    TooManyFeatures(usize),
    #[error("background set is empty")]
    EmptyBackground,
    #[error("kernel explainer needs at least 2 features and 2·d coalitions")]
    TooFewCoalitions,
    #[error("tree explainer does not support {0}")]
    UnsupportedKind(ModelKind),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("empty attribution")]
    Empty,
}

/// Something that maps rows of raw features to probabilities.
pub trait Predictor: Sync {
    fn predict_batch(&self, x: &Matrix) -> Vec<f64>;
}

impl Predictor for FittedModel {
    fn predict_batch(&self, x: &Matrix) -> Vec<f64> {
        self.proba_batch(x)
    }
}

/// Adapts a per-row closure.
pub struct FnPredictor<F>(pub F);

impl<F: Fn(&[f64]) -> f64 + Sync> Predictor for FnPredictor<F> {
    fn predict_batch(&self, x: &Matrix) -> Vec<f64> {
        x.rows_iter().map(|r| (self.0)(r)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Attribution {
    /// n × d Shapley values in probability units.
    pub phi: Matrix,
    pub base_value: f64,
    pub feature_names: Vec<String>,
}

impl Attribution {
    pub fn to_csv(&self) -> String {
        let mut out = self.feature_names.join(",");
        out.push_str(",base_value\n");
        for row in self.phi.rows_iter() {
            for v in row {
                out.push_str(&format!("{v},"));
            }
            out.push_str(&format!("{}\n", self.base_value));
        }
        out
    }
}

/// Shapley weight |S|!(n−|S|−1)!/n! indexed by |S|.
pub(crate) fn shapley_weights(n: usize) -> Vec<f64> {
    // Computed as 1 / (n · C(n−1, s)) to stay finite for larger n.
    (0..n)
        .map(|s| {
            let mut c = 1.0;
            for k in 0..s {
                c = c * (n - 1 - k) as f64 / (k + 1) as f64;
            }
            1.0 / (n as f64 * c)
        })
        .collect()
}

/// v(S) for every coalition bitmask S over `d` features (bit j = feature j).
pub(crate) fn coalition_values(model: &dyn Predictor, x: &[f64], background: &Matrix, masks: &[u32]) -> Vec<f64> {
    let d = x.len();
    let nb = background.nrows();
    let chunk = (4096 / nb).max(1);
    let mut out = Vec::with_capacity(masks.len());
    for group in masks.chunks(chunk) {
        let mut data = Vec::with_capacity(group.len() * nb * d);
        for &m in group {
            for b in background.rows_iter() {
                for j in 0..d {
                    data.push(if m >> j & 1 == 1 { x[j] } else { b[j] });
                }
            }
        }
        let preds = model.predict_batch(&Matrix::from_vec(group.len() * nb, d, data));
        for c in preds.chunks(nb) {
            out.push(c.iter().sum::<f64>() / nb as f64);
        }
    }
    out
}

/// Brute-force Shapley values by enumerating all 2^d coalitions.
pub fn exact_shapley(model: &dyn Predictor, x: &[f64], background: &Matrix) -> Result<(Vec<f64>, f64), ShapError> {
    let d = x.len();
    if d > MAX_EXACT_FEATURES {
        return Err(ShapError::TooManyFeatures(d));
    }
    if background.nrows() == 0 {
        return Err(ShapError::EmptyBackground);
    }
    let masks: Vec<u32> = (0..1u32 << d).collect();
    let v = coalition_values(model, x, background, &masks);
    let w = shapley_weights(d);
    let mut phi = vec![0.0; d];
    for s in 0..1usize << d {
        let size = (s as u32).count_ones() as usize;
        for (j, p) in phi.iter_mut().enumerate() {
            if s >> j & 1 == 0 {
                *p += w[size] * (v[s | 1 << j] - v[s]);
            }
        }
    }
    Ok((phi, v[0]))
}

/// Up to `max` training rows drawn without replacement, in index order.
pub fn background_sample(x: &Matrix, max: usize, seed: u64) -> Matrix {
    if x.nrows() <= max {
        return x.clone();
    }
    let mut idx = sample(&mut rng_for(seed, &[stream::BACKGROUND]), x.nrows(), max).into_vec();
    idx.sort_unstable();
    x.select_rows(&idx)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExplainOptions {
    pub kernel_coalitions: usize,
    pub seed: u64,
}

/// Explain every row of `x` with the kind-appropriate method: tree SHAP for
/// DT/RF/GB, kernel SHAP for LR/MLP. Returns the attribution and whether
/// any kernel solve needed a ridge.
pub fn explain(
    model: &FittedModel,
    x: &Matrix,
    background: &Matrix,
    feature_names: &[String],
    opts: &ExplainOptions,
) -> Result<(Attribution, bool), ShapError> {
    if x.ncols() != background.ncols() || feature_names.len() != x.ncols() {
        return Err(ShapError::ShapeMismatch(format!(
            "{} columns, {} background columns, {} names",
            x.ncols(),
            background.ncols(),
            feature_names.len()
        )));
    }
    let d = x.ncols();
    let mut phi = Matrix::zeros(x.nrows(), d);
    let mut base = 0.0;
    let mut ridged = false;
    for i in 0..x.nrows() {
        let (row_phi, b) = if model.kind.is_tree() {
            tree_shap(model, x.row(i), background)?
        } else {
            let out = kernel_shap(model, x.row(i), background, opts.kernel_coalitions, opts.seed.wrapping_add(i as u64))?;
            ridged |= out.ridged;
            (out.phi, out.base)
        };
        phi.row_mut(i).copy_from_slice(&row_phi);
        base = b;
    }
    Ok((
        Attribution {
            phi,
            base_value: base,
            feature_names: feature_names.to_vec(),
        },
        ridged,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_to_one_per_player() {
        for n in 1..12 {
            let w = shapley_weights(n);
            // Σ_S∌j w(|S|) = Σ_s C(n−1, s) w(s) = 1.
            let mut total = 0.0;
            let mut c = 1.0;
            for s in 0..n {
                total += c * w[s];
                c = c * (n - 1 - s) as f64 / (s + 1) as f64;
            }
            assert!((total - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn linear_closed_form() {
        let w = [0.5, -2.0, 0.0, 1.5];
        let f = FnPredictor(|r: &[f64]| r.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>());
        let bg = Matrix::from_rows(&[[0.0, 1.0, 2.0, 3.0], [1.0, -1.0, 0.5, 0.0], [4.0, 2.0, 2.0, 1.0]]);
        let x = [1.0, 2.0, 3.0, 4.0];
        let (phi, base) = exact_shapley(&f, &x, &bg).unwrap();
        for j in 0..4 {
            let mean: f64 = bg.column(j).iter().sum::<f64>() / 3.0;
            assert!((phi[j] - w[j] * (x[j] - mean)).abs() < 1e-12);
        }
        assert_eq!(phi[2], 0.0);
        let fx: f64 = x.iter().zip(&w).map(|(a, b)| a * b).sum();
        assert!((base + phi.iter().sum::<f64>() - fx).abs() < 1e-12);
    }

    #[test]
    fn one_player() {
        let f = FnPredictor(|r: &[f64]| r[0] * r[0]);
        let bg = Matrix::from_rows(&[[1.0], [3.0]]);
        let (phi, base) = exact_shapley(&f, &[2.0], &bg).unwrap();
        assert_eq!(base, 5.0);
        assert_eq!(phi[0], 4.0 - 5.0);
    }

    #[test]
    fn guards() {
        let f = FnPredictor(|_: &[f64]| 0.0);
        assert_eq!(exact_shapley(&f, &[0.0; 16], &Matrix::zeros(1, 16)), Err(ShapError::TooManyFeatures(16)));
        assert_eq!(exact_shapley(&f, &[0.0; 2], &Matrix::zeros(0, 2)), Err(ShapError::EmptyBackground));
    }

    #[test]
    fn background_is_seeded_subset() {
        let x = Matrix::from_rows(&(0..300).map(|i| [i as f64]).collect::<Vec<_>>());
        let a = background_sample(&x, 100, 4);
        assert_eq!(a.nrows(), 100);
        assert_eq!(a, background_sample(&x, 100, 4));
        assert_eq!(background_sample(&x, 500, 4).nrows(), 300);
    }
}
