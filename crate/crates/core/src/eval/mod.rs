//! Nested cross-validation: stratified folds, inner grid search on F1,
//! per-fold metrics, final configuration choice and holdout scoring.

mod metrics;

pub use metrics::{auc_pr, auc_roc, confusion_metrics, f1_from, f1_score, metric_set, Confusion, MetricSet};

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::learners::{fit, predict_proba, FittedModel, HyperGrid, HyperParams, LearnerError, ModelKind, Standardizer};
use crate::matrix::Matrix;
use crate::rng::{derive_seed, rng_for, stream};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("labels must be 0 or 1")]
    NonBinary,
    #[error("AUC-ROC needs both classes")]
    SingleClass,
    #[error("AUC-PR needs at least one positive")]
    NoPositives,
    #[error("class {class} has {count} rows, fewer than {folds} folds")]
    TooFewPerClass { class: u8, count: usize, folds: usize },
    #[error("hyperparameter grid is empty")]
    EmptyGrid,
    #[error(transparent)]
    Learner(#[from] LearnerError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CvOptions {
    pub outer: usize,
    pub inner: usize,
    pub seed: u64,
}

impl Default for CvOptions {
    fn default() -> Self {
        CvOptions {
            outer: 10,
            inner: 3,
            seed: 0,
        }
    }
}

/// Fold id for each label: a seeded shuffle within each class, then
/// round-robin, the counter continuing from one class into the next.
pub fn stratified_folds(labels: &[u8], k: usize, seed: u64, path: &[u64]) -> Result<Vec<usize>, EvalError> {
    let mut fold = vec![0; labels.len()];
    let mut counter = 0;
    for class in [0u8, 1] {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        if members.len() < k {
            return Err(EvalError::TooFewPerClass {
                class,
                count: members.len(),
                folds: k,
            });
        }
        let mut p = path.to_vec();
        p.push(u64::from(class));
        members.shuffle(&mut rng_for(seed, &p));
        for i in members {
            fold[i] = counter % k;
            counter += 1;
        }
    }
    Ok(fold)
}

fn split_by_fold(rows: &[usize], fold: &[usize], f: usize) -> (Vec<usize>, Vec<usize>) {
    let (mut train, mut valid) = (Vec::new(), Vec::new());
    for (pos, &r) in rows.iter().enumerate() {
        if fold[pos] == f {
            valid.push(r);
        } else {
            train.push(r);
        }
    }
    (train, valid)
}

fn labels_of(y: &[u8], rows: &[usize]) -> Vec<u8> {
    rows.iter().map(|&i| y[i]).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InnerSearch {
    pub cells: Vec<HyperParams>,
    /// Per cell, the F1 on each inner validation fold.
    pub fold_f1: Vec<Vec<f64>>,
    pub mean_f1: Vec<f64>,
    pub best: usize,
}

impl InnerSearch {
    pub fn best_params(&self) -> &HyperParams {
        &self.cells[self.best]
    }
}

/// Exhaustive grid search on the rows `rows` of `x`; only those rows are
/// read. Ties on mean F1 go to the earlier cell.
pub fn grid_search_inner_on(
    grid: &HyperGrid,
    x: &Matrix,
    y: &[u8],
    rows: &[usize],
    k: usize,
    seed: u64,
    path: &[u64],
) -> Result<InnerSearch, EvalError> {
    let cells = grid.cells();
    if cells.is_empty() {
        return Err(EvalError::EmptyGrid);
    }
    let mut fold_path = vec![stream::INNER_FOLDS];
    fold_path.extend_from_slice(path);
    let fold = stratified_folds(&labels_of(y, rows), k, seed, &fold_path)?;
    let splits: Vec<(Vec<usize>, Vec<usize>)> = (0..k).map(|f| split_by_fold(rows, &fold, f)).collect();
    let fold_f1: Vec<Vec<f64>> = cells
        .par_iter()
        .enumerate()
        .map(|(c, params)| {
            splits
                .iter()
                .enumerate()
                .map(|(f, (train, valid))| {
                    let mut p = vec![stream::FIT];
                    p.extend_from_slice(path);
                    p.extend([f as u64, c as u64]);
                    let model = fit(params, &x.select_rows(train), &labels_of(y, train), derive_seed(seed, &p))?;
                    let proba = predict_proba(&model, &x.select_rows(valid))?;
                    let pred: Vec<u8> = proba.iter().map(|&v| u8::from(v >= 0.5)).collect();
                    Ok(f1_score(&labels_of(y, valid), &pred)?)
                })
                .collect::<Result<Vec<f64>, EvalError>>()
        })
        .collect::<Result<_, _>>()?;
    let mean_f1: Vec<f64> = fold_f1.iter().map(|v| v.iter().sum::<f64>() / v.len() as f64).collect();
    let mut best = 0;
    for c in 1..mean_f1.len() {
        if mean_f1[c] > mean_f1[best] {
            best = c;
        }
    }
    Ok(InnerSearch {
        cells,
        fold_f1,
        mean_f1,
        best,
    })
}

pub fn grid_search_inner(grid: &HyperGrid, x: &Matrix, y: &[u8], k: usize, seed: u64) -> Result<InnerSearch, EvalError> {
    let rows: Vec<usize> = (0..x.nrows()).collect();
    grid_search_inner_on(grid, x, y, &rows, k, seed, &[])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub fold: usize,
    pub n_train: usize,
    pub n_valid: usize,
    pub metrics: MetricSet,
    pub params: HyperParams,
    pub inner: InnerSearch,
    pub standardizer: Option<Standardizer>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvResult {
    pub kind: ModelKind,
    pub folds: Vec<FoldResult>,
    pub mean: MetricSet,
    pub std: MetricSet,
}

/// Mean and sample standard deviation (n − 1) of each metric.
pub fn summarize(sets: &[MetricSet]) -> (MetricSet, MetricSet) {
    let n = sets.len() as f64;
    let mut mean = [0.0; 6];
    for s in sets {
        for (m, v) in mean.iter_mut().zip(s.values()) {
            *m += v / n;
        }
    }
    let mut var = [0.0; 6];
    for s in sets {
        for (k, v) in s.values().iter().enumerate() {
            var[k] += (v - mean[k]).powi(2);
        }
    }
    let denom = (n - 1.0).max(1.0);
    let std = var.map(|v| (v / denom).sqrt());
    (MetricSet::from_values(mean), MetricSet::from_values(std))
}

/// Nested CV restricted to `rows` of `x`. Rows outside `rows` are never
/// read, which is what the leakage tests rely on.
pub fn nested_cv_on(grid: &HyperGrid, x: &Matrix, y: &[u8], rows: &[usize], opts: &CvOptions) -> Result<CvResult, EvalError> {
    let fold = stratified_folds(&labels_of(y, rows), opts.outer, opts.seed, &[stream::OUTER_FOLDS])?;
    let folds: Vec<FoldResult> = (0..opts.outer)
        .into_par_iter()
        .map(|f| {
            let (train, valid) = split_by_fold(rows, &fold, f);
            let inner = grid_search_inner_on(grid, x, y, &train, opts.inner, opts.seed, &[f as u64])?;
            let params = inner.best_params().clone();
            let seed = derive_seed(opts.seed, &[stream::FIT, f as u64, u64::MAX]);
            let model = fit(&params, &x.select_rows(&train), &labels_of(y, &train), seed)?;
            let proba = predict_proba(&model, &x.select_rows(&valid))?;
            let metrics = metric_set(&labels_of(y, &valid), &proba)?;
            Ok(FoldResult {
                fold: f,
                n_train: train.len(),
                n_valid: valid.len(),
                metrics,
                params,
                inner,
                standardizer: model.standardizer,
            })
        })
        .collect::<Result<_, EvalError>>()?;
    let sets: Vec<MetricSet> = folds.iter().map(|f| f.metrics).collect();
    let (mean, std) = summarize(&sets);
    Ok(CvResult {
        kind: grid.kind(),
        folds,
        mean,
        std,
    })
}

pub fn nested_cv(grid: &HyperGrid, x: &Matrix, y: &[u8], opts: &CvOptions) -> Result<CvResult, EvalError> {
    let rows: Vec<usize> = (0..x.nrows()).collect();
    nested_cv_on(grid, x, y, &rows, opts)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionRationale {
    ModalConfig,
    BestMeanInnerF1,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinalSelection {
    pub params: HyperParams,
    pub rationale: SelectionRationale,
    /// Outer folds that chose `params`.
    pub votes: usize,
}

/// A configuration chosen by a strict majority of outer folds wins;
/// otherwise the grid cell with the highest inner F1 averaged over folds.
pub fn select_final(cv: &CvResult) -> FinalSelection {
    let chosen: Vec<&HyperParams> = cv.folds.iter().map(|f| &f.params).collect();
    let votes = |p: &HyperParams| chosen.iter().filter(|&&c| c == p).count();
    if let Some(modal) = chosen.iter().find(|&&p| 2 * votes(p) > chosen.len()) {
        return FinalSelection {
            params: (*modal).clone(),
            rationale: SelectionRationale::ModalConfig,
            votes: votes(modal),
        };
    }
    let cells = &cv.folds[0].inner.cells;
    let n = cv.folds.len() as f64;
    let mean: Vec<f64> = (0..cells.len())
        .map(|c| cv.folds.iter().map(|f| f.inner.mean_f1[c]).sum::<f64>() / n)
        .collect();
    let mut best = 0;
    for c in 1..cells.len() {
        if mean[c] > mean[best] {
            best = c;
        }
    }
    FinalSelection {
        params: cells[best].clone(),
        rationale: SelectionRationale::BestMeanInnerF1,
        votes: votes(&cells[best]),
    }
}

pub fn evaluate_holdout(model: &FittedModel, x_test: &Matrix, y_test: &[u8]) -> Result<MetricSet, EvalError> {
    if x_test.nrows() != y_test.len() {
        return Err(EvalError::LengthMismatch(x_test.nrows(), y_test.len()));
    }
    let proba = predict_proba(model, x_test)?;
    metric_set(y_test, &proba)
}

/// Two-decimal "mean ± std" cell, e.g. `0.83 ± 0.08`.
pub fn format_mean_std(mean: f64, std: f64) -> String {
    format!("{mean:.2} ± {std:.2}")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_for;
    use rand::Rng;

    fn fold_result(params: HyperParams, cells: Vec<HyperParams>, mean_f1: Vec<f64>) -> FoldResult {
        let m = MetricSet::from_values([0.5; 6]);
        FoldResult {
            fold: 0,
            n_train: 0,
            n_valid: 0,
            metrics: m,
            params,
            inner: InnerSearch {
                fold_f1: vec![vec![]; cells.len()],
                cells,
                mean_f1,
                best: 0,
            },
            standardizer: None,
        }
    }

    fn cv_of(folds: Vec<FoldResult>) -> CvResult {
        CvResult {
            kind: ModelKind::Lr,
            folds,
            mean: MetricSet::from_values([0.0; 6]),
            std: MetricSet::from_values([0.0; 6]),
        }
    }

    #[test]
    fn folds_are_stratified_and_deterministic() {
        let labels: Vec<u8> = (0..53).map(|i| u8::from(i % 3 == 0)).collect();
        let f = stratified_folds(&labels, 10, 4, &[1]).unwrap();
        assert_eq!(f, stratified_folds(&labels, 10, 4, &[1]).unwrap());
        for k in 0..10 {
            let size = f.iter().filter(|&&v| v == k).count();
            assert!((5..=6).contains(&size));
            let pos = (0..53).filter(|&i| f[i] == k && labels[i] == 1).count();
            assert!((1..=2).contains(&pos));
        }
        assert!(matches!(
            stratified_folds(&[0, 0, 1], 2, 0, &[]),
            Err(EvalError::TooFewPerClass { class: 1, .. })
        ));
    }

    #[test]
    fn single_cell_grid() {
        let x = Matrix::from_rows(&(0..12).map(|i| [i as f64]).collect::<Vec<_>>());
        let y: Vec<u8> = (0..12).map(|i| u8::from(i >= 6)).collect();
        let p = HyperParams::Dt { max_depth: Some(2), min_leaf: 1 };
        let s = grid_search_inner(&HyperGrid::single(&p), &x, &y, 3, 0).unwrap();
        assert_eq!(s.best_params(), &p);
    }

    #[test]
    fn planted_depth_three() {
        // y = 1 iff x0 > 0.5 and x1 > 0.5: a stump cannot express it.
        let mut rng = rng_for(9, &[]);
        let rows: Vec<[f64; 2]> = (0..120).map(|_| [rng.random(), rng.random()]).collect();
        let y: Vec<u8> = rows.iter().map(|r| u8::from(r[0] > 0.5 && r[1] > 0.5)).collect();
        let grid = HyperGrid::Dt {
            max_depth: vec![Some(1), Some(3)],
            min_leaf: vec![1],
        };
        let s = grid_search_inner(&grid, &Matrix::from_rows(&rows), &y, 3, 1).unwrap();
        assert_eq!(s.best_params(), &HyperParams::Dt { max_depth: Some(3), min_leaf: 1 });
    }

    #[test]
    fn ties_go_to_first_cell() {
        let x = Matrix::from_rows(&(0..12).map(|i| [i as f64]).collect::<Vec<_>>());
        let y: Vec<u8> = (0..12).map(|i| u8::from(i >= 6)).collect();
        // Both depths separate a threshold problem perfectly.
        let grid = HyperGrid::Dt {
            max_depth: vec![Some(4), Some(2)],
            min_leaf: vec![1],
        };
        let s = grid_search_inner(&grid, &x, &y, 3, 0).unwrap();
        assert_eq!(s.mean_f1[0], s.mean_f1[1]);
        assert_eq!(s.best, 0);
    }

    #[test]
    fn select_final_rules() {
        let a = HyperParams::Lr { lambda: 0.1 };
        let b = HyperParams::Lr { lambda: 1.0 };
        let c = HyperParams::Lr { lambda: 0.01 };
        let cells = vec![a.clone(), b.clone(), c.clone()];
        let modal: Vec<FoldResult> = (0..10)
            .map(|i| fold_result(if i < 7 { a.clone() } else { b.clone() }, cells.clone(), vec![0.1, 0.9, 0.5]))
            .collect();
        let s = select_final(&cv_of(modal));
        assert_eq!((s.params, s.rationale, s.votes), (a.clone(), SelectionRationale::ModalConfig, 7));

        let tied: Vec<FoldResult> = (0..10)
            .map(|i| fold_result(if i < 5 { a.clone() } else { b.clone() }, cells.clone(), vec![0.6, 0.7, 0.1]))
            .collect();
        let s = select_final(&cv_of(tied));
        assert_eq!((s.params, s.rationale), (b.clone(), SelectionRationale::BestMeanInnerF1));

        let distinct: Vec<FoldResult> = [a.clone(), b.clone(), c.clone()]
            .into_iter()
            .map(|p| fold_result(p, cells.clone(), vec![0.2, 0.3, 0.8]))
            .collect();
        assert_eq!(select_final(&cv_of(distinct)).params, c);
    }

    #[test]
    fn sample_std_and_bounds() {
        let sets: Vec<MetricSet> = [0.2, 0.4, 0.9].iter().map(|&v| MetricSet::from_values([v; 6])).collect();
        let (mean, std) = summarize(&sets);
        assert!((mean.f1 - 0.5).abs() < 1e-12);
        let expected = ((0.09 + 0.01 + 0.16) / 2.0f64).sqrt();
        assert!((std.f1 - expected).abs() < 1e-12);
    }

    #[test]
    fn report_format() {
        assert_eq!(format_mean_std(0.8312, 0.0849), "0.83 ± 0.08");
        assert_eq!(format_mean_std(1.0, 0.0), "1.00 ± 0.00");
    }

    fn noisy(n: usize, seed: u64) -> (Matrix, Vec<u8>) {
        let mut rng = rng_for(seed, &[]);
        let rows: Vec<[f64; 3]> = (0..n).map(|_| [rng.random(), rng.random(), rng.random()]).collect();
        let y = rows.iter().map(|r| u8::from(r[0] + 0.3 * rng.random::<f64>() > 0.65)).collect();
        (Matrix::from_rows(&rows), y)
    }

    #[test]
    fn nested_cv_is_deterministic_and_bounded() {
        let (x, y) = noisy(100, 1);
        let grid = HyperGrid::Lr { lambda: vec![0.01, 1.0] };
        let opts = CvOptions { seed: 5, ..CvOptions::default() };
        let a = nested_cv(&grid, &x, &y, &opts).unwrap();
        assert_eq!(a, nested_cv(&grid, &x, &y, &opts).unwrap());
        assert_eq!(a.folds.len(), 10);
        for k in 0..6 {
            let vals: Vec<f64> = a.folds.iter().map(|f| f.metrics.values()[k]).collect();
            let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            assert!(a.mean.values()[k] >= lo - 1e-12 && a.mean.values()[k] <= hi + 1e-12);
        }
        assert!(a.mean.auc_roc > 0.8);
    }

    #[test]
    fn permuted_labels_give_chance_auc() {
        let (x, mut y) = noisy(200, 2);
        y.shuffle(&mut rng_for(77, &[]));
        let grid = HyperGrid::Lr { lambda: vec![0.1] };
        let cv = nested_cv(&grid, &x, &y, &CvOptions { seed: 3, ..CvOptions::default() }).unwrap();
        assert!((0.4..=0.6).contains(&cv.mean.auc_roc), "{}", cv.mean.auc_roc);
    }

    #[test]
    fn outside_rows_never_read() {
        let (x, y) = noisy(120, 3);
        let rows: Vec<usize> = (0..100).collect();
        let grid = HyperGrid::Lr { lambda: vec![0.01, 1.0] };
        let opts = CvOptions { seed: 8, ..CvOptions::default() };
        let a = nested_cv_on(&grid, &x, &y, &rows, &opts).unwrap();
        let mut x2 = x.clone();
        let mut y2 = y.clone();
        for i in 100..120 {
            x2.set(i, 0, -1e9);
            y2[i] = 1 - y2[i];
        }
        assert_eq!(a, nested_cv_on(&grid, &x2, &y2, &rows, &opts).unwrap());
    }

    #[test]
    fn holdout_examples() {
        let x = Matrix::from_rows(&(0..10).map(|i| [i as f64]).collect::<Vec<_>>());
        let y: Vec<u8> = (0..10).map(|i| u8::from(i >= 5)).collect();
        let m = fit(&HyperParams::Dt { max_depth: Some(1), min_leaf: 1 }, &x, &y, 0).unwrap();
        assert_eq!(evaluate_holdout(&m, &x, &y).unwrap().values(), [1.0; 6]);
        let y7: Vec<u8> = (0..10).map(|i| u8::from(i >= 3)).collect();
        let constant = fit(&HyperParams::Dt { max_depth: Some(1), min_leaf: 5 }, &Matrix::from_rows(&[[0.0]; 10]), &y7, 0).unwrap();
        let ms = evaluate_holdout(&constant, &x, &y7).unwrap();
        assert!((ms.accuracy - 0.7).abs() < 1e-12);
    }
}
