use serde::{Deserialize, Serialize};

use super::logistic::{sigmoid, softplus};
use super::tree::{build, Criterion, Presorted, Tree, TreeConfig};
use crate::matrix::Matrix;

const MAX_HALVINGS: usize = 40;

/// Stagewise binomial-deviance boosting. Leaf values already include the
/// shrinkage, so the margin is `init + Σ tree(x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Boosted {
    pub init: f64,
    pub trees: Vec<Tree>,
}

/// Mean binomial deviance of margins `f` against labels.
pub fn deviance(f: &[f64], y: &[f64]) -> f64 {
    2.0 * f.iter().zip(y).map(|(&fi, &yi)| softplus(fi) - yi * fi).sum::<f64>() / f.len() as f64
}

fn leaf_loss(rows: &[usize], f: &[f64], y: &[f64], step: f64) -> f64 {
    rows.iter().map(|&i| softplus(f[i] + step) - y[i] * (f[i] + step)).sum()
}

pub fn fit(x: &Matrix, y: &[f64], stages: usize, shrinkage: f64, max_depth: usize) -> Boosted {
    fit_traced(x, y, stages, shrinkage, max_depth).0
}

/// Like [`fit`], also returning the training deviance after each stage
/// (index 0 is the initial constant model).
pub fn fit_traced(
    x: &Matrix,
    y: &[f64],
    stages: usize,
    shrinkage: f64,
    max_depth: usize,
) -> (Boosted, Vec<f64>) {
    let n = x.nrows();
    let p0 = (y.iter().sum::<f64>() / n as f64).clamp(1e-12, 1.0 - 1e-12);
    let init = (p0 / (1.0 - p0)).ln();
    let presorted = Presorted::new(x);
    let weight = vec![1.0; n];
    let cfg = TreeConfig {
        max_depth: Some(max_depth),
        min_leaf: 1.0,
        max_features: None,
        criterion: Criterion::Variance,
    };
    let mut f = vec![init; n];
    let mut trace = vec![deviance(&f, y)];
    let mut trees = Vec::with_capacity(stages);
    let mut residual = vec![0.0; n];
    for _ in 0..stages {
        for i in 0..n {
            residual[i] = y[i] - sigmoid(f[i]);
        }
        let mut tree = build(x, &presorted, &residual, &weight, cfg, None, |rows| {
            let num: f64 = rows.iter().map(|&i| residual[i]).sum();
            let den: f64 = rows
                .iter()
                .map(|&i| {
                    let p = sigmoid(f[i]);
                    p * (1.0 - p)
                })
                .sum();
            if den <= 0.0 || !num.is_finite() {
                return 0.0;
            }
            let mut step = shrinkage * num / den;
            let before = leaf_loss(rows, &f, y, 0.0);
            for _ in 0..MAX_HALVINGS {
                if leaf_loss(rows, &f, y, step) <= before {
                    return step;
                }
                step *= 0.5;
            }
            0.0
        });
        for node in &mut tree.nodes {
            if node.split.is_some() {
                node.value = 0.0;
            }
        }
        for i in 0..n {
            f[i] += tree.predict(x.row(i));
        }
        trace.push(deviance(&f, y));
        trees.push(tree);
    }
    (Boosted { init, trees }, trace)
}

impl Boosted {
    pub fn margin(&self, row: &[f64]) -> f64 {
        self.init + self.trees.iter().map(|t| t.predict(row)).sum::<f64>()
    }

    pub fn proba(&self, row: &[f64]) -> f64 {
        sigmoid(self.margin(row))
    }
}
