use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::{build, Criterion, Presorted, Tree, TreeConfig};
use crate::matrix::Matrix;
use crate::rng::{rng_for, stream};

/// Bagged CART classifiers. Each leaf stores its tree's vote (0 or 1); the
/// forest probability is the fraction of trees voting 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Forest {
    pub trees: Vec<Tree>,
}

pub fn max_features(d: usize) -> usize {
    ((d as f64).sqrt().ceil() as usize).max(1)
}

pub fn fit(
    x: &Matrix,
    y: &[f64],
    trees: usize,
    max_depth: Option<usize>,
    min_leaf: usize,
    seed: u64,
) -> Forest {
    let presorted = Presorted::new(x);
    let n = x.nrows();
    let cfg = TreeConfig {
        max_depth,
        min_leaf: min_leaf as f64,
        max_features: Some(max_features(x.ncols())),
        criterion: Criterion::Gini,
    };
    let trees = (0..trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = rng_for(seed, &[stream::TREE, t as u64]);
            let mut weight = vec![0.0; n];
            for _ in 0..n {
                weight[rng.random_range(0..n)] += 1.0;
            }
            build(x, &presorted, y, &weight, cfg, Some(&mut rng), |rows| {
                let (mut w, mut wy) = (0.0, 0.0);
                for &i in rows {
                    w += weight[i];
                    wy += weight[i] * y[i];
                }
                if wy / w >= 0.5 {
                    1.0
                } else {
                    0.0
                }
            })
        })
        .collect();
    Forest { trees }
}

impl Forest {
    pub fn proba(&self, row: &[f64]) -> f64 {
        self.trees.iter().map(|t| t.predict(row)).sum::<f64>() / self.trees.len() as f64
    }
}
