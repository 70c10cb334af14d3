//! Exact CART on presorted feature columns, shared by the decision tree,
//! the forest and the boosted ensemble.

use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::matrix::Matrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Split {
    pub feature: usize,
    pub threshold: f64,
    pub left: usize,
    pub right: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub split: Option<Split>,
    pub value: f64,
    /// Weighted training count reaching this node.
    pub cover: f64,
}

/// Binary tree stored as a node arena; node 0 is the root. Rows with
/// `x[feature] <= threshold` go left.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn leaf(value: f64, cover: f64) -> Self {
        Tree {
            nodes: vec![Node {
                split: None,
                value,
                cover,
            }],
        }
    }

    pub fn leaf_index(&self, row: &[f64]) -> usize {
        let mut i = 0;
        while let Some(s) = &self.nodes[i].split {
            i = if row[s.feature] <= s.threshold { s.left } else { s.right };
        }
        i
    }

    pub fn predict(&self, row: &[f64]) -> f64 {
        self.nodes[self.leaf_index(row)].value
    }

    pub fn depth(&self) -> usize {
        fn go(t: &Tree, i: usize) -> usize {
            match &t.nodes[i].split {
                None => 0,
                Some(s) => 1 + go(t, s.left).max(go(t, s.right)),
            }
        }
        go(self, 0)
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| n.split.is_none()).count()
    }

    /// Sorted, deduplicated split features.
    pub fn features(&self) -> Vec<usize> {
        let mut f: Vec<usize> = self.nodes.iter().filter_map(|n| n.split.as_ref().map(|s| s.feature)).collect();
        f.sort_unstable();
        f.dedup();
        f
    }

    pub fn max_feature(&self) -> Option<usize> {
        self.features().last().copied()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Criterion {
    /// Binary targets in {0, 1}.
    Gini,
    /// Real targets, squared error.
    Variance,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct TreeConfig {
    pub max_depth: Option<usize>,
    /// Minimum weighted count in each child.
    pub min_leaf: f64,
    /// Features examined per split; `None` means all.
    pub max_features: Option<usize>,
    pub criterion: Criterion,
}

/// Row indices of every feature column sorted by value (ties by row).
#[derive(Debug, Clone)]
pub(crate) struct Presorted {
    order: Vec<Vec<usize>>,
}

impl Presorted {
    pub fn new(x: &Matrix) -> Self {
        let order = (0..x.ncols())
            .map(|j| {
                let mut idx: Vec<usize> = (0..x.nrows()).collect();
                idx.sort_by(|&a, &b| x.get(a, j).total_cmp(&x.get(b, j)).then(a.cmp(&b)));
                idx
            })
            .collect();
        Presorted { order }
    }
}

struct Candidate {
    feature: usize,
    threshold: f64,
    gain: f64,
}

struct Builder<'a, F: FnMut(&[usize]) -> f64> {
    x: &'a Matrix,
    target: &'a [f64],
    weight: &'a [f64],
    cfg: TreeConfig,
    /// Per feature, the active rows in node-contiguous order.
    cols: Vec<Vec<usize>>,
    go_left: Vec<bool>,
    scratch: Vec<usize>,
    rng: Option<&'a mut ChaCha8Rng>,
    leaf_value: F,
    nodes: Vec<Node>,
}

/// Grow a tree over rows with positive weight. `leaf_value` receives the
/// rows of each leaf.
pub(crate) fn build<F: FnMut(&[usize]) -> f64>(
    x: &Matrix,
    presorted: &Presorted,
    target: &[f64],
    weight: &[f64],
    cfg: TreeConfig,
    rng: Option<&mut ChaCha8Rng>,
    leaf_value: F,
) -> Tree {
    let cols: Vec<Vec<usize>> = presorted
        .order
        .iter()
        .map(|o| o.iter().copied().filter(|&i| weight[i] > 0.0).collect())
        .collect();
    let n_active = cols.first().map_or(0, Vec::len);
    let mut b = Builder {
        x,
        target,
        weight,
        cfg,
        cols,
        go_left: vec![false; x.nrows()],
        scratch: Vec::with_capacity(n_active),
        rng,
        leaf_value,
        nodes: Vec::new(),
    };
    b.grow(0, n_active, 0);
    Tree { nodes: b.nodes }
}

impl<F: FnMut(&[usize]) -> f64> Builder<'_, F> {
    fn grow(&mut self, start: usize, end: usize, depth: usize) -> usize {
        let id = self.nodes.len();
        let rows = &self.cols[0][start..end];
        let (mut w, mut wy) = (0.0, 0.0);
        for &i in rows {
            w += self.weight[i];
            wy += self.weight[i] * self.target[i];
        }
        self.nodes.push(Node {
            split: None,
            value: if w > 0.0 { wy / w } else { 0.0 },
            cover: w,
        });
        let can_split = self.cfg.max_depth.is_none_or(|m| depth < m) && self.is_impure(start, end);
        let best = if can_split { self.best_split(start, end) } else { None };
        let Some(best) = best else {
            let rows = self.cols[0][start..end].to_vec();
            self.nodes[id].value = (self.leaf_value)(&rows);
            return id;
        };
        let mid = self.partition(start, end, best.feature, best.threshold);
        let left = self.grow(start, mid, depth + 1);
        let right = self.grow(mid, end, depth + 1);
        self.nodes[id].split = Some(Split {
            feature: best.feature,
            threshold: best.threshold,
            left,
            right,
        });
        id
    }

    fn is_impure(&self, start: usize, end: usize) -> bool {
        let rows = &self.cols[0][start..end];
        let Some(&first) = rows.first() else {
            return false;
        };
        rows.iter().any(|&i| self.target[i] != self.target[first])
    }

    fn best_split(&mut self, start: usize, end: usize) -> Option<Candidate> {
        let d = self.x.ncols();
        let k = self.cfg.max_features.map_or(d, |k| k.clamp(1, d));
        if k == d {
            let all: Vec<usize> = (0..d).collect();
            return self.scan(start, end, &all);
        }
        let mut perm: Vec<usize> = (0..d).collect();
        perm.shuffle(self.rng.as_deref_mut().expect("feature subsampling needs an rng"));
        let mut first: Vec<usize> = perm[..k].to_vec();
        first.sort_unstable();
        if let Some(c) = self.scan(start, end, &first) {
            return Some(c);
        }
        // Keep drawing single features until one can split the node.
        perm[k..].iter().find_map(|&f| self.scan(start, end, &[f]))
    }

    fn scan(&self, start: usize, end: usize, features: &[usize]) -> Option<Candidate> {
        let gini = self.cfg.criterion == Criterion::Gini;
        let rows0 = &self.cols[0][start..end];
        let (mut w, mut wy, mut wyy) = (0.0, 0.0, 0.0);
        for &i in rows0 {
            let (wi, yi) = (self.weight[i], self.target[i]);
            w += wi;
            wy += wi * yi;
            wyy += wi * yi * yi;
        }
        let impurity = |w: f64, wy: f64, wyy: f64| -> f64 {
            if gini {
                2.0 * wy * (w - wy) / w
            } else {
                wyy - wy * wy / w
            }
        };
        let parent = impurity(w, wy, wyy);
        let mut best: Option<Candidate> = None;
        for &f in features {
            let rows = &self.cols[f][start..end];
            let (mut wl, mut wyl, mut wyyl) = (0.0, 0.0, 0.0);
            for k in 0..rows.len() - 1 {
                let i = rows[k];
                let (wi, yi) = (self.weight[i], self.target[i]);
                wl += wi;
                wyl += wi * yi;
                wyyl += wi * yi * yi;
                let v = self.x.get(i, f);
                let next = self.x.get(rows[k + 1], f);
                if v == next {
                    continue;
                }
                let wr = w - wl;
                if wl < self.cfg.min_leaf || wr < self.cfg.min_leaf {
                    continue;
                }
                let children = impurity(wl, wyl, wyyl) + impurity(wr, wy - wyl, wyy - wyyl);
                let gain = parent - children;
                if best.as_ref().is_none_or(|b| gain > b.gain) {
                    let mut threshold = v + (next - v) / 2.0;
                    if threshold >= next {
                        threshold = v;
                    }
                    best = Some(Candidate {
                        feature: f,
                        threshold,
                        gain,
                    });
                }
            }
        }
        best
    }

    /// Stable partition of every feature column; returns the split point.
    fn partition(&mut self, start: usize, end: usize, feature: usize, threshold: f64) -> usize {
        let mut n_left = 0;
        for &i in &self.cols[0][start..end] {
            let l = self.x.get(i, feature) <= threshold;
            self.go_left[i] = l;
            n_left += usize::from(l);
        }
        for col in &mut self.cols {
            let seg = &mut col[start..end];
            self.scratch.clear();
            let mut w = 0;
            for k in 0..seg.len() {
                let i = seg[k];
                if self.go_left[i] {
                    seg[w] = i;
                    w += 1;
                } else {
                    self.scratch.push(i);
                }
            }
            seg[w..].copy_from_slice(&self.scratch);
        }
        start + n_left
    }
}

/// Single CART classifier with Gini impurity; leaves hold the positive
/// fraction.
pub fn fit_classifier(x: &Matrix, y: &[f64], max_depth: Option<usize>, min_leaf: usize) -> Tree {
    let presorted = Presorted::new(x);
    let weight = vec![1.0; x.nrows()];
    let cfg = TreeConfig {
        max_depth,
        min_leaf: min_leaf as f64,
        max_features: None,
        criterion: Criterion::Gini,
    };
    build(x, &presorted, y, &weight, cfg, None, |rows| {
        rows.iter().map(|&i| y[i]).sum::<f64>() / rows.len() as f64
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn xor() -> (Matrix, Vec<f64>) {
        (
            Matrix::from_rows(&[[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]]),
            vec![0.0, 1.0, 1.0, 0.0],
        )
    }

    #[test]
    fn xor_needs_depth_two() {
        let (x, y) = xor();
        // Hand enumeration: every root split of XOR has zero Gini gain, and the
        // tie-break takes feature 0 at threshold 0.5; each child then splits
        // perfectly on feature 1.
        let t = fit_classifier(&x, &y, Some(2), 1);
        let root = t.nodes[0].split.as_ref().unwrap();
        assert_eq!((root.feature, root.threshold), (0, 0.5));
        for (row, &target) in x.rows_iter().zip(&y) {
            assert_eq!(t.predict(row), target);
        }
        let stump = fit_classifier(&x, &y, Some(1), 1);
        let correct = x.rows_iter().zip(&y).filter(|(r, &t)| (stump.predict(r) >= 0.5) == (t == 1.0)).count();
        assert!(correct < 4);
    }

    #[test]
    fn single_leaf_is_positive_fraction() {
        let x = Matrix::from_rows(&[[1.0], [1.0], [1.0], [1.0]]);
        let t = fit_classifier(&x, &[1.0, 0.0, 0.0, 1.0], None, 1);
        assert_eq!(t.nodes.len(), 1);
        assert_eq!(t.predict(&[7.0]), 0.5);
        assert_eq!(t.nodes[0].cover, 4.0);
    }

    #[test]
    fn min_leaf_respected() {
        let x = Matrix::from_rows(&(0..20).map(|i| [i as f64]).collect::<Vec<_>>());
        let y: Vec<f64> = (0..20).map(|i| f64::from(u8::from(i % 3 == 0))).collect();
        let t = fit_classifier(&x, &y, None, 5);
        assert!(t.nodes.iter().all(|n| n.cover >= 5.0));
    }

    #[test]
    fn midpoint_threshold_never_rounds_up() {
        let a = 1.0f64;
        let b = f64::from_bits(a.to_bits() + 1);
        let x = Matrix::from_rows(&[[a], [b]]);
        let t = fit_classifier(&x, &[0.0, 1.0], None, 1);
        assert_eq!(t.predict(&[a]), 0.0);
        assert_eq!(t.predict(&[b]), 1.0);
    }

    #[test]
    fn pure_node_not_split() {
        let x = Matrix::from_rows(&[[0.0], [1.0], [2.0]]);
        let t = fit_classifier(&x, &[1.0, 1.0, 1.0], None, 1);
        assert_eq!(t.n_leaves(), 1);
    }
}
