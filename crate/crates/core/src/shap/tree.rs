//! Interventional tree SHAP. For one foreground row x and one background
//! row b, a tree is walked once; at nodes where x and b route differently
//! the feature is assigned to x or to b and both branches are followed.
//! A leaf reached with x-set A and b-set B is the game
//! v·[A ⊆ S, B ∩ S = ∅], whose Shapley values are closed-form.

use super::{shapley_weights, ShapError};
use crate::learners::logistic::sigmoid;
use crate::learners::tree::Tree;
use crate::learners::{FittedModel, ModelState};
use crate::matrix::Matrix;

#[derive(Clone, Copy, PartialEq, Eq)]
enum Side {
    Unseen,
    X,
    B,
}

struct Walk<'a> {
    tree: &'a Tree,
    x: &'a [f64],
    b: &'a [f64],
    side: Vec<Side>,
    sx: Vec<usize>,
    sb: Vec<usize>,
}

impl Walk<'_> {
    fn new<'a>(tree: &'a Tree, x: &'a [f64], b: &'a [f64]) -> Walk<'a> {
        Walk {
            tree,
            x,
            b,
            side: vec![Side::Unseen; x.len()],
            sx: Vec::new(),
            sb: Vec::new(),
        }
    }

    /// Calls `leaf(value, x_set, b_set)` for every leaf some hybrid row
    /// can reach.
    fn run(&mut self, node: usize, leaf: &mut dyn FnMut(f64, &[usize], &[usize])) {
        let n = &self.tree.nodes[node];
        let Some(s) = &n.split else {
            leaf(n.value, &self.sx, &self.sb);
            return;
        };
        let child = |left: bool| if left { s.left } else { s.right };
        let gx = self.x[s.feature] <= s.threshold;
        let gb = self.b[s.feature] <= s.threshold;
        if gx == gb {
            return self.run(child(gx), leaf);
        }
        match self.side[s.feature] {
            Side::X => self.run(child(gx), leaf),
            Side::B => self.run(child(gb), leaf),
            Side::Unseen => {
                self.side[s.feature] = Side::X;
                self.sx.push(s.feature);
                self.run(child(gx), leaf);
                self.sx.pop();
                self.side[s.feature] = Side::B;
                self.sb.push(s.feature);
                self.run(child(gb), leaf);
                self.sb.pop();
                self.side[s.feature] = Side::Unseen;
            }
        }
    }
}

/// a!·b!/(a+b+1)!
fn w(a: usize, b: usize) -> f64 {
    let mut v = 1.0 / (a + b + 1) as f64;
    // Divide a! b! by (a+b)! incrementally: b!/( (a+1)…(a+b) ).
    for k in 1..=b {
        v *= k as f64 / (a + k) as f64;
    }
    v
}

/// Adds `scale` × the two-reference Shapley values of one tree to `phi`.
pub fn tree_shap_pair(tree: &Tree, x: &[f64], b: &[f64], scale: f64, phi: &mut [f64]) {
    let mut walk = Walk::new(tree, x, b);
    walk.run(0, &mut |v, sx, sb| {
        let (nx, nb) = (sx.len(), sb.len());
        if nx > 0 {
            let c = scale * v * w(nx - 1, nb);
            for &j in sx {
                phi[j] += c;
            }
        }
        if nb > 0 {
            let c = scale * v * w(nx, nb - 1);
            for &j in sb {
                phi[j] -= c;
            }
        }
    });
}

/// Exact Shapley values of S ↦ σ(margin(x_S, b_rest)) for a boosted
/// ensemble. Only features whose routing differs between x and b can
/// matter, so the game is enumerated over those alone.
fn boosted_pair(init: f64, trees: &[Tree], x: &[f64], b: &[f64], phi: &mut [f64]) -> f64 {
    let d = x.len();
    let mut leaves: Vec<(f64, u64, u64)> = Vec::new();
    let mut used = 0u64;
    for t in trees {
        let mut walk = Walk::new(t, x, b);
        walk.run(0, &mut |v, sx, sb| {
            let mx = sx.iter().fold(0u64, |m, &j| m | 1 << j);
            let mb = sb.iter().fold(0u64, |m, &j| m | 1 << j);
            used |= mx | mb;
            leaves.push((v, mx, mb));
        });
    }
    let players: Vec<usize> = (0..d).filter(|&j| used >> j & 1 == 1).collect();
    let k = players.len();
    let compress = |m: u64| -> usize {
        players
            .iter()
            .enumerate()
            .fold(0usize, |acc, (bit, &j)| acc | (((m >> j & 1) as usize) << bit))
    };
    // Möbius coefficients: [A ⊆ S]·Π_{j∈B}(1 − [j ∈ S]) = Σ_{T⊆B} (−1)^|T| [A∪T ⊆ S].
    let mut coef = vec![0.0; 1 << k];
    for (v, mx, mb) in leaves {
        let a = compress(mx);
        let bset = compress(mb);
        let mut t = bset;
        loop {
            let sign = if t.count_ones() % 2 == 0 { 1.0 } else { -1.0 };
            coef[a | t] += sign * v;
            if t == 0 {
                break;
            }
            t = (t - 1) & bset;
        }
    }
    for bit in 0..k {
        for s in 0..1usize << k {
            if s >> bit & 1 == 1 {
                coef[s] += coef[s ^ 1 << bit];
            }
        }
    }
    let g: Vec<f64> = coef.iter().map(|&c| sigmoid(init + c)).collect();
    if k > 0 {
        let wts = shapley_weights(k);
        for (bit, &j) in players.iter().enumerate() {
            let mut acc = 0.0;
            for s in 0..1usize << k {
                if s >> bit & 1 == 0 {
                    acc += wts[s.count_ones() as usize] * (g[s | 1 << bit] - g[s]);
                }
            }
            phi[j] += acc;
        }
    }
    g[0]
}

/// Interventional tree SHAP averaged over background rows, in probability
/// units. Returns (phi, base value).
pub fn tree_shap(model: &FittedModel, x: &[f64], background: &Matrix) -> Result<(Vec<f64>, f64), ShapError> {
    let nb = background.nrows();
    if nb == 0 {
        return Err(ShapError::EmptyBackground);
    }
    let d = x.len();
    let mut phi = vec![0.0; d];
    let mut base = 0.0;
    let inv = 1.0 / nb as f64;
    match &model.state {
        ModelState::Tree(t) => {
            for b in background.rows_iter() {
                tree_shap_pair(t, x, b, inv, &mut phi);
                base += inv * t.predict(b);
            }
        }
        ModelState::Forest(f) => {
            let scale = inv / f.trees.len() as f64;
            for b in background.rows_iter() {
                for t in &f.trees {
                    tree_shap_pair(t, x, b, scale, &mut phi);
                }
                base += inv * f.proba(b);
            }
        }
        ModelState::Boosted(g) => {
            let mut pair = vec![0.0; d];
            for b in background.rows_iter() {
                pair.iter_mut().for_each(|v| *v = 0.0);
                base += inv * boosted_pair(g.init, &g.trees, x, b, &mut pair);
                for (p, q) in phi.iter_mut().zip(&pair) {
                    *p += inv * q;
                }
            }
        }
        _ => return Err(ShapError::UnsupportedKind(model.kind)),
    }
    Ok((phi, base))
}
