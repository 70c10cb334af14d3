use nalgebra::{DMatrix, DMatrixView, DMatrixViewMut};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::logistic::{sigmoid, softplus};
use crate::matrix::Matrix;
use crate::rng::{rng_for, stream};

pub const BATCH: usize = 32;
pub const MOMENTUM: f64 = 0.9;

/// Fully connected ReLU network with one sigmoid output unit. Parameters
/// are stored flat, layer by layer: weights (out × in, row-major), then
/// biases.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    /// Layer widths from input to output, e.g. `[d, 32, 16, 1]`.
    pub sizes: Vec<usize>,
    pub params: Vec<f64>,
}

impl Mlp {
    pub fn n_params(sizes: &[usize]) -> usize {
        sizes.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
    }

    /// Uniform weights in ±1/√fan_in, zero biases.
    pub fn init(n_inputs: usize, hidden: &[usize], seed: u64) -> Self {
        let mut sizes = vec![n_inputs];
        sizes.extend_from_slice(hidden);
        sizes.push(1);
        let mut rng = rng_for(seed, &[stream::FIT, 0]);
        let mut params = Vec::with_capacity(Self::n_params(&sizes));
        for w in sizes.windows(2) {
            let bound = 1.0 / (w[0] as f64).sqrt();
            for _ in 0..w[0] * w[1] {
                params.push(rng.random_range(-bound..=bound));
            }
            params.extend(std::iter::repeat_n(0.0, w[1]));
        }
        Mlp { sizes, params }
    }

    fn layers(&self) -> usize {
        self.sizes.len() - 1
    }

    /// Output logit for one (already standardized) row.
    pub fn logit(&self, row: &[f64]) -> f64 {
        let mut act = row.to_vec();
        let mut next = Vec::new();
        let mut off = 0;
        for l in 0..self.layers() {
            let (nin, nout) = (self.sizes[l], self.sizes[l + 1]);
            let w = &self.params[off..off + nin * nout];
            let b = &self.params[off + nin * nout..off + nin * nout + nout];
            next.clear();
            for o in 0..nout {
                let z = b[o] + w[o * nin..(o + 1) * nin].iter().zip(&act).map(|(a, c)| a * c).sum::<f64>();
                next.push(if l + 1 < self.layers() { z.max(0.0) } else { z });
            }
            std::mem::swap(&mut act, &mut next);
            off += nin * nout + nout;
        }
        act[0]
    }

    pub fn proba(&self, row: &[f64]) -> f64 {
        sigmoid(self.logit(row))
    }
}

fn offsets(sizes: &[usize]) -> Vec<usize> {
    let mut out = Vec::with_capacity(sizes.len());
    let mut off = 0;
    for w in sizes.windows(2) {
        out.push(off);
        off += w[0] * w[1] + w[1];
    }
    out
}

/// Activations of every layer for a batch (rows × width, column-major);
/// the last entry holds the output logits.
fn forward(net: &Mlp, input: DMatrix<f64>, offs: &[usize]) -> Vec<DMatrix<f64>> {
    let layers = net.sizes.len() - 1;
    let mut acts = Vec::with_capacity(layers + 1);
    acts.push(input);
    for l in 0..layers {
        let (nin, nout) = (net.sizes[l], net.sizes[l + 1]);
        let off = offs[l];
        // Row-major (out × in) weights read column-major are W transposed.
        let wt = DMatrixView::from_slice(&net.params[off..off + nin * nout], nin, nout);
        let bias = &net.params[off + nin * nout..off + nin * nout + nout];
        let mut z = &acts[l] * wt;
        for (o, mut col) in z.column_iter_mut().enumerate() {
            for v in col.iter_mut() {
                *v += bias[o];
                if l + 1 < layers && *v < 0.0 {
                    *v = 0.0;
                }
            }
        }
        acts.push(z);
    }
    acts
}

fn gather(x: &Matrix, rows: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), x.ncols(), |i, j| x.get(rows[i], j))
}

/// Output logits for a batch of (already standardized) rows.
pub fn logits(net: &Mlp, x: &Matrix) -> Vec<f64> {
    let offs = offsets(&net.sizes);
    let input = DMatrix::from_row_slice(x.nrows(), x.ncols(), x.as_slice());
    forward(net, input, &offs).pop().expect("output layer").iter().copied().collect()
}

/// Mean binary cross-entropy over `rows` of `x` and its gradient with
/// respect to the flat parameters.
pub fn loss_and_grad(net: &Mlp, x: &Matrix, y: &[f64], rows: &[usize], grad: &mut [f64]) -> f64 {
    let offs = offsets(&net.sizes);
    let layers = net.sizes.len() - 1;
    let acts = forward(net, gather(x, rows), &offs);
    let inv_n = 1.0 / rows.len() as f64;
    let out = &acts[layers];
    let mut loss = 0.0;
    let mut delta = DMatrix::zeros(rows.len(), 1);
    for (k, &i) in rows.iter().enumerate() {
        let z = out[(k, 0)];
        loss += softplus(z) - y[i] * z;
        delta[(k, 0)] = (sigmoid(z) - y[i]) * inv_n;
    }
    for l in (0..layers).rev() {
        let (nin, nout) = (net.sizes[l], net.sizes[l + 1]);
        let off = offs[l];
        let (gw, gb) = grad[off..off + nin * nout + nout].split_at_mut(nin * nout);
        let mut gwt = DMatrixViewMut::from_slice(gw, nin, nout);
        gwt.gemm(1.0, &acts[l].transpose(), &delta, 0.0);
        for (o, col) in delta.column_iter().enumerate() {
            gb[o] = col.sum();
        }
        if l > 0 {
            let wt = DMatrixView::from_slice(&net.params[off..off + nin * nout], nin, nout);
            let mut prev = &delta * wt.transpose();
            for (v, a) in prev.iter_mut().zip(acts[l].iter()) {
                if *a <= 0.0 {
                    *v = 0.0;
                }
            }
            delta = prev;
        }
    }
    loss * inv_n
}

/// Mini-batch SGD with momentum on shuffled batches of [`BATCH`] rows.
pub fn fit(x: &Matrix, y: &[f64], hidden: &[usize], learning_rate: f64, epochs: usize, seed: u64) -> Mlp {
    let mut net = Mlp::init(x.ncols(), hidden, seed);
    let p = net.params.len();
    let mut grad = vec![0.0; p];
    let mut velocity = vec![0.0; p];
    let mut order: Vec<usize> = (0..x.nrows()).collect();
    let mut rng = rng_for(seed, &[stream::FIT, 1]);
    for _ in 0..epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(BATCH) {
            loss_and_grad(&net, x, y, batch, &mut grad);
            for k in 0..p {
                velocity[k] = MOMENTUM * velocity[k] - learning_rate * grad[k];
                net.params[k] += velocity[k];
            }
        }
    }
    net
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout_and_init_bounds() {
        let net = Mlp::init(4, &[3, 2], 1);
        assert_eq!(net.sizes, vec![4, 3, 2, 1]);
        assert_eq!(net.params.len(), 4 * 3 + 3 + 3 * 2 + 2 + 2 + 1);
        assert!(net.params[..12].iter().all(|w| w.abs() <= 0.5));
        assert!(net.params[12..15].iter().all(|&b| b == 0.0));
    }

    #[test]
    fn loss_matches_forward_pass() {
        let net = Mlp::init(2, &[5], 3);
        let x = Matrix::from_rows(&[[0.5, -1.0], [2.0, 0.1]]);
        let y = [1.0, 0.0];
        let mut g = vec![0.0; net.params.len()];
        let loss = loss_and_grad(&net, &x, &y, &[0, 1], &mut g);
        let direct = ((softplus(net.logit(x.row(0))) - net.logit(x.row(0)))
            + softplus(net.logit(x.row(1))))
            / 2.0;
        assert!((loss - direct).abs() < 1e-12);
    }

    #[test]
    fn learns_a_linear_boundary() {
        let rows: Vec<[f64; 2]> = (0..40).map(|i| [(i % 8) as f64 - 3.5, (i / 8) as f64 - 2.0]).collect();
        let y: Vec<f64> = rows.iter().map(|r| f64::from(u8::from(r[0] + r[1] > 0.0))).collect();
        let x = Matrix::from_rows(&rows);
        let net = fit(&x, &y, &[8], 0.05, 200, 9);
        let correct = rows.iter().zip(&y).filter(|(r, &t)| (net.proba(&r[..]) >= 0.5) == (t == 1.0)).count();
        assert!(correct >= 38, "{correct}/40");
    }
}
