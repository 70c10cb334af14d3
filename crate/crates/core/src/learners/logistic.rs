use serde::{Deserialize, Serialize};

use crate::matrix::Matrix;

pub const GRAD_TOL: f64 = 1e-6;
pub const MAX_ITER: usize = 5000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Logistic {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub iterations: usize,
}

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// log(1 + e^z) without overflow.
pub(crate) fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// Mean logistic loss plus (lambda/2)·|w|²; the bias is not penalized.
fn objective(x: &Matrix, y: &[f64], lambda: f64, w: &[f64], b: f64, grad: Option<&mut [f64]>) -> f64 {
    let n = x.nrows() as f64;
    let d = x.ncols();
    let mut loss = 0.0;
    let mut g = vec![0.0; d + 1];
    for (row, &yi) in x.rows_iter().zip(y) {
        let z = b + row.iter().zip(w).map(|(a, c)| a * c).sum::<f64>();
        loss += softplus(z) - yi * z;
        let r = sigmoid(z) - yi;
        for j in 0..d {
            g[j] += r * row[j];
        }
        g[d] += r;
    }
    let reg: f64 = w.iter().map(|v| v * v).sum::<f64>() * lambda / 2.0;
    if let Some(out) = grad {
        for j in 0..d {
            out[j] = g[j] / n + lambda * w[j];
        }
        out[d] = g[d] / n;
    }
    loss / n + reg
}

/// Full-batch gradient descent with Armijo backtracking.
pub fn fit(x: &Matrix, y: &[f64], lambda: f64) -> Logistic {
    let d = x.ncols();
    let mut w = vec![0.0; d];
    let mut b = 0.0;
    let mut g = vec![0.0; d + 1];
    let mut f = objective(x, y, lambda, &w, b, Some(&mut g));
    let mut step = 1.0;
    let mut iterations = 0;
    let mut trial_w = vec![0.0; d];
    while iterations < MAX_ITER {
        let gnorm2: f64 = g.iter().map(|v| v * v).sum();
        if gnorm2.sqrt() < GRAD_TOL {
            break;
        }
        iterations += 1;
        step *= 2.0;
        let mut accepted = false;
        for _ in 0..60 {
            for j in 0..d {
                trial_w[j] = w[j] - step * g[j];
            }
            let trial_b = b - step * g[d];
            let ft = objective(x, y, lambda, &trial_w, trial_b, None);
            if ft <= f - 0.5 * step * gnorm2 {
                w.copy_from_slice(&trial_w);
                b = trial_b;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
        f = objective(x, y, lambda, &w, b, Some(&mut g));
    }
    Logistic {
        weights: w,
        bias: b,
        iterations,
    }
}

impl Logistic {
    pub fn margin(&self, row: &[f64]) -> f64 {
        self.bias + row.iter().zip(&self.weights).map(|(a, c)| a * c).sum::<f64>()
    }

    pub fn proba(&self, row: &[f64]) -> f64 {
        sigmoid(self.margin(row))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stable_sigmoid_and_softplus() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert!(sigmoid(-800.0) >= 0.0 && sigmoid(800.0) <= 1.0);
        assert!((softplus(800.0) - 800.0).abs() < 1e-9);
        assert!((softplus(0.0) - 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn separable_pair() {
        let x = Matrix::from_rows(&[[-1.0], [1.0]]);
        let m = fit(&x, &[0.0, 1.0], 0.001);
        assert!(m.proba(&[-1.0]) < 0.5 && m.proba(&[1.0]) > 0.5);
    }

    #[test]
    fn converges_to_stationary_point() {
        let x = Matrix::from_rows(&[[0.0, 1.0], [1.0, 0.5], [2.0, -1.0], [3.0, 0.0], [1.5, 2.0]]);
        let y = [0.0, 0.0, 1.0, 1.0, 0.0];
        let m = fit(&x, &y, 0.1);
        let mut g = vec![0.0; 3];
        objective(&x, &y, 0.1, &m.weights, m.bias, Some(&mut g));
        assert!(g.iter().map(|v| v * v).sum::<f64>().sqrt() < GRAD_TOL);
        assert!(m.iterations < MAX_ITER);
    }

    #[test]
    fn gradient_matches_differences() {
        let x = Matrix::from_rows(&[[0.3, -1.0], [1.0, 0.5], [-2.0, 1.0]]);
        let y = [1.0, 0.0, 1.0];
        let w = [0.4, -0.7];
        let b = 0.2;
        let mut g = vec![0.0; 3];
        objective(&x, &y, 0.5, &w, b, Some(&mut g));
        let h = 1e-6;
        for j in 0..2 {
            let mut wp = w;
            let mut wm = w;
            wp[j] += h;
            wm[j] -= h;
            let fd = (objective(&x, &y, 0.5, &wp, b, None) - objective(&x, &y, 0.5, &wm, b, None)) / (2.0 * h);
            assert!((fd - g[j]).abs() < 1e-8);
        }
    }
}
