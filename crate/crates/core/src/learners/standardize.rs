use serde::{Deserialize, Serialize};

use crate::matrix::Matrix;

const CONSTANT_STD: f64 = 1e-12;

/// Per-feature mean and population standard deviation from training rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    /// Constant features are passed through unscaled.
    pub constant: Vec<bool>,
}

impl Standardizer {
    pub fn fit(x: &Matrix) -> Self {
        let n = x.nrows() as f64;
        let d = x.ncols();
        let mut mean = vec![0.0; d];
        for row in x.rows_iter() {
            for (m, v) in mean.iter_mut().zip(row) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; d];
        for row in x.rows_iter() {
            for j in 0..d {
                var[j] += (row[j] - mean[j]).powi(2);
            }
        }
        let std: Vec<f64> = var.iter().map(|v| (v / n).sqrt()).collect();
        let constant = std.iter().map(|&s| s < CONSTANT_STD).collect();
        Standardizer { mean, std, constant }
    }

    pub fn apply_row(&self, row: &[f64], out: &mut [f64]) {
        for j in 0..row.len() {
            out[j] = if self.constant[j] {
                row[j]
            } else {
                (row[j] - self.mean[j]) / self.std[j]
            };
        }
    }

    pub fn transform(&self, x: &Matrix) -> Matrix {
        let mut out = x.clone();
        for i in 0..x.nrows() {
            self.apply_row(x.row(i), out.row_mut(i));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_mean_unit_std() {
        let x = Matrix::from_rows(&[[1.0, 5.0], [3.0, 5.0], [5.0, 5.0]]);
        let s = Standardizer::fit(&x);
        assert_eq!(s.mean, vec![3.0, 5.0]);
        assert_eq!(s.constant, vec![false, true]);
        let t = s.transform(&x);
        assert!((t.get(0, 0) + 1.224744871391589).abs() < 1e-12);
        assert_eq!(t.column(1), vec![5.0; 3]);
    }
}
