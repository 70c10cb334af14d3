use nalgebra::{DMatrix, DVector};
use rand::seq::index::sample;
use rand::Rng;

use super::{coalition_values, Predictor, ShapError};
use crate::matrix::Matrix;
use crate::rng::{rng_for, stream};

#[derive(Debug, Clone, PartialEq)]
pub struct KernelOutput {
    pub phi: Vec<f64>,
    pub base: f64,
    /// The normal equations were singular and a small ridge was added.
    pub ridged: bool,
    /// All 2^d − 2 proper coalitions were used.
    pub enumerated: bool,
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |c, i| c * (n - i) as f64 / (i + 1) as f64)
}

/// Shapley kernel weight of a coalition of size `s` out of `d`.
pub fn kernel_weight(d: usize, s: usize) -> f64 {
    (d - 1) as f64 / (binomial(d, s) * s as f64 * (d - s) as f64)
}

/// Paired sampling: coalition sizes drawn in proportion to their total
/// kernel mass, each sample added with its complement, all weighted
/// equally.
fn sampled_coalitions(d: usize, n: usize, seed: u64) -> Vec<(u32, f64)> {
    let mass: Vec<f64> = (1..d).map(|s| 1.0 / (s * (d - s)) as f64).collect();
    let total: f64 = mass.iter().sum();
    let mut rng = rng_for(seed, &[stream::KERNEL]);
    let mut out = Vec::with_capacity(n);
    while out.len() + 1 < n {
        let mut u = rng.random::<f64>() * total;
        let mut size = d - 1;
        for (k, m) in mass.iter().enumerate() {
            if u < *m {
                size = k + 1;
                break;
            }
            u -= m;
        }
        let mask = sample(&mut rng, d, size).iter().fold(0u32, |m, j| m | 1 << j);
        out.push((mask, 1.0));
        out.push((!mask & ((1u32 << d) - 1), 1.0));
    }
    out
}

/// Kernel SHAP with the efficiency constraint imposed exactly by
/// eliminating the last feature. With `n_coalitions ≥ 2^d − 2` every
/// coalition is enumerated and the result equals the exact Shapley values.
pub fn kernel_shap(
    model: &dyn Predictor,
    x: &[f64],
    background: &Matrix,
    n_coalitions: usize,
    seed: u64,
) -> Result<KernelOutput, ShapError> {
    let d = x.len();
    if d < 2 || n_coalitions < 2 * d || d > 30 {
        return Err(ShapError::TooFewCoalitions);
    }
    if background.nrows() == 0 {
        return Err(ShapError::EmptyBackground);
    }
    let full = (1u32 << d) - 1;
    let enumerated = (n_coalitions as u64) >= (1u64 << d) - 2;
    let coalitions: Vec<(u32, f64)> = if enumerated {
        (1..full)
            .map(|m| (m, kernel_weight(d, m.count_ones() as usize)))
            .collect()
    } else {
        sampled_coalitions(d, n_coalitions, seed)
    };
    let mut masks: Vec<u32> = vec![0, full];
    masks.extend(coalitions.iter().map(|c| c.0));
    let v = coalition_values(model, x, background, &masks);
    let (base, fx) = (v[0], v[1]);
    let delta = fx - base;
    let last = d - 1;
    let mut m = DMatrix::<f64>::zeros(last, last);
    let mut r = DVector::<f64>::zeros(last);
    let mut a = vec![0.0; last];
    for (k, &(mask, w)) in coalitions.iter().enumerate() {
        let z_last = f64::from(mask >> last & 1 == 1);
        for (j, aj) in a.iter_mut().enumerate() {
            *aj = f64::from(mask >> j & 1 == 1) - z_last;
        }
        let y = v[k + 2] - base - z_last * delta;
        for i in 0..last {
            if a[i] == 0.0 {
                continue;
            }
            r[i] += w * a[i] * y;
            for j in 0..last {
                m[(i, j)] += w * a[i] * a[j];
            }
        }
    }
    let (sol, ridged) = match m.clone().cholesky() {
        Some(ch) => (ch.solve(&r), false),
        None => {
            let ridge = 1e-8 * (m.trace() / last as f64).max(1e-12);
            let mut reg = m;
            for i in 0..last {
                reg[(i, i)] += ridge;
            }
            let sol = reg.clone().cholesky().map_or_else(
                || reg.lu().solve(&r).unwrap_or_else(|| DVector::zeros(last)),
                |ch| ch.solve(&r),
            );
            (sol, true)
        }
    };
    let mut phi: Vec<f64> = sol.iter().copied().collect();
    phi.push(delta - phi.iter().sum::<f64>());
    Ok(KernelOutput {
        phi,
        base,
        ridged,
        enumerated,
    })
}
