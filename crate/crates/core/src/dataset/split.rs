use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::DatasetError;
use crate::rng::{rng_for, stream};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitIndices {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
    pub seed: u64,
}

/// Per-class test counts: round(n * fraction) in total, distributed by
/// largest remainder of each class's ideal share.
fn allocate(class_sizes: &[usize], fraction: f64) -> Vec<usize> {
    let n: usize = class_sizes.iter().sum();
    let total = (n as f64 * fraction).round() as usize;
    let ideal: Vec<f64> = class_sizes.iter().map(|&c| c as f64 * fraction).collect();
    let mut out: Vec<usize> = ideal.iter().map(|v| v.floor() as usize).collect();
    let mut order: Vec<usize> = (0..class_sizes.len()).collect();
    order.sort_by(|&a, &b| (ideal[b] - ideal[b].floor()).total_cmp(&(ideal[a] - ideal[a].floor())));
    let mut remaining = total.saturating_sub(out.iter().sum());
    for &k in order.iter().cycle().take(class_sizes.len() * 2) {
        if remaining == 0 {
            break;
        }
        if out[k] < class_sizes[k] {
            out[k] += 1;
            remaining -= 1;
        }
    }
    out
}

/// Stratified train/test split over binary labels. Both index lists are
/// sorted.
pub fn stratified_split(
    labels: &[u8],
    test_fraction: f64,
    seed: u64,
) -> Result<SplitIndices, DatasetError> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(DatasetError::BadFraction(test_fraction));
    }
    let classes: Vec<Vec<usize>> = [0u8, 1]
        .iter()
        .map(|&c| (0..labels.len()).filter(|&i| labels[i] == c).collect())
        .collect();
    if classes.iter().any(Vec::is_empty) {
        return Err(DatasetError::SingleClassInput);
    }
    let sizes: Vec<usize> = classes.iter().map(Vec::len).collect();
    let counts = allocate(&sizes, test_fraction);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (c, (mut members, k)) in classes.into_iter().zip(counts).enumerate() {
        members.shuffle(&mut rng_for(seed, &[stream::SPLIT, c as u64]));
        test.extend_from_slice(&members[..k]);
        train.extend_from_slice(&members[k..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok(SplitIndices { train, test, seed })
}
