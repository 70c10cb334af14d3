use serde::{Deserialize, Serialize};

use super::EvalError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSet {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub auc_roc: f64,
    pub auc_pr: f64,
}

impl MetricSet {
    pub const NAMES: [&'static str; 6] = ["accuracy", "precision", "recall", "f1", "auc_roc", "auc_pr"];

    pub fn values(&self) -> [f64; 6] {
        [
            self.accuracy,
            self.precision,
            self.recall,
            self.f1,
            self.auc_roc,
            self.auc_pr,
        ]
    }

    pub fn from_values(v: [f64; 6]) -> Self {
        MetricSet {
            accuracy: v[0],
            precision: v[1],
            recall: v[2],
            f1: v[3],
            auc_roc: v[4],
            auc_pr: v[5],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
}

impl Confusion {
    pub fn count(y_true: &[u8], y_pred: &[u8]) -> Result<Self, EvalError> {
        if y_true.len() != y_pred.len() {
            return Err(EvalError::LengthMismatch(y_true.len(), y_pred.len()));
        }
        let mut c = Confusion::default();
        for (&t, &p) in y_true.iter().zip(y_pred) {
            match (t, p) {
                (1, 1) => c.tp += 1,
                (0, 1) => c.fp += 1,
                (0, 0) => c.tn += 1,
                (1, 0) => c.fn_ += 1,
                _ => return Err(EvalError::NonBinary),
            }
        }
        Ok(c)
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

pub fn f1_from(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

/// (accuracy, precision, recall, f1); 0/0 ratios count as 0.
pub fn confusion_metrics(y_true: &[u8], y_pred: &[u8]) -> Result<(f64, f64, f64, f64), EvalError> {
    let c = Confusion::count(y_true, y_pred)?;
    let accuracy = ratio(c.tp + c.tn, y_true.len());
    let precision = ratio(c.tp, c.tp + c.fp);
    let recall = ratio(c.tp, c.tp + c.fn_);
    Ok((accuracy, precision, recall, f1_from(precision, recall)))
}

pub fn f1_score(y_true: &[u8], y_pred: &[u8]) -> Result<f64, EvalError> {
    Ok(confusion_metrics(y_true, y_pred)?.3)
}

fn check_scores(y_true: &[u8], scores: &[f64]) -> Result<(), EvalError> {
    if y_true.len() != scores.len() {
        return Err(EvalError::LengthMismatch(y_true.len(), scores.len()));
    }
    if y_true.iter().any(|&v| v > 1) {
        return Err(EvalError::NonBinary);
    }
    Ok(())
}

/// Indices sorted by descending score, grouped into runs of equal score.
fn descending_groups(scores: &[f64]) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for i in order {
        match groups.last_mut() {
            Some(g) if scores[g[0]] == scores[i] => g.push(i),
            _ => groups.push(vec![i]),
        }
    }
    groups
}

/// Mann–Whitney AUC with half credit for tied scores.
pub fn auc_roc(y_true: &[u8], scores: &[f64]) -> Result<f64, EvalError> {
    check_scores(y_true, scores)?;
    let pos = y_true.iter().filter(|&&v| v == 1).count();
    let neg = y_true.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(EvalError::SingleClass);
    }
    // Walk from the lowest score up, counting negatives already passed.
    let mut groups = descending_groups(scores);
    groups.reverse();
    let mut below_neg = 0usize;
    let mut twice_u = 0u128;
    for g in groups {
        let gp = g.iter().filter(|&&i| y_true[i] == 1).count();
        let gn = g.len() - gp;
        twice_u += (2 * gp * below_neg + gp * gn) as u128;
        below_neg += gn;
    }
    Ok(twice_u as f64 / (2 * pos * neg) as f64)
}

/// Average precision: Σ (R_k − R_{k−1})·P_k over descending distinct
/// score thresholds.
pub fn auc_pr(y_true: &[u8], scores: &[f64]) -> Result<f64, EvalError> {
    check_scores(y_true, scores)?;
    let pos = y_true.iter().filter(|&&v| v == 1).count();
    if pos == 0 {
        return Err(EvalError::NoPositives);
    }
    let (mut tp, mut seen) = (0usize, 0usize);
    let mut ap = 0.0;
    for g in descending_groups(scores) {
        let gp = g.iter().filter(|&&i| y_true[i] == 1).count();
        tp += gp;
        seen += g.len();
        if gp > 0 {
            ap += (gp as f64 / pos as f64) * (tp as f64 / seen as f64);
        }
    }
    Ok(ap)
}

/// Full metric set at threshold 0.5.
pub fn metric_set(y_true: &[u8], proba: &[f64]) -> Result<MetricSet, EvalError> {
    let pred: Vec<u8> = proba.iter().map(|&p| u8::from(p >= 0.5)).collect();
    let (accuracy, precision, recall, f1) = confusion_metrics(y_true, &pred)?;
    Ok(MetricSet {
        accuracy,
        precision,
        recall,
        f1,
        auc_roc: auc_roc(y_true, proba)?,
        auc_pr: auc_pr(y_true, proba)?,
    })
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::rng::rng_for;
    use proptest::prelude::*;
    use rand::Rng;

    /// O(n²) pair counting.
    pub(crate) fn auc_roc_pairs(y: &[u8], s: &[f64]) -> f64 {
        let (mut num, mut den) = (0.0, 0.0);
        for i in 0..y.len() {
            for j in 0..y.len() {
                if y[i] == 1 && y[j] == 0 {
                    den += 1.0;
                    num += if s[i] > s[j] {
                        1.0
                    } else if s[i] == s[j] {
                        0.5
                    } else {
                        0.0
                    };
                }
            }
        }
        num / den
    }

    /// Sweep every distinct score as a threshold (predict positive when
    /// score ≥ t), from high to low.
    pub(crate) fn auc_pr_sweep(y: &[u8], s: &[f64]) -> f64 {
        let mut th: Vec<f64> = s.to_vec();
        th.sort_by(|a, b| b.total_cmp(a));
        th.dedup();
        let pos = y.iter().filter(|&&v| v == 1).count() as f64;
        let mut prev_recall = 0.0;
        let mut ap = 0.0;
        for t in th {
            let tp = (0..y.len()).filter(|&i| s[i] >= t && y[i] == 1).count() as f64;
            let pp = (0..y.len()).filter(|&i| s[i] >= t).count() as f64;
            let recall = tp / pos;
            ap += (recall - prev_recall) * (tp / pp);
            prev_recall = recall;
        }
        ap
    }

    #[test]
    fn confusion_examples() {
        assert_eq!(confusion_metrics(&[1, 0, 1], &[1, 0, 1]).unwrap(), (1.0, 1.0, 1.0, 1.0));
        let (_, p, r, f) = confusion_metrics(&[1, 0, 1, 0], &[0, 0, 0, 0]).unwrap();
        assert_eq!((p, r, f), (0.0, 0.0, 0.0));
        let truth: Vec<u8> = [vec![1; 10], vec![0; 10]].concat();
        let pred: Vec<u8> = [vec![1; 8], vec![0; 2], vec![1; 2], vec![0; 8]].concat();
        let (a, p, r, f) = confusion_metrics(&truth, &pred).unwrap();
        for v in [a, p, r, f] {
            assert!((v - 0.8).abs() < 1e-12);
        }
        assert_eq!(confusion_metrics(&[1], &[1, 0]), Err(EvalError::LengthMismatch(1, 2)));
    }

    #[test]
    fn auc_examples() {
        let y = [0, 1, 1, 0, 1];
        let s: Vec<f64> = y.iter().map(|&v| f64::from(v)).collect();
        assert_eq!(auc_roc(&y, &s).unwrap(), 1.0);
        assert_eq!(auc_pr(&y, &s).unwrap(), 1.0);
        assert_eq!(auc_roc(&y, &[0.3; 5]).unwrap(), 0.5);
        assert!((auc_pr(&y, &[0.3; 5]).unwrap() - 0.6).abs() < 1e-15);
        assert_eq!(auc_roc(&[1, 1], &[0.1, 0.2]), Err(EvalError::SingleClass));
        assert_eq!(auc_pr(&[0, 0], &[0.1, 0.2]), Err(EvalError::NoPositives));
    }

    #[test]
    fn random_twenty_point_sets() {
        let mut rng = rng_for(20, &[]);
        for _ in 0..50 {
            let y: Vec<u8> = (0..20).map(|i| if i < 2 { i as u8 } else { rng.random_range(0..2) }).collect();
            let s: Vec<f64> = (0..20).map(|_| f64::from(rng.random_range(0..6u8)) / 5.0).collect();
            assert!((auc_roc(&y, &s).unwrap() - auc_roc_pairs(&y, &s)).abs() < 1e-12);
            assert!((auc_pr(&y, &s).unwrap() - auc_pr_sweep(&y, &s)).abs() < 1e-12);
        }
    }

    proptest! {
        #[test]
        fn f1_consistent_with_precision_recall(pairs in prop::collection::vec((0u8..2, 0u8..2), 1..100)) {
            let (t, p): (Vec<u8>, Vec<u8>) = pairs.into_iter().unzip();
            let (_, prec, rec, f1) = confusion_metrics(&t, &p).unwrap();
            prop_assert!((f1 - f1_from(prec, rec)).abs() <= 1e-12);
            for v in [prec, rec, f1] {
                prop_assert!((0.0..=1.0).contains(&v));
            }
        }
    }
}
