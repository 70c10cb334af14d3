use serde::{Deserialize, Serialize};

use super::{FeatureGroup, FeatureTable};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelationThresholds {
    /// A pair is flagged when Pearson exceeds `pearson` and Spearman
    /// exceeds `spearman`,
    pub pearson: f64,
    pub spearman: f64,
    /// or when either exceeds `single`.
    /// Either coefficient above this flags a pair.
    pub single: f64,
}

impl Default for CorrelationThresholds {
    fn default() -> Self {
        CorrelationThresholds {
            pearson: 0.7,
            spearman: 0.7,
            single: 0.9,
        }
    }
}

impl CorrelationThresholds {
    pub fn flags(&self, pearson: f64, spearman: f64) -> bool {
        let (p, s) = (pearson.abs(), spearman.abs());
        (p > self.pearson && s > self.spearman) || p > self.single || s > self.single
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Removal {
    pub removed: String,
    pub kept: String,
    pub pearson: f64,
    pub spearman: f64,
}

/// Pearson correlation. Returns 0 when either column is constant.
pub fn pearson(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
    let n = x.len() as f64;
    if x.is_empty() {
        return 0.0;
    }
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return 0.0;
    }
    (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0)
}

/// 1-based ranks with ties sharing their average rank.
pub fn ranks(x: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut out = vec![0.0; x.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && x[order[j + 1]] == x[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            out[k] = avg;
        }
        i = j + 1;
    }
    out
}

pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    pearson(&ranks(x), &ranks(y))
}

fn first_flagged(
    table: &FeatureTable,
    cols: &[Vec<f64>],
    ranked: &[Vec<f64>],
    th: &CorrelationThresholds,
) -> Option<(usize, usize, f64, f64)> {
    let d = table.columns.len();
    for i in 0..d {
        for j in i + 1..d {
            let p = pearson(&cols[i], &cols[j]);
            let s = pearson(&ranked[i], &ranked[j]);
            if th.flags(p, s) {
                return Some((i, j, p, s));
            }
        }
    }
    None
}

/// Drop columns until no pair is flagged. Within a flagged pair the
/// commonly modified column is kept over a randomly modified one, then the
/// earlier column.
pub fn reduce_correlated(
    table: &FeatureTable,
    thresholds: &CorrelationThresholds,
) -> (FeatureTable, Vec<Removal>) {
    let mut current = table.clone();
    let mut log = Vec::new();
    loop {
        let cols: Vec<Vec<f64>> = (0..current.columns.len())
            .map(|j| current.x.column(j))
            .collect();
        let ranked: Vec<Vec<f64>> = cols.iter().map(|c| ranks(c)).collect();
        let Some((i, j, p, s)) = first_flagged(&current, &cols, &ranked, thresholds) else {
            break;
        };
        let drop = match (current.columns[i].group, current.columns[j].group) {
            (FeatureGroup::RandomlyModified, FeatureGroup::CommonlyModified) => i,
            _ => j,
        };
        let keep = if drop == i { j } else { i };
        log::info!(
            "dropping {} (correlated with {}: pearson {p:.3}, spearman {s:.3})",
            current.columns[drop].name,
            current.columns[keep].name
        );
        log.push(Removal {
            removed: current.columns[drop].name.clone(),
            kept: current.columns[keep].name.clone(),
            pearson: p,
            spearman: s,
        });
        let remaining: Vec<usize> = (0..current.columns.len()).filter(|&k| k != drop).collect();
        current = current.select_columns(&remaining);
    }
    (current, log)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{Encoding, FeatureSpec, Provenance};
    use crate::matrix::Matrix;
    use crate::rng::rng_for;
    use rand::Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn table(cols: &[(&str, FeatureGroup, Vec<f64>)]) -> FeatureTable {
        let n = cols[0].2.len();
        let rows: Vec<Vec<f64>> = (0..n).map(|i| cols.iter().map(|c| c.2[i]).collect()).collect();
        FeatureTable {
            columns: cols
                .iter()
                .map(|(name, group, _)| FeatureSpec {
                    name: name.to_string(),
                    group: *group,
                    encoding: Encoding::Numeric,
                })
                .collect(),
            x: Matrix::from_rows(&rows),
            labels: vec![0; n],
            scores: vec![0.0; n],
            provenance: (0..n)
                .map(|i| Provenance {
                    study_id: "s".into(),
                    series_id: i.to_string(),
                })
                .collect(),
            dropped: 0,
        }
    }

    // Textbook formulas, written independently of the production code.
    fn pearson_naive(x: &[f64], y: &[f64]) -> f64 {
        let n = x.len() as f64;
        let sx: f64 = x.iter().sum();
        let sy: f64 = y.iter().sum();
        let sxy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
        let sxx: f64 = x.iter().map(|a| a * a).sum();
        let syy: f64 = y.iter().map(|b| b * b).sum();
        (n * sxy - sx * sy) / ((n * sxx - sx * sx).sqrt() * (n * syy - sy * sy).sqrt())
    }

    fn rank_naive(x: &[f64]) -> Vec<f64> {
        x.iter()
            .map(|&v| {
                let below = x.iter().filter(|&&u| u < v).count() as f64;
                let equal = x.iter().filter(|&&u| u == v).count() as f64;
                below + (equal + 1.0) / 2.0
            })
            .collect()
    }

    #[test]
    fn ranks_average_ties() {
        assert_eq!(ranks(&[10.0, 20.0, 20.0, 5.0]), vec![2.0, 3.5, 3.5, 1.0]);
        let x = [3.0, 1.0, 3.0, 3.0, 2.0, 0.5];
        assert_eq!(ranks(&x), rank_naive(&x));
    }

    #[test]
    fn pearson_matches_naive() {
        let mut rng = rng_for(1, &[]);
        let x: Vec<f64> = (0..50).map(|_| rng.random::<f64>()).collect();
        let y: Vec<f64> = x.iter().map(|v| v * 0.3 + rng.random::<f64>()).collect();
        assert!((pearson(&x, &y) - pearson_naive(&x, &y)).abs() < 1e-12);
        assert!((spearman(&x, &y) - pearson_naive(&rank_naive(&x), &rank_naive(&y))).abs() < 1e-12);
        assert_eq!(pearson(&x, &vec![4.0; 50]), 0.0);
    }

    #[test]
    fn duplicate_column_removed_once() {
        let x: Vec<f64> = (0..20).map(|i| ((i * 7) % 13) as f64).collect();
        let t = table(&[
            ("a", FeatureGroup::CommonlyModified, x.clone()),
            ("b", FeatureGroup::CommonlyModified, x),
        ]);
        let (out, log) = reduce_correlated(&t, &CorrelationThresholds::default());
        assert_eq!(out.feature_names(), vec!["a"]);
        assert_eq!(log.len(), 1);
        assert!((log[0].pearson - 1.0).abs() < 1e-12 && (log[0].spearman - 1.0).abs() < 1e-12);
    }

    #[test]
    fn retention_prefers_commonly_modified() {
        let x: Vec<f64> = (0..20).map(|i| i as f64).collect();
        let t = table(&[
            ("age", FeatureGroup::RandomlyModified, x.clone()),
            ("tr", FeatureGroup::CommonlyModified, x),
        ]);
        let (out, log) = reduce_correlated(&t, &CorrelationThresholds::default());
        assert_eq!(out.feature_names(), vec!["tr"]);
        assert_eq!(log[0].removed, "age");
    }

    #[test]
    fn single_method_rule() {
        let th = CorrelationThresholds::default();
        assert!(th.flags(0.5, 0.95));
        assert!(th.flags(-0.95, 0.1));
        assert!(th.flags(0.71, -0.71));
        assert!(!th.flags(0.75, 0.69));
        assert!(!th.flags(0.7, 0.7));
    }

    #[test]
    fn monotone_cubic_removed() {
        let x: Vec<f64> = (1..=200).map(|i| (i as f64 / 20.0).exp()).collect();
        let y: Vec<f64> = x.iter().map(|v| v.powi(3)).collect();
        assert_eq!(spearman(&x, &y), 1.0);
        assert!(pearson(&x, &y) < 0.9);
        let t = table(&[
            ("x", FeatureGroup::CommonlyModified, x),
            ("y", FeatureGroup::CommonlyModified, y),
        ]);
        let (out, log) = reduce_correlated(&t, &CorrelationThresholds::default());
        assert_eq!(out.feature_names(), vec!["x"]);
        assert_eq!(log.len(), 1);
    }

    #[test]
    fn independent_columns_rarely_removed() {
        let mut clean = 0;
        for seed in 0..100 {
            let mut rng = rng_for(seed, &[]);
            let cols: Vec<(String, Vec<f64>)> = (0..5)
                .map(|k| {
                    let v = (0..200).map(|_| StandardNormal.sample(&mut rng)).collect();
                    (format!("c{k}"), v)
                })
                .collect();
            let defs: Vec<(&str, FeatureGroup, Vec<f64>)> = cols
                .iter()
                .map(|(n, v)| (n.as_str(), FeatureGroup::CommonlyModified, v.clone()))
                .collect();
            let (_, log) = reduce_correlated(&table(&defs), &CorrelationThresholds::default());
            clean += usize::from(log.is_empty());
        }
        assert!(clean >= 99, "{clean}/100 seeds had no removals");
    }

    #[test]
    fn constant_columns_never_flagged() {
        let t = table(&[
            ("a", FeatureGroup::CommonlyModified, vec![1.0; 10]),
            ("b", FeatureGroup::CommonlyModified, vec![1.0; 10]),
        ]);
        let (out, log) = reduce_correlated(&t, &CorrelationThresholds::default());
        assert_eq!(out.columns.len(), 2);
        assert!(log.is_empty());
    }

    proptest::proptest! {
        #[test]
        fn output_has_no_flagged_pair(
            base in proptest::collection::vec(proptest::collection::vec(-5.0f64..5.0, 4), 5..40),
            mix in proptest::collection::vec(-1.0f64..1.0, 16),
        ) {
            // Columns 4..8 are linear mixtures of the base columns, so some get flagged.
            let n = base.len();
            let mut defs = Vec::new();
            let names: Vec<String> = (0..8).map(|k| format!("c{k}")).collect();
            for k in 0..8 {
                let col: Vec<f64> = (0..n)
                    .map(|i| if k < 4 { base[i][k] } else {
                        (0..4).map(|m| mix[(k - 4) * 4 + m] * base[i][m]).sum()
                    })
                    .collect();
                let group = if k % 3 == 0 { FeatureGroup::RandomlyModified } else { FeatureGroup::CommonlyModified };
                defs.push((names[k].as_str(), group, col));
            }
            let t = table(&defs);
            let th = CorrelationThresholds::default();
            let (out, log) = reduce_correlated(&t, &th);
            proptest::prop_assert_eq!(out.columns.len() + log.len(), 8);
            proptest::prop_assert_eq!(&out.provenance, &t.provenance);
            for i in 0..out.columns.len() {
                for j in i + 1..out.columns.len() {
                    let (a, b) = (out.x.column(i), out.x.column(j));
                    proptest::prop_assert!(!th.flags(pearson_naive_or_zero(&a, &b), spearman(&a, &b)));
                }
            }
        }
    }

    fn pearson_naive_or_zero(x: &[f64], y: &[f64]) -> f64 {
        let r = pearson_naive(x, y);
        if r.is_finite() { r } else { 0.0 }
    }
}
