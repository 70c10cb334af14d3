use serde::{Deserialize, Serialize};

use super::{Attribution, ShapError};
use crate::dataset::spearman;
use crate::matrix::Matrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceRanking {
    /// (feature, mean |phi|), descending; ties keep feature order.
    pub entries: Vec<(String, f64)>,
}

impl ImportanceRanking {
    /// 1-based rank of a feature.
    pub fn rank_of(&self, feature: &str) -> Option<usize> {
        self.entries.iter().position(|(f, _)| f == feature).map(|p| p + 1)
    }

    pub fn top(&self, k: usize) -> Vec<&str> {
        self.entries.iter().take(k).map(|(f, _)| f.as_str()).collect()
    }
}

pub fn rank_importance(a: &Attribution) -> Result<ImportanceRanking, ShapError> {
    let n = a.phi.nrows();
    if n == 0 || a.phi.ncols() == 0 {
        return Err(ShapError::Empty);
    }
    let mut entries: Vec<(String, f64)> = (0..a.phi.ncols())
        .map(|j| {
            let mean = a.phi.column(j).iter().map(|v| v.abs()).sum::<f64>() / n as f64;
            (a.feature_names[j].clone(), mean)
        })
        .collect();
    entries.sort_by(|p, q| q.1.total_cmp(&p.1));
    Ok(ImportanceRanking { entries })
}

fn check_shapes(a: &Attribution, x: &Matrix) -> Result<(), ShapError> {
    if a.phi.nrows() != x.nrows() || a.phi.ncols() != x.ncols() {
        return Err(ShapError::ShapeMismatch(format!(
            "phi is {}×{}, features {}×{}",
            a.phi.nrows(),
            a.phi.ncols(),
            x.nrows(),
            x.ncols()
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeeswarmPoint {
    pub feature: String,
    pub phi: f64,
    /// Feature value min-max scaled to [0, 1]; constant columns give 0.
    pub color: f64,
}

/// One point per (row, feature), features in importance order.
pub fn beeswarm_data(a: &Attribution, x: &Matrix) -> Result<Vec<BeeswarmPoint>, ShapError> {
    check_shapes(a, x)?;
    let ranking = rank_importance(a)?;
    let mut out = Vec::with_capacity(x.nrows() * x.ncols());
    for (name, _) in &ranking.entries {
        let j = a.feature_names.iter().position(|f| f == name).expect("ranked feature exists");
        let col = x.column(j);
        let lo = col.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = col.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        for (i, v) in col.iter().enumerate() {
            out.push(BeeswarmPoint {
                feature: name.clone(),
                phi: a.phi.get(i, j),
                color: if hi > lo { (v - lo) / (hi - lo) } else { 0.0 },
            });
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Direct,
    Inverse,
    None,
}

impl Direction {
    pub fn as_str(self) -> &'static str {
        match self {
            Direction::Direct => "direct",
            Direction::Inverse => "inverse",
            Direction::None => "none",
        }
    }
}

/// Spearman correlation between each feature and its phi column:
/// ≥ threshold is direct, ≤ −threshold inverse, otherwise (or for a
/// constant column) none.
pub fn trend_direction(a: &Attribution, x: &Matrix, threshold: f64) -> Result<Vec<Direction>, ShapError> {
    check_shapes(a, x)?;
    Ok((0..x.ncols())
        .map(|j| {
            let r = spearman(&x.column(j), &a.phi.column(j));
            if r >= threshold {
                Direction::Direct
            } else if r <= -threshold {
                Direction::Inverse
            } else {
                Direction::None
            }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SummaryOptions {
    /// Only features ranked within this window get a rank score and a
    /// reported direction.
    pub top_k: usize,
    pub trend_threshold: f64,
}

impl Default for SummaryOptions {
    fn default() -> Self {
        SummaryOptions {
            top_k: 5,
            trend_threshold: 0.3,
        }
    }
}

/// Everything the cross-model summary needs from one explained model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelTrends {
    pub model: String,
    pub f1: f64,
    pub ranking: ImportanceRanking,
    /// Per feature, as from [`trend_direction`].
    pub directions: Vec<(String, Direction)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendCell {
    pub model: String,
    pub feature: String,
    pub rank: usize,
    pub rank_score: f64,
    pub impact_weight: f64,
    /// Direction reported for the chart: the measured direction inside the
    /// top-k window, `none` outside it.
    pub direction: Direction,
    pub measured_direction: Direction,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendSummary {
    pub models: Vec<String>,
    /// Full feature universe, including features no model kept.
    pub features: Vec<String>,
    pub cells: Vec<TrendCell>,
}

impl TrendSummary {
    pub fn cell(&self, model: &str, feature: &str) -> Option<&TrendCell> {
        self.cells.iter().find(|c| c.model == model && c.feature == feature)
    }

    /// The model's top-k features with their impact weights, best first.
    pub fn top_for(&self, model: &str, k: usize) -> Vec<&TrendCell> {
        let mut cells: Vec<&TrendCell> = self.cells.iter().filter(|c| c.model == model && c.rank <= k).collect();
        cells.sort_by_key(|c| c.rank);
        cells
    }

    /// Number of models reporting `direction` for `feature`.
    pub fn agreement(&self, feature: &str, direction: Direction) -> usize {
        self.cells
            .iter()
            .filter(|c| c.feature == feature && c.direction == direction)
            .count()
    }
}

/// rank-score = (k + 1 − rank) inside the top-k window, else 0;
/// impact weight = rank-score × F1. Features a model never saw get no cell.
pub fn weighted_cross_model_summary(models: &[ModelTrends], universe: &[String], opts: &SummaryOptions) -> TrendSummary {
    let mut cells = Vec::new();
    for m in models {
        for feature in universe {
            let Some(rank) = m.ranking.rank_of(feature) else {
                continue;
            };
            let measured = m
                .directions
                .iter()
                .find(|(f, _)| f == feature)
                .map_or(Direction::None, |(_, d)| *d);
            let in_window = rank <= opts.top_k;
            let rank_score = if in_window { (opts.top_k + 1 - rank) as f64 } else { 0.0 };
            cells.push(TrendCell {
                model: m.model.clone(),
                feature: feature.clone(),
                rank,
                rank_score,
                impact_weight: rank_score * m.f1.max(0.0),
                direction: if in_window { measured } else { Direction::None },
                measured_direction: measured,
            });
        }
    }
    TrendSummary {
        models: models.iter().map(|m| m.model.clone()).collect(),
        features: universe.to_vec(),
        cells,
    }
}
