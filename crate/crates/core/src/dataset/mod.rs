//! Cohort grouping, slice selection, feature-table assembly, correlation
//! reduction and the train/test split.

mod correlation;
mod csv;
mod split;

pub use self::csv::{read_csv, write_csv};
pub use correlation::{pearson, ranks, reduce_correlated, spearman, CorrelationThresholds, Removal};
pub use split::{stratified_split, SplitIndices};

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dicom::{MetaRecord, Plane, Sex, Weighting};
use crate::matrix::Matrix;
use crate::quality::QualityLabel;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DatasetError {
    #[error("no rows left after dropping {dropped} with missing features")]
    EmptyAfterFiltering { dropped: usize },
    #[error("{records} records but {labels} labels")]
    LabelCountMismatch { records: usize, labels: usize },
    #[error("split needs both classes present")]
    SingleClassInput,
    #[error("test fraction {0} must lie in (0, 1)")]
    BadFraction(f64),
    #[error("csv: {0}")]
    Csv(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureGroup {
    CommonlyModified,
    RandomlyModified,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Encoding {
    Numeric,
    CategoricalOnehot,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSpec {
    pub name: String,
    pub group: FeatureGroup,
    pub encoding: Encoding,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Provenance {
    pub study_id: String,
    pub series_id: String,
}

/// Encoded feature matrix with labels and per-row provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureTable {
    pub columns: Vec<FeatureSpec>,
    pub x: Matrix,
    pub labels: Vec<u8>,
    pub scores: Vec<f64>,
    pub provenance: Vec<Provenance>,
    /// Rows dropped during assembly because a feature was missing.
    pub dropped: usize,
}

impl FeatureTable {
    pub fn nrows(&self) -> usize {
        self.x.nrows()
    }

    pub fn feature_names(&self) -> Vec<String> {
        self.columns.iter().map(|c| c.name.clone()).collect()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    pub fn select_rows(&self, idx: &[usize]) -> FeatureTable {
        FeatureTable {
            columns: self.columns.clone(),
            x: self.x.select_rows(idx),
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
            scores: idx.iter().map(|&i| self.scores[i]).collect(),
            provenance: idx.iter().map(|&i| self.provenance[i].clone()).collect(),
            dropped: self.dropped,
        }
    }

    pub fn select_columns(&self, idx: &[usize]) -> FeatureTable {
        FeatureTable {
            columns: idx.iter().map(|&j| self.columns[j].clone()).collect(),
            x: self.x.select_columns(idx),
            ..self.clone()
        }
    }
}

/// Protocol cohort: (body part, weighting, coil, plane).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CohortKey {
    pub body_part: String,
    pub weighting: Weighting,
    pub coil: String,
    pub plane: Plane,
}

impl CohortKey {
    pub fn of(r: &MetaRecord) -> Self {
        CohortKey {
            body_part: r.body_part.clone(),
            weighting: r.weighting,
            coil: r.coil.clone(),
            plane: r.plane,
        }
    }

    /// Only sagittal T1 and T2 cohorts go on to modelling.
    pub fn is_eligible(&self) -> bool {
        self.plane == Plane::Sagittal && matches!(self.weighting, Weighting::T1 | Weighting::T2)
    }

    /// Filesystem-friendly name, e.g. `LSPINE-T1-SPINE-sagittal`.
    pub fn slug(&self) -> String {
        let clean = |s: &str| -> String {
            let t: String = s
                .chars()
                .map(|c| if c.is_ascii_alphanumeric() { c } else { '_' })
                .collect();
            if t.is_empty() {
                "NA".into()
            } else {
                t
            }
        };
        format!(
            "{}-{}-{}-{}",
            clean(&self.body_part),
            self.weighting,
            clean(&self.coil),
            self.plane
        )
    }
}

impl fmt::Display for CohortKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}/{}/{}/{}",
            self.body_part, self.weighting, self.coil, self.plane
        )
    }
}

pub fn group_series(records: &[MetaRecord]) -> BTreeMap<CohortKey, Vec<MetaRecord>> {
    let mut out: BTreeMap<CohortKey, Vec<MetaRecord>> = BTreeMap::new();
    for r in records {
        out.entry(CohortKey::of(r)).or_default().push(r.clone());
    }
    out
}

/// Index of the median-instance slice (lower middle for even counts).
pub fn median_slice_index(series: &[MetaRecord]) -> Option<usize> {
    let mut order: Vec<usize> = (0..series.len()).collect();
    order.sort_by_key(|&i| series[i].instance_number);
    order.get(series.len().checked_sub(1)? / 2).copied()
}

/// Pick the representative slice of a series. Panics on an empty series.
pub fn select_slice(series: &[MetaRecord]) -> MetaRecord {
    let i = median_slice_index(series).expect("select_slice needs a nonempty series");
    series[i].clone()
}

/// For each series, the index of its selected slice, in input order so
/// the table does not depend on how series ids sort.
pub fn select_slices(records: &[MetaRecord]) -> Vec<usize> {
    let mut by_series: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, r) in records.iter().enumerate() {
        by_series.entry(r.series_id.as_str()).or_default().push(i);
    }
    let mut selected: Vec<usize> = by_series
        .values()
        .map(|idx| {
            let series: Vec<MetaRecord> = idx.iter().map(|&i| records[i].clone()).collect();
            idx[median_slice_index(&series).expect("nonempty")]
        })
        .collect();
    selected.sort_unstable();
    selected
}

type Extractor = fn(&MetaRecord) -> Option<f64>;

fn numeric_features() -> Vec<(&'static str, FeatureGroup, Extractor)> {
    use FeatureGroup::*;
    vec![
        ("slice_thickness_mm", CommonlyModified, |r| r.slice_thickness_mm),
        ("tr_ms", CommonlyModified, |r| r.tr_ms),
        ("te_ms", CommonlyModified, |r| r.te_ms),
        ("nex", CommonlyModified, |r| r.nex),
        ("percent_sampling", CommonlyModified, |r| r.percent_sampling),
        ("percent_phase_fov", CommonlyModified, |r| r.percent_phase_fov),
        ("fov_mm", CommonlyModified, |r| r.fov_mm),
        ("rows", CommonlyModified, |r| Some(r.rows as f64)),
        ("cols", CommonlyModified, |r| Some(r.cols as f64)),
        ("slice_location_mm", RandomlyModified, |r| r.slice_location_mm),
        ("age_years", RandomlyModified, |r| r.age_years),
        ("weight_kg", RandomlyModified, |r| r.weight_kg),
    ]
}

/// Canonical column list of an assembled table, before reduction.
pub fn canonical_columns() -> Vec<FeatureSpec> {
    let mut cols: Vec<FeatureSpec> = numeric_features()
        .into_iter()
        .map(|(name, group, _)| FeatureSpec {
            name: name.to_string(),
            group,
            encoding: Encoding::Numeric,
        })
        .collect();
    for name in ["sex_F", "sex_M"] {
        cols.push(FeatureSpec {
            name: name.to_string(),
            group: FeatureGroup::RandomlyModified,
            encoding: Encoding::CategoricalOnehot,
        });
    }
    cols
}

/// Encode records into a feature table. Rows with any missing numeric
/// feature are dropped and counted; sex is one-hot encoded on (F, M).
pub fn assemble_table(
    records: &[MetaRecord],
    labels: &[QualityLabel],
) -> Result<FeatureTable, DatasetError> {
    if records.len() != labels.len() {
        return Err(DatasetError::LabelCountMismatch {
            records: records.len(),
            labels: labels.len(),
        });
    }
    let features = numeric_features();
    let columns = canonical_columns();
    let mut data = Vec::new();
    let mut kept_labels = Vec::new();
    let mut scores = Vec::new();
    let mut provenance = Vec::new();
    let mut dropped = 0;
    for (r, l) in records.iter().zip(labels) {
        let values: Option<Vec<f64>> = features.iter().map(|(_, _, f)| f(r)).collect();
        let Some(mut values) = values else {
            dropped += 1;
            continue;
        };
        values.push(f64::from(u8::from(r.sex == Sex::F)));
        values.push(f64::from(u8::from(r.sex == Sex::M)));
        data.extend(values);
        kept_labels.push(l.class);
        scores.push(l.score);
        provenance.push(Provenance {
            study_id: r.study_id.clone(),
            series_id: r.series_id.clone(),
        });
    }
    if kept_labels.is_empty() {
        return Err(DatasetError::EmptyAfterFiltering { dropped });
    }
    Ok(FeatureTable {
        x: Matrix::from_vec(kept_labels.len(), columns.len(), data),
        columns,
        labels: kept_labels,
        scores,
        provenance,
        dropped,
    })
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub(crate) fn record(series: &str, instance: i32) -> MetaRecord {
        MetaRecord {
            study_id: "1.2".into(),
            series_id: series.into(),
            instance_number: instance,
            protocol_name: "SAG T1".into(),
            body_part: "CSPINE".into(),
            coil: "SPINE".into(),
            plane: Plane::Sagittal,
            weighting: Weighting::T1,
            tr_ms: Some(500.0),
            te_ms: Some(10.0),
            nex: Some(2.0),
            percent_sampling: Some(80.0),
            percent_phase_fov: Some(80.0),
            fov_mm: Some(250.0),
            slice_thickness_mm: Some(4.0),
            slice_location_mm: Some(1.0),
            rows: 256,
            cols: 256,
            pixel_spacing_mm: Some((1.0, 1.0)),
            age_years: Some(40.0),
            weight_kg: Some(70.0),
            sex: Sex::F,
        }
    }

    fn label(class: u8) -> QualityLabel {
        QualityLabel { score: 0.5, class }
    }

    #[test]
    fn cohorts_by_key() {
        let mut a = record("a", 1);
        let b = record("b", 1);
        let mut c = record("c", 1);
        c.body_part = "LSPINE".into();
        c.weighting = Weighting::T2;
        a.plane = Plane::Axial;
        let groups = group_series(&[record("x", 1), b, c, a]);
        let sizes: Vec<usize> = groups.values().map(Vec::len).collect();
        assert_eq!(groups.len(), 3);
        assert_eq!(sizes.iter().sum::<usize>(), 4);
        let cs = CohortKey::of(&record("x", 1));
        assert_eq!(groups[&cs].len(), 2);
        assert!(cs.is_eligible());
        assert!(group_series(&[]).is_empty());
    }

    #[test]
    fn median_slice() {
        let five: Vec<MetaRecord> = [3, 1, 5, 2, 4].iter().map(|&i| record("s", i)).collect();
        assert_eq!(select_slice(&five).instance_number, 3);
        let four: Vec<MetaRecord> = (1..=4).map(|i| record("s", i)).collect();
        assert_eq!(select_slice(&four).instance_number, 2);
        assert_eq!(select_slice(&[record("s", 9)]).instance_number, 9);
    }

    #[test]
    fn one_slice_per_series() {
        let recs: Vec<MetaRecord> = (1..=3)
            .map(|i| record("a", i))
            .chain((1..=2).map(|i| record("b", i)))
            .collect();
        let picked = select_slices(&recs);
        assert_eq!(picked, vec![1, 3]);
    }

    #[test]
    fn sex_one_hot_and_drops() {
        let mut missing = record("m", 1);
        missing.tr_ms = None;
        let recs = vec![record("a", 1), missing];
        let t = assemble_table(&recs, &[label(1), label(0)]).unwrap();
        assert_eq!(t.nrows(), 1);
        assert_eq!(t.dropped, 1);
        let f = t.column_index("sex_F").unwrap();
        let m = t.column_index("sex_M").unwrap();
        assert_eq!((t.x.get(0, f), t.x.get(0, m)), (1.0, 0.0));
        assert_eq!(t.provenance[0].series_id, "a");
    }

    #[test]
    fn all_dropped_is_error() {
        let mut r = record("a", 1);
        r.fov_mm = None;
        assert_eq!(
            assemble_table(&[r], &[label(1)]),
            Err(DatasetError::EmptyAfterFiltering { dropped: 1 })
        );
    }

    #[test]
    fn full_cohort_keeps_every_row() {
        let recs: Vec<MetaRecord> = (0..292).map(|i| record(&format!("s{i}"), 1)).collect();
        let labels: Vec<QualityLabel> = (0..292).map(|i| label((i % 2) as u8)).collect();
        let t = assemble_table(&recs, &labels).unwrap();
        assert_eq!(t.nrows(), 292);
        assert_eq!(t.x.ncols(), canonical_columns().len());
    }
}
