use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{PipelineError, Result};
use crate::config::RunConfig;
use crate::dataset::{assemble_table, reduce_correlated, select_slices, stratified_split, CohortKey, FeatureTable, Removal, SplitIndices};
use crate::dicom::{MetaRecord, PixelSlab};
use crate::quality::{combine_and_label, quality_metrics, QualityMetrics};

pub const FORMAT_VERSION: u32 = 1;

/// Run facts that legitimately differ between identical reruns.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub tool: String,
    pub created_unix: u64,
}

impl RunMetadata {
    pub fn now() -> Self {
        let created_unix = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        RunMetadata {
            tool: format!("protoscope {}", env!("CARGO_PKG_VERSION")),
            created_unix,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BuildManifest {
    pub format_version: u32,
    pub cohort: String,
    pub cohort_slug: String,
    /// Every eligible cohort found, with its series count.
    pub eligible_cohorts: BTreeMap<String, usize>,
    pub seed: u64,
    pub images_in_cohort: usize,
    pub series: usize,
    pub rows: usize,
    pub dropped_missing: usize,
    pub dropped_unreadable: usize,
    pub class_counts: [usize; 2],
    pub columns: Vec<String>,
    pub removals: Vec<Removal>,
    pub test_fraction: f64,
    pub split: SplitIndices,
    pub min_cohort: usize,
    pub small_cohort_warning: bool,
    pub warnings: Vec<String>,
    pub metadata: Option<RunMetadata>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Built {
    pub cohort: CohortKey,
    /// Feature table before correlation reduction.
    pub full: FeatureTable,
    pub table: FeatureTable,
    pub removals: Vec<Removal>,
    pub split: SplitIndices,
    pub metrics: Vec<QualityMetrics>,
    pub manifest: BuildManifest,
}

fn choose_cohort(records: &[MetaRecord], wanted: Option<&str>) -> Result<(CohortKey, BTreeMap<String, usize>)> {
    let mut series: BTreeMap<CohortKey, std::collections::BTreeSet<&str>> = BTreeMap::new();
    for r in records {
        let key = CohortKey::of(r);
        if key.is_eligible() {
            series.entry(key).or_default().insert(&r.series_id);
        }
    }
    let eligible: BTreeMap<String, usize> = series.iter().map(|(k, s)| (k.slug(), s.len())).collect();
    let key = match wanted {
        Some(slug) => series
            .keys()
            .find(|k| k.slug() == slug)
            .cloned()
            .ok_or_else(|| PipelineError::CohortNotFound(slug.to_string()))?,
        None => {
            // largest by series count; ties keep key order
            let mut best: Option<(&CohortKey, usize)> = None;
            for (k, s) in &series {
                if best.is_none_or(|(_, n)| s.len() > n) {
                    best = Some((k, s.len()));
                }
            }
            best.ok_or(PipelineError::NoEligibleCohort(records.len()))?.0.clone()
        }
    };
    Ok((key, eligible))
}

/// Cohort choice, slice selection, quality labels, table assembly,
/// correlation reduction and the train/test split.
///
/// `pixels(i)` loads the pixels of `records[i]`; it is only called for
/// selected slices, and a failure drops that image with a warning.
pub fn build_dataset(
    records: &[MetaRecord],
    pixels: &(dyn Fn(usize) -> Result<PixelSlab, String> + Sync),
    cfg: &RunConfig,
    seed: u64,
    mut warnings: Vec<String>,
) -> Result<Built> {
    let (cohort, eligible_cohorts) = choose_cohort(records, cfg.cohort.as_deref())?;
    let members: Vec<usize> = (0..records.len()).filter(|&i| CohortKey::of(&records[i]) == cohort).collect();
    let member_records: Vec<MetaRecord> = members.iter().map(|&i| records[i].clone()).collect();
    let selected: Vec<usize> = select_slices(&member_records).into_iter().map(|j| members[j]).collect();

    let loaded: Vec<Result<QualityMetrics, String>> = selected
        .par_iter()
        .map(|&i| pixels(i).and_then(|p| quality_metrics(&p).map_err(|e| e.to_string())))
        .collect();
    let mut kept = Vec::new();
    let mut metrics = Vec::new();
    for (&i, m) in selected.iter().zip(loaded) {
        match m {
            Ok(m) => {
                kept.push(records[i].clone());
                metrics.push(m);
            }
            Err(e) => warnings.push(format!("series {}: {e}", records[i].series_id)),
        }
    }
    let dropped_unreadable = selected.len() - kept.len();
    let labels = combine_and_label(&metrics)?;
    let full = assemble_table(&kept, &labels)?;
    let (table, removals) = reduce_correlated(&full, &cfg.correlation);
    let split = stratified_split(&table.labels, cfg.test_fraction, seed)?;

    let small = table.nrows() < cfg.min_cohort;
    if small {
        warnings.push(format!(
            "cohort has {} rows, below the minimum of {}; results are likely to overfit",
            table.nrows(),
            cfg.min_cohort
        ));
    }
    let ones = table.labels.iter().filter(|&&l| l == 1).count();
    let manifest = BuildManifest {
        format_version: FORMAT_VERSION,
        cohort: cohort.to_string(),
        cohort_slug: cohort.slug(),
        eligible_cohorts,
        seed,
        images_in_cohort: members.len(),
        series: selected.len(),
        rows: table.nrows(),
        dropped_missing: full.dropped,
        dropped_unreadable,
        class_counts: [table.nrows() - ones, ones],
        columns: table.feature_names(),
        removals: removals.clone(),
        test_fraction: cfg.test_fraction,
        split: split.clone(),
        min_cohort: cfg.min_cohort,
        small_cohort_warning: small,
        warnings,
        metadata: None,
    };
    Ok(Built {
        cohort,
        full,
        table,
        removals,
        split,
        metrics,
        manifest,
    })
}
