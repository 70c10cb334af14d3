use std::path::{Path, PathBuf};

use rayon::prelude::*;
use walkdir::WalkDir;

use super::{io_err, PipelineError, Result};
use crate::dicom::{extract_pixels, extract_record, parse_file, scrub_phi, DicomElement, MetaRecord, PixelSlab};

#[derive(Debug, Clone, PartialEq)]
pub struct IngestedFile {
    pub path: PathBuf,
    pub record: MetaRecord,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FileFailure {
    pub path: PathBuf,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Ingest {
    pub files: Vec<IngestedFile>,
    pub failures: Vec<FileFailure>,
}

/// Regular files under the given files and directories, sorted and
/// deduplicated. Hidden entries are skipped.
pub fn discover(paths: &[PathBuf]) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for root in paths {
        if !root.exists() {
            return Err(io_err(root, "no such file or directory"));
        }
        let walk = WalkDir::new(root).follow_links(true).into_iter().filter_entry(|e| {
            e.depth() == 0 || !e.file_name().to_string_lossy().starts_with('.')
        });
        for entry in walk {
            let entry = entry.map_err(|e| io_err(root, e))?;
            if entry.file_type().is_file() {
                out.push(entry.into_path());
            }
        }
    }
    out.sort();
    out.dedup();
    Ok(out)
}

fn read_scrubbed(path: &Path) -> Result<Vec<DicomElement>, String> {
    let bytes = std::fs::read(path).map_err(|e| e.to_string())?;
    let elements = parse_file(&bytes).map_err(|e| e.to_string())?;
    Ok(scrub_phi(&elements))
}

/// Parse, scrub and extract every file. Files that fail are collected as
/// failures; the rest keep discovery order.
pub fn ingest(paths: &[PathBuf]) -> Result<Ingest> {
    let files = discover(paths)?;
    let results: Vec<Result<MetaRecord, String>> = files
        .par_iter()
        .map(|p| read_scrubbed(p).and_then(|els| extract_record(&els).map_err(|e| e.to_string())))
        .collect();
    let mut out = Ingest::default();
    for (path, r) in files.into_iter().zip(results) {
        match r {
            Ok(record) => out.files.push(IngestedFile { path, record }),
            Err(error) => {
                log::warn!("{}: {error}", path.display());
                out.failures.push(FileFailure { path, error });
            }
        }
    }
    Ok(out)
}

pub fn load_pixels(path: &Path) -> Result<PixelSlab, String> {
    let elements = read_scrubbed(path)?;
    extract_pixels(&elements).map_err(|e| e.to_string())
}

fn opt(v: Option<f64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

/// One row per ingested file.
pub fn metadata_csv(ingest: &Ingest) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let header = [
        "source",
        "study_id",
        "series_id",
        "instance_number",
        "protocol_name",
        "body_part",
        "coil",
        "plane",
        "weighting",
        "tr_ms",
        "te_ms",
        "nex",
        "percent_sampling",
        "percent_phase_fov",
        "fov_mm",
        "slice_thickness_mm",
        "slice_location_mm",
        "rows",
        "cols",
        "age_years",
        "weight_kg",
        "sex",
    ];
    let csv_err = |e: csv::Error| PipelineError::Inconsistent(format!("csv: {e}"));
    w.write_record(header).map_err(csv_err)?;
    for f in &ingest.files {
        let r = &f.record;
        w.write_record([
            f.path.display().to_string(),
            r.study_id.clone(),
            r.series_id.clone(),
            r.instance_number.to_string(),
            r.protocol_name.clone(),
            r.body_part.clone(),
            r.coil.clone(),
            r.plane.to_string(),
            r.weighting.to_string(),
            opt(r.tr_ms),
            opt(r.te_ms),
            opt(r.nex),
            opt(r.percent_sampling),
            opt(r.percent_phase_fov),
            opt(r.fov_mm),
            opt(r.slice_thickness_mm),
            opt(r.slice_location_mm),
            r.rows.to_string(),
            r.cols.to_string(),
            opt(r.age_years),
            opt(r.weight_kg),
            format!("{:?}", r.sex),
        ])
        .map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| PipelineError::Inconsistent(format!("csv: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}
