use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::dictionary::tags;
use super::element::{DicomElement, Tag};
use super::{DicomError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Plane {
    Sagittal,
    Axial,
    Coronal,
    Unknown,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Weighting {
    T1,
    T2,
    Other,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sex {
    F,
    M,
    Other,
}

impl fmt::Display for Plane {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Plane::Sagittal => "sagittal",
            Plane::Axial => "axial",
            Plane::Coronal => "coronal",
            Plane::Unknown => "unknown",
        };
        f.write_str(s)
    }
}

impl fmt::Display for Weighting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Weighting::T1 => "T1",
            Weighting::T2 => "T2",
            Weighting::Other => "other",
        };
        f.write_str(s)
    }
}

/// Acquisition parameters and patient covariates of one image.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetaRecord {
    pub study_id: String,
    pub series_id: String,
    pub instance_number: i32,
    pub protocol_name: String,
    pub body_part: String,
    pub coil: String,
    pub plane: Plane,
    pub weighting: Weighting,
    pub tr_ms: Option<f64>,
    pub te_ms: Option<f64>,
    pub nex: Option<f64>,
    pub percent_sampling: Option<f64>,
    pub percent_phase_fov: Option<f64>,
    /// Reconstruction diameter, taken as the field of view.
    pub fov_mm: Option<f64>,
    pub slice_thickness_mm: Option<f64>,
    pub slice_location_mm: Option<f64>,
    pub rows: u16,
    pub cols: u16,
    pub pixel_spacing_mm: Option<(f64, f64)>,
    pub age_years: Option<f64>,
    pub weight_kg: Option<f64>,
    pub sex: Sex,
}

impl MetaRecord {
    /// Check the record invariants; the error names the first violation.
    pub fn validate(&self) -> Result<()> {
        let bad = |what: String| Err(DicomError::InvalidRecord(what));
        if self.rows == 0 || self.cols == 0 {
            return bad(format!("rows/cols must be positive, got {}x{}", self.rows, self.cols));
        }
        let positive = [
            ("tr_ms", self.tr_ms),
            ("fov_mm", self.fov_mm),
            ("slice_thickness_mm", self.slice_thickness_mm),
            ("nex", self.nex),
        ];
        for (name, v) in positive {
            if let Some(v) = v {
                if !(v.is_finite() && v > 0.0) {
                    return bad(format!("{name} must be positive, got {v}"));
                }
            }
        }
        for (name, v) in [
            ("percent_sampling", self.percent_sampling),
            ("percent_phase_fov", self.percent_phase_fov),
        ] {
            if let Some(v) = v {
                if !(v > 0.0 && v <= 200.0) {
                    return bad(format!("{name} must lie in (0, 200], got {v}"));
                }
            }
        }
        for (name, v) in [
            ("te_ms", self.te_ms),
            ("slice_location_mm", self.slice_location_mm),
            ("weight_kg", self.weight_kg),
            ("age_years", self.age_years),
        ] {
            if let Some(v) = v {
                if !v.is_finite() {
                    return bad(format!("{name} is not finite"));
                }
            }
        }
        if let Some((a, b)) = self.pixel_spacing_mm {
            if !(a.is_finite() && b.is_finite()) {
                return bad("pixel spacing is not finite".into());
            }
        }
        for (name, s) in [
            ("study_id", &self.study_id),
            ("series_id", &self.series_id),
            ("protocol_name", &self.protocol_name),
            ("body_part", &self.body_part),
            ("coil", &self.coil),
        ] {
            let printable = s.bytes().all(|b| (0x20..0x7F).contains(&b) && b != b'\\');
            if !printable || s.trim() != s.as_str() {
                return bad(format!("{name} must be trimmed printable ASCII without '\\'"));
            }
        }
        Ok(())
    }
}

/// Parse an age string ("045Y", "018M", "006W", "010D") into years.
/// A bare number is read as years.
pub fn parse_age(s: &str) -> Option<f64> {
    let s = s.trim();
    let (digits, unit) = match s.chars().last()? {
        c if c.is_ascii_alphabetic() => (&s[..s.len() - 1], c.to_ascii_uppercase()),
        _ => (s, 'Y'),
    };
    let n: f64 = digits.trim().parse().ok()?;
    let years = match unit {
        'Y' => n,
        'M' => n / 12.0,
        'W' => n / 52.14,
        'D' => n / 365.0,
        _ => return None,
    };
    (years.is_finite() && years >= 0.0).then_some(years)
}

/// Encode an age in years as an AS string, choosing the first unit that
/// parses back to exactly the same value.
pub(crate) fn format_age(years: f64) -> Option<String> {
    let candidates = [('Y', 1.0), ('M', 12.0), ('W', 52.14), ('D', 365.0)];
    for (unit, factor) in candidates {
        let n = (years * factor).round();
        if (0.0..1000.0).contains(&n) {
            let s = format!("{:03}{}", n as u32, unit);
            if parse_age(&s) == Some(years) {
                return Some(s);
            }
        }
    }
    None
}

pub(crate) fn classify_weighting(text: &str) -> Weighting {
    let upper = text.to_ascii_uppercase();
    match (upper.contains("T1"), upper.contains("T2")) {
        (true, false) => Weighting::T1,
        (false, true) => Weighting::T2,
        _ => Weighting::Other,
    }
}

/// Classify the slice plane from the six direction cosines of the row and
/// column axes. The slice normal must lie along a patient axis with both
/// off-axis components within `tol`.
pub fn classify_plane(cosines: &[f64], tol: f64) -> Plane {
    if cosines.len() != 6 {
        return Plane::Unknown;
    }
    let (r, c) = (&cosines[0..3], &cosines[3..6]);
    let n = [
        r[1] * c[2] - r[2] * c[1],
        r[2] * c[0] - r[0] * c[2],
        r[0] * c[1] - r[1] * c[0],
    ];
    let planes = [Plane::Sagittal, Plane::Coronal, Plane::Axial];
    for (axis, plane) in planes.into_iter().enumerate() {
        let off_axis_small = (0..3)
            .filter(|&k| k != axis)
            .all(|k| n[k].abs() <= tol);
        if off_axis_small && n[axis].abs() >= 1.0 - tol {
            return plane;
        }
    }
    Plane::Unknown
}

pub(crate) const PLANE_TOLERANCE: f64 = 0.1;

/// Canonical direction cosines written for each plane.
pub(crate) fn plane_cosines(plane: Plane) -> Option<[f64; 6]> {
    match plane {
        Plane::Sagittal => Some([0.0, 1.0, 0.0, 0.0, 0.0, -1.0]),
        Plane::Coronal => Some([1.0, 0.0, 0.0, 0.0, 0.0, -1.0]),
        Plane::Axial => Some([1.0, 0.0, 0.0, 0.0, 1.0, 0.0]),
        Plane::Unknown => None,
    }
}

fn text_of(map: &HashMap<Tag, &DicomElement>, tag: Tag) -> Option<String> {
    map.get(&tag).and_then(|e| e.as_text()).map(str::to_string)
}

fn decimal_of(map: &HashMap<Tag, &DicomElement>, tag: Tag) -> Option<f64> {
    map.get(&tag).and_then(|e| e.as_decimal()).filter(|v| v.is_finite())
}

fn dimension(map: &HashMap<Tag, &DicomElement>, tag: Tag) -> Result<u16> {
    let e = map.get(&tag).ok_or(DicomError::MissingCriticalTag(tag))?;
    match e.as_int() {
        Some(v) if v > 0 && v <= u16::MAX as i64 => Ok(v as u16),
        other => Err(DicomError::InvalidValue {
            tag,
            reason: format!("expected positive dimension, got {other:?}"),
        }),
    }
}

/// Build a [`MetaRecord`] from parsed elements.
///
/// Optional values that are missing or violate the record invariants
/// (non-positive TR or FOV, percentages outside (0, 200]) come back absent.
pub fn extract_record(elements: &[DicomElement]) -> Result<MetaRecord> {
    let map: HashMap<Tag, &DicomElement> = elements.iter().map(|e| (e.tag, e)).collect();

    let rows = dimension(&map, tags::ROWS)?;
    let cols = dimension(&map, tags::COLUMNS)?;

    let positive = |tag| decimal_of(&map, tag).filter(|v| *v > 0.0);
    let percent = |tag| decimal_of(&map, tag).filter(|v| *v > 0.0 && *v <= 200.0);

    let plane = map
        .get(&tags::IMAGE_ORIENTATION_PATIENT)
        .and_then(|e| e.as_decimals())
        .map_or(Plane::Unknown, |c| classify_plane(&c, PLANE_TOLERANCE));

    let weighting = [tags::SERIES_DESCRIPTION, tags::PROTOCOL_NAME]
        .into_iter()
        .filter_map(|t| text_of(&map, t))
        .find(|s| !s.is_empty())
        .map_or(Weighting::Other, |s| classify_weighting(&s));

    let pixel_spacing_mm = map
        .get(&tags::PIXEL_SPACING)
        .and_then(|e| e.as_decimals())
        .and_then(|v| (v.len() == 2).then(|| (v[0], v[1])));

    let sex = match text_of(&map, tags::PATIENT_SEX).as_deref() {
        Some("F") => Sex::F,
        Some("M") => Sex::M,
        _ => Sex::Other,
    };

    Ok(MetaRecord {
        study_id: text_of(&map, tags::STUDY_INSTANCE_UID).unwrap_or_default(),
        series_id: text_of(&map, tags::SERIES_INSTANCE_UID).unwrap_or_default(),
        instance_number: map
            .get(&tags::INSTANCE_NUMBER)
            .and_then(|e| e.as_int())
            .unwrap_or(0) as i32,
        protocol_name: text_of(&map, tags::PROTOCOL_NAME).unwrap_or_default(),
        body_part: text_of(&map, tags::BODY_PART_EXAMINED).unwrap_or_default(),
        coil: text_of(&map, tags::RECEIVE_COIL_NAME).unwrap_or_default(),
        plane,
        weighting,
        tr_ms: positive(tags::REPETITION_TIME),
        te_ms: decimal_of(&map, tags::ECHO_TIME),
        nex: positive(tags::NUMBER_OF_AVERAGES),
        percent_sampling: percent(tags::PERCENT_SAMPLING),
        percent_phase_fov: percent(tags::PERCENT_PHASE_FIELD_OF_VIEW),
        fov_mm: positive(tags::RECONSTRUCTION_DIAMETER),
        slice_thickness_mm: positive(tags::SLICE_THICKNESS),
        slice_location_mm: decimal_of(&map, tags::SLICE_LOCATION),
        rows,
        cols,
        pixel_spacing_mm,
        age_years: text_of(&map, tags::PATIENT_AGE).and_then(|s| parse_age(&s)),
        weight_kg: decimal_of(&map, tags::PATIENT_WEIGHT),
        sex,
    })
}
