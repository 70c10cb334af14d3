//! Plain CSV for feature tables: `study_id,series_id,<features...>,score,label`.

use super::{canonical_columns, DatasetError, Encoding, FeatureGroup, FeatureSpec, FeatureTable, Provenance};
use crate::matrix::Matrix;

fn check_field(s: &str) -> Result<&str, DatasetError> {
    if s.contains([',', '\n', '\r', '"']) {
        return Err(DatasetError::Csv(format!("field {s:?} needs quoting")));
    }
    Ok(s)
}

pub fn write_csv(table: &FeatureTable) -> Result<String, DatasetError> {
    let mut out = String::from("study_id,series_id");
    for c in &table.columns {
        out.push(',');
        out.push_str(check_field(&c.name)?);
    }
    out.push_str(",score,label\n");
    for i in 0..table.nrows() {
        let p = &table.provenance[i];
        out.push_str(check_field(&p.study_id)?);
        out.push(',');
        out.push_str(check_field(&p.series_id)?);
        for v in table.x.row(i) {
            out.push_str(&format!(",{v}"));
        }
        out.push_str(&format!(",{},{}\n", table.scores[i], table.labels[i]));
    }
    Ok(out)
}

/// Parse a table written by [`write_csv`]. Column groups come from the
/// canonical feature list; unknown names are read as commonly modified.
pub fn read_csv(text: &str) -> Result<FeatureTable, DatasetError> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header: Vec<&str> = lines
        .next()
        .ok_or_else(|| DatasetError::Csv("empty file".into()))?
        .split(',')
        .collect();
    let d = header.len().checked_sub(4).filter(|_| {
        header[..2] == ["study_id", "series_id"] && header[header.len() - 2..] == ["score", "label"]
    });
    let d = d.ok_or_else(|| DatasetError::Csv("unexpected header".into()))?;
    let canon = canonical_columns();
    let columns: Vec<FeatureSpec> = header[2..2 + d]
        .iter()
        .map(|name| {
            canon.iter().find(|c| c.name == *name).cloned().unwrap_or(FeatureSpec {
                name: name.to_string(),
                group: FeatureGroup::CommonlyModified,
                encoding: Encoding::Numeric,
            })
        })
        .collect();
    let mut data = Vec::new();
    let mut labels = Vec::new();
    let mut scores = Vec::new();
    let mut provenance = Vec::new();
    for (ln, line) in lines.enumerate() {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != header.len() {
            return Err(DatasetError::Csv(format!(
                "row {} has {} fields, expected {}",
                ln + 1,
                fields.len(),
                header.len()
            )));
        }
        let num = |s: &str| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| DatasetError::Csv(format!("row {}: bad number {s:?}", ln + 1)))
        };
        provenance.push(Provenance {
            study_id: fields[0].to_string(),
            series_id: fields[1].to_string(),
        });
        for f in &fields[2..2 + d] {
            data.push(num(f)?);
        }
        scores.push(num(fields[2 + d])?);
        let label = match fields[3 + d].trim() {
            "0" => 0,
            "1" => 1,
            other => return Err(DatasetError::Csv(format!("row {}: bad label {other:?}", ln + 1))),
        };
        labels.push(label);
    }
    Ok(FeatureTable {
        x: Matrix::from_vec(labels.len(), d, data),
        columns,
        labels,
        scores,
        provenance,
        dropped: 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::assemble_table;
    use crate::dataset::tests::record;
    use crate::quality::QualityLabel;

    #[test]
    fn round_trip() {
        let mut r2 = record("b", 1);
        r2.tr_ms = Some(612.5);
        r2.sex = crate::dicom::Sex::M;
        let labels = [
            QualityLabel { score: 0.125, class: 1 },
            QualityLabel { score: 0.9, class: 0 },
        ];
        let t = assemble_table(&[record("a", 1), r2], &labels).unwrap();
        let text = write_csv(&t).unwrap();
        assert!(text.starts_with("study_id,series_id,slice_thickness_mm,"));
        assert!(text.lines().next().unwrap().ends_with(",score,label"));
        let back = read_csv(&text).unwrap();
        assert_eq!(back, t);
        assert_eq!(write_csv(&back).unwrap(), text);
    }

    #[test]
    fn rejects_bad_rows() {
        assert!(read_csv("").is_err());
        assert!(read_csv("a,b\n").is_err());
        let h = "study_id,series_id,x,score,label\n";
        assert!(read_csv(&format!("{h}s,1,2.0,0.5,3\n")).is_err());
        assert!(read_csv(&format!("{h}s,1,abc,0.5,1\n")).is_err());
        assert!(read_csv(&format!("{h}s,1,0.5,1\n")).is_err());
        assert_eq!(read_csv(&format!("{h}s,1,2.0,0.5,1\n")).unwrap().nrows(), 1);
    }
}
