use super::dictionary::tags;
use super::element::{format_decimal, DicomElement, Vr};
use super::parse::TransferSyntax;
use super::pixels::PixelSlab;
use super::record::{format_age, plane_cosines, MetaRecord, Sex, Weighting};
use super::{DicomError, Result};

const MR_IMAGE_STORAGE: &str = "1.2.840.10008.5.1.4.1.1.4";
const IMPLEMENTATION_CLASS: &str = "1.2.826.0.1.3680043.10.1466.1";

fn push_element(out: &mut Vec<u8>, e: &DicomElement) -> Result<()> {
    let mut payload = e.payload.clone();
    if payload.len() % 2 == 1 {
        payload.push(e.vr.pad_byte());
    }
    out.extend_from_slice(&e.tag.group.to_le_bytes());
    out.extend_from_slice(&e.tag.element.to_le_bytes());
    out.extend_from_slice(&e.vr.0);
    if e.vr.has_long_length() {
        let len = u32::try_from(payload.len())
            .ok()
            .filter(|&l| l != u32::MAX)
            .ok_or_else(|| DicomError::InvalidRecord(format!("{} payload too long", e.tag)))?;
        out.extend_from_slice(&[0, 0]);
        out.extend_from_slice(&len.to_le_bytes());
    } else {
        let len = u16::try_from(payload.len()).map_err(|_| {
            DicomError::InvalidRecord(format!("{} {} value longer than 65535 bytes", e.tag, e.vr))
        })?;
        out.extend_from_slice(&len.to_le_bytes());
    }
    out.extend_from_slice(&payload);
    Ok(())
}

/// Serialize elements as an Explicit VR Little Endian file with preamble.
///
/// Any group-0002 elements in the input are replaced by a regenerated meta
/// header; the media storage UIDs are carried over when present.
pub fn write_elements(elements: &[DicomElement]) -> Result<Vec<u8>> {
    let find = |tag| elements.iter().find(|e| e.tag == tag).and_then(|e| e.as_text());
    let sop_class = find(tags::MEDIA_STORAGE_SOP_CLASS_UID)
        .or_else(|| find(tags::SOP_CLASS_UID))
        .unwrap_or(MR_IMAGE_STORAGE)
        .to_string();
    let sop_instance = find(tags::SOP_INSTANCE_UID)
        .or_else(|| find(tags::MEDIA_STORAGE_SOP_INSTANCE_UID))
        .unwrap_or("")
        .to_string();

    let meta = [
        DicomElement::from_payload(tags::FILE_META_VERSION, Vr::OB, vec![0, 1]),
        DicomElement::text(tags::MEDIA_STORAGE_SOP_CLASS_UID, Vr::UI, &sop_class),
        DicomElement::text(tags::MEDIA_STORAGE_SOP_INSTANCE_UID, Vr::UI, &sop_instance),
        DicomElement::text(
            tags::TRANSFER_SYNTAX_UID,
            Vr::UI,
            TransferSyntax::ExplicitLittle.uid(),
        ),
        DicomElement::text(tags::IMPLEMENTATION_CLASS_UID, Vr::UI, IMPLEMENTATION_CLASS),
    ];
    let mut meta_bytes = Vec::new();
    for e in &meta {
        push_element(&mut meta_bytes, e)?;
    }

    let mut out = vec![0u8; 128];
    out.extend_from_slice(b"DICM");
    push_element(
        &mut out,
        &DicomElement::ul(tags::FILE_META_GROUP_LENGTH, meta_bytes.len() as u32),
    )?;
    out.extend_from_slice(&meta_bytes);

    let mut body: Vec<&DicomElement> = elements.iter().filter(|e| e.tag.group != 0x0002).collect();
    body.sort_by_key(|e| e.tag);
    for e in body {
        if e.vr == Vr::SQ {
            continue;
        }
        push_element(&mut out, e)?;
    }
    Ok(out)
}

fn weighting_label(w: Weighting) -> &'static str {
    match w {
        Weighting::T1 => "T1",
        Weighting::T2 => "T2",
        Weighting::Other => "OTHER",
    }
}

/// Write a minimal MR image file carrying every populated record field
/// and the pixel grid.
pub fn write_file(record: &MetaRecord, pixels: &PixelSlab) -> Result<Vec<u8>> {
    record.validate()?;
    pixels
        .validate()
        .map_err(|e| DicomError::InvalidRecord(e.to_string()))?;
    if pixels.rows != record.rows || pixels.cols != record.cols {
        return Err(DicomError::InvalidRecord(format!(
            "pixel grid {}x{} does not match record {}x{}",
            pixels.rows, pixels.cols, record.rows, record.cols
        )));
    }

    let sop_instance = format!("{}.{}", record.series_id, record.instance_number.unsigned_abs());
    let mut els = vec![
        DicomElement::text(tags::SOP_CLASS_UID, Vr::UI, MR_IMAGE_STORAGE),
        DicomElement::text(tags::SOP_INSTANCE_UID, Vr::UI, &sop_instance),
        DicomElement::text(tags::MODALITY, Vr::CS, "MR"),
        DicomElement::text(tags::SERIES_DESCRIPTION, Vr::LO, weighting_label(record.weighting)),
        DicomElement::text(tags::PROTOCOL_NAME, Vr::LO, &record.protocol_name),
        DicomElement::text(tags::BODY_PART_EXAMINED, Vr::CS, &record.body_part),
        DicomElement::text(tags::RECEIVE_COIL_NAME, Vr::SH, &record.coil),
        DicomElement::text(tags::STUDY_INSTANCE_UID, Vr::UI, &record.study_id),
        DicomElement::text(tags::SERIES_INSTANCE_UID, Vr::UI, &record.series_id),
        DicomElement::text(
            tags::INSTANCE_NUMBER,
            Vr::IS,
            &record.instance_number.to_string(),
        ),
        DicomElement::text(
            tags::PATIENT_SEX,
            Vr::CS,
            match record.sex {
                Sex::F => "F",
                Sex::M => "M",
                Sex::Other => "O",
            },
        ),
        DicomElement::us(tags::SAMPLES_PER_PIXEL, 1),
        DicomElement::text(tags::PHOTOMETRIC_INTERPRETATION, Vr::CS, "MONOCHROME2"),
        DicomElement::us(tags::ROWS, record.rows),
        DicomElement::us(tags::COLUMNS, record.cols),
        DicomElement::us(tags::BITS_ALLOCATED, 16),
        DicomElement::us(tags::BITS_STORED, pixels.bits_stored as u16),
        DicomElement::us(tags::HIGH_BIT, pixels.bits_stored as u16 - 1),
        DicomElement::us(tags::PIXEL_REPRESENTATION, 0),
    ];
    let decimals = [
        (tags::REPETITION_TIME, record.tr_ms),
        (tags::ECHO_TIME, record.te_ms),
        (tags::NUMBER_OF_AVERAGES, record.nex),
        (tags::PERCENT_SAMPLING, record.percent_sampling),
        (tags::PERCENT_PHASE_FIELD_OF_VIEW, record.percent_phase_fov),
        (tags::RECONSTRUCTION_DIAMETER, record.fov_mm),
        (tags::SLICE_THICKNESS, record.slice_thickness_mm),
        (tags::SLICE_LOCATION, record.slice_location_mm),
        (tags::PATIENT_WEIGHT, record.weight_kg),
    ];
    for (tag, value) in decimals {
        if let Some(v) = value {
            els.push(DicomElement::decimals(tag, &[v]));
        }
    }
    if let Some((a, b)) = record.pixel_spacing_mm {
        els.push(DicomElement::decimals(tags::PIXEL_SPACING, &[a, b]));
    }
    if let Some(cos) = plane_cosines(record.plane) {
        els.push(DicomElement::decimals(tags::IMAGE_ORIENTATION_PATIENT, &cos));
    }
    if let Some(age) = record.age_years {
        let s = format_age(age).ok_or_else(|| {
            DicomError::InvalidRecord(format!(
                "age {} has no exact age-string encoding",
                format_decimal(age)
            ))
        })?;
        els.push(DicomElement::text(tags::PATIENT_AGE, Vr::AS, &s));
    }
    let mut pixel_bytes = Vec::with_capacity(pixels.samples.len() * 2);
    for s in &pixels.samples {
        pixel_bytes.extend_from_slice(&s.to_le_bytes());
    }
    els.push(DicomElement::from_payload(tags::PIXEL_DATA, Vr::OW, pixel_bytes));
    write_elements(&els)
}
