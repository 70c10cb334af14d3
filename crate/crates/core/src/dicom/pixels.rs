use serde::{Deserialize, Serialize};

use super::dictionary::tags;
use super::element::{DicomElement, Tag};
use super::{DicomError, Result};

/// Single-channel unsigned pixel grid, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PixelSlab {
    pub rows: u16,
    pub cols: u16,
    pub bits_stored: u8,
    pub samples: Vec<u16>,
}

impl PixelSlab {
    /// Build a slab, checking the length and range invariants.
    pub fn new(rows: u16, cols: u16, bits_stored: u8, samples: Vec<u16>) -> Result<Self> {
        let slab = PixelSlab {
            rows,
            cols,
            bits_stored,
            samples,
        };
        slab.validate()?;
        Ok(slab)
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=16).contains(&self.bits_stored) {
            return Err(DicomError::UnsupportedPixelEncoding(format!(
                "bits stored {} outside 1..=16",
                self.bits_stored
            )));
        }
        let expected = self.rows as usize * self.cols as usize;
        if self.samples.len() != expected {
            return Err(DicomError::PixelLengthMismatch {
                expected,
                actual: self.samples.len(),
            });
        }
        let limit = 1u32 << self.bits_stored;
        if let Some(s) = self.samples.iter().find(|&&s| s as u32 >= limit) {
            return Err(DicomError::UnsupportedPixelEncoding(format!(
                "sample {s} exceeds {} stored bits",
                self.bits_stored
            )));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

fn us_value(elements: &[DicomElement], tag: Tag) -> Option<i64> {
    elements.iter().find(|e| e.tag == tag).and_then(|e| e.as_int())
}

/// Decode the uncompressed pixel data element.
///
/// Bits above `bits_stored` are masked off, as a display pipeline would.
pub fn extract_pixels(elements: &[DicomElement]) -> Result<PixelSlab> {
    let require = |tag| us_value(elements, tag).ok_or(DicomError::MissingCriticalTag(tag));
    let data = elements
        .iter()
        .find(|e| e.tag == tags::PIXEL_DATA)
        .ok_or(DicomError::MissingCriticalTag(tags::PIXEL_DATA))?;
    let rows = require(tags::ROWS)?;
    let cols = require(tags::COLUMNS)?;
    let allocated = require(tags::BITS_ALLOCATED)?;
    let stored = us_value(elements, tags::BITS_STORED).unwrap_or(allocated);
    let samples_per_pixel = us_value(elements, tags::SAMPLES_PER_PIXEL).unwrap_or(1);
    let representation = us_value(elements, tags::PIXEL_REPRESENTATION).unwrap_or(0);

    if samples_per_pixel != 1 {
        return Err(DicomError::UnsupportedPixelEncoding(format!(
            "{samples_per_pixel} samples per pixel"
        )));
    }
    if representation != 0 {
        return Err(DicomError::UnsupportedPixelEncoding(
            "signed pixel representation".into(),
        ));
    }
    if allocated != 8 && allocated != 16 {
        return Err(DicomError::UnsupportedPixelEncoding(format!(
            "bits allocated {allocated}"
        )));
    }
    if stored < 1 || stored > allocated {
        return Err(DicomError::UnsupportedPixelEncoding(format!(
            "bits stored {stored} with {allocated} allocated"
        )));
    }
    let (rows, cols) = match (u16::try_from(rows), u16::try_from(cols)) {
        (Ok(r), Ok(c)) if r > 0 && c > 0 => (r, c),
        _ => {
            return Err(DicomError::InvalidValue {
                tag: tags::ROWS,
                reason: format!("bad dimensions {rows}x{cols}"),
            })
        }
    };

    let count = rows as usize * cols as usize;
    let bytes_per = allocated as usize / 8;
    let expected = count * bytes_per;
    let payload = &data.payload;
    // one trailing pad byte is allowed for odd-length 8-bit data
    if payload.len() != expected && payload.len() != expected + (expected % 2) {
        return Err(DicomError::PixelLengthMismatch {
            expected,
            actual: payload.len(),
        });
    }
    let mask = ((1u32 << stored) - 1) as u16;
    let samples = if bytes_per == 2 {
        payload[..expected]
            .chunks_exact(2)
            .map(|c| u16::from_le_bytes([c[0], c[1]]) & mask)
            .collect()
    } else {
        payload[..expected].iter().map(|&b| b as u16 & mask).collect()
    };
    PixelSlab::new(rows, cols, stored as u8, samples)
}
