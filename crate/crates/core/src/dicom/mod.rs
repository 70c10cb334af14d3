//! Minimal DICOM (PS3.10) reader and writer.
//!
//! Only the two uncompressed little-endian transfer syntaxes are handled.
//! Sequences are skipped rather than decoded; no attribute this crate needs
//! lives inside one.

mod dictionary;
mod element;
mod parse;
mod pixels;
mod record;
mod scrub;
mod write;

pub use dictionary::{lookup as lookup_vr, tags};
pub use element::{decode, format_decimal, DicomElement, Tag, Value, Vr};
pub use parse::{parse_file, TransferSyntax};
pub use pixels::{extract_pixels, PixelSlab};
pub use record::{extract_record, parse_age, MetaRecord, Plane, Sex, Weighting};
pub use scrub::{scrub_phi, DenyList, ScrubAction, Scrubber};
pub use write::{write_elements, write_file};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DicomError {
    #[error("malformed header: {0}")]
    MalformedHeader(String),
    #[error("element {tag} at offset {offset} declares {declared} bytes but only {remaining} remain")]
    TruncatedElement {
        tag: Tag,
        offset: usize,
        declared: usize,
        remaining: usize,
    },
    #[error("malformed element at offset {offset}: {reason}")]
    MalformedElement { offset: usize, reason: String },
    #[error("unsupported transfer syntax: {0}")]
    UnsupportedTransferSyntax(String),
    #[error("missing critical tag {0}")]
    MissingCriticalTag(Tag),
    #[error("invalid value for {tag}: {reason}")]
    InvalidValue { tag: Tag, reason: String },
    #[error("pixel data holds {actual} bytes, expected {expected}")]
    PixelLengthMismatch { expected: usize, actual: usize },
    #[error("unsupported pixel encoding: {0}")]
    UnsupportedPixelEncoding(String),
    #[error("invalid record: {0}")]
    InvalidRecord(String),
    #[error("deny-list line {line}: {reason}")]
    BadDenyList { line: usize, reason: String },
}

pub type Result<T> = std::result::Result<T, DicomError>;
