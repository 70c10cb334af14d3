use super::dictionary::{self, tags};
use super::element::{DicomElement, Tag, Vr};
use super::{DicomError, Result};

pub const EXPLICIT_VR_LITTLE_ENDIAN: &str = "1.2.840.10008.1.2.1";
pub const IMPLICIT_VR_LITTLE_ENDIAN: &str = "1.2.840.10008.1.2";

const UNDEFINED_LENGTH: u32 = 0xFFFF_FFFF;
const ITEM: Tag = Tag::new(0xFFFE, 0xE000);
const ITEM_DELIMITER: Tag = Tag::new(0xFFFE, 0xE00D);
const SEQUENCE_DELIMITER: Tag = Tag::new(0xFFFE, 0xE0DD);
const MAX_NESTING: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TransferSyntax {
    ExplicitLittle,
    ImplicitLittle,
}

impl TransferSyntax {
    pub fn from_uid(uid: &str) -> Result<Self> {
        match uid.trim_matches(|c: char| c == '\0' || c == ' ') {
            EXPLICIT_VR_LITTLE_ENDIAN => Ok(TransferSyntax::ExplicitLittle),
            IMPLICIT_VR_LITTLE_ENDIAN => Ok(TransferSyntax::ImplicitLittle),
            other => Err(DicomError::UnsupportedTransferSyntax(other.to_string())),
        }
    }

    pub fn uid(self) -> &'static str {
        match self {
            TransferSyntax::ExplicitLittle => EXPLICIT_VR_LITTLE_ENDIAN,
            TransferSyntax::ImplicitLittle => IMPLICIT_VR_LITTLE_ENDIAN,
        }
    }
}

struct Header {
    tag: Tag,
    vr: Vr,
    length: u32,
    offset: usize,
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn remaining(&self) -> usize {
        self.bytes.len() - self.pos
    }

    fn u16_at(&self, at: usize) -> u16 {
        u16::from_le_bytes([self.bytes[at], self.bytes[at + 1]])
    }

    fn u32_at(&self, at: usize) -> u32 {
        u32::from_le_bytes(self.bytes[at..at + 4].try_into().expect("4 bytes"))
    }

    fn need(&self, n: usize, tag: Tag) -> Result<()> {
        if self.remaining() < n {
            return Err(DicomError::TruncatedElement {
                tag,
                offset: self.pos,
                declared: n,
                remaining: self.remaining(),
            });
        }
        Ok(())
    }

    fn peek_tag(&self) -> Option<Tag> {
        (self.remaining() >= 4).then(|| Tag::new(self.u16_at(self.pos), self.u16_at(self.pos + 2)))
    }

    fn header(&mut self, syntax: TransferSyntax) -> Result<Header> {
        let offset = self.pos;
        self.need(4, Tag::new(0, 0))?;
        let tag = Tag::new(self.u16_at(offset), self.u16_at(offset + 2));
        if tag.group == 0xFFFE {
            // items and delimiters carry no VR in either syntax
            self.need(8, tag)?;
            let length = self.u32_at(offset + 4);
            self.pos += 8;
            return Ok(Header {
                tag,
                vr: Vr::UN,
                length,
                offset,
            });
        }
        match syntax {
            TransferSyntax::ImplicitLittle => {
                self.need(8, tag)?;
                let length = self.u32_at(offset + 4);
                self.pos += 8;
                let vr = match dictionary::lookup(tag) {
                    Some(vr) => vr,
                    None if length == UNDEFINED_LENGTH => Vr::SQ,
                    None => Vr::UN,
                };
                Ok(Header {
                    tag,
                    vr,
                    length,
                    offset,
                })
            }
            TransferSyntax::ExplicitLittle => {
                self.need(8, tag)?;
                let vr = Vr([self.bytes[offset + 4], self.bytes[offset + 5]]);
                if !vr.0.iter().all(u8::is_ascii_uppercase) {
                    return Err(DicomError::MalformedElement {
                        offset,
                        reason: format!("invalid VR bytes {:02X?} for {tag}", vr.0),
                    });
                }
                let length = if vr.has_long_length() {
                    self.need(12, tag)?;
                    self.pos += 12;
                    self.u32_at(offset + 8)
                } else {
                    self.pos += 8;
                    self.u16_at(offset + 6) as u32
                };
                Ok(Header {
                    tag,
                    vr,
                    length,
                    offset,
                })
            }
        }
    }

    fn take(&mut self, header: &Header) -> Result<&'a [u8]> {
        let len = header.length as usize;
        if len > self.remaining() {
            return Err(DicomError::TruncatedElement {
                tag: header.tag,
                offset: header.offset,
                declared: len,
                remaining: self.remaining(),
            });
        }
        let out = &self.bytes[self.pos..self.pos + len];
        self.pos += len;
        Ok(out)
    }

    /// Skip an undefined-length sequence body up to and including its delimiter.
    fn skip_sequence(&mut self, syntax: TransferSyntax, depth: usize) -> Result<()> {
        if depth > MAX_NESTING {
            return Err(DicomError::MalformedElement {
                offset: self.pos,
                reason: "sequence nesting too deep".into(),
            });
        }
        loop {
            let h = self.header(syntax)?;
            match h.tag {
                SEQUENCE_DELIMITER => return Ok(()),
                ITEM if h.length == UNDEFINED_LENGTH => self.skip_item(syntax, depth)?,
                ITEM => {
                    self.take(&h)?;
                }
                other => {
                    return Err(DicomError::MalformedElement {
                        offset: h.offset,
                        reason: format!("expected sequence item, found {other}"),
                    })
                }
            }
        }
    }

    fn skip_item(&mut self, syntax: TransferSyntax, depth: usize) -> Result<()> {
        loop {
            let h = self.header(syntax)?;
            if h.tag == ITEM_DELIMITER {
                return Ok(());
            }
            if h.length == UNDEFINED_LENGTH {
                self.skip_sequence(syntax, depth + 1)?;
            } else {
                self.take(&h)?;
            }
        }
    }
}

/// Parse a DICOM byte stream into its top-level elements, in file order.
///
/// Accepts either the 128-byte preamble plus `DICM` magic, or a stream that
/// starts directly with the group-0002 meta header. Unknown tags come back
/// as `UN`. Sequences are consumed and dropped.
pub fn parse_file(bytes: &[u8]) -> Result<Vec<DicomElement>> {
    let start = if bytes.len() >= 132 && &bytes[128..132] == b"DICM" {
        132
    } else if bytes.len() >= 8
        && u16::from_le_bytes([bytes[0], bytes[1]]) == 0x0002
        && bytes[4..6].iter().all(u8::is_ascii_uppercase)
    {
        0
    } else {
        return Err(DicomError::MalformedHeader(
            "no DICM magic and no group-0002 meta header".into(),
        ));
    };

    let mut reader = Reader { bytes, pos: start };
    let mut elements = Vec::new();

    // file meta information is always explicit VR little endian
    let mut meta_end: Option<usize> = None;
    while reader.peek_tag().is_some_and(|t| t.group == 0x0002) {
        if meta_end.is_some_and(|end| reader.pos >= end) {
            break;
        }
        let h = reader.header(TransferSyntax::ExplicitLittle)?;
        if h.length == UNDEFINED_LENGTH {
            return Err(DicomError::MalformedHeader(format!(
                "undefined length in meta element {}",
                h.tag
            )));
        }
        let payload = reader.take(&h)?;
        let element = DicomElement::from_payload(h.tag, h.vr, payload.to_vec());
        if h.tag == tags::FILE_META_GROUP_LENGTH {
            let declared = element.as_int().unwrap_or(0) as usize;
            if declared > reader.remaining() {
                return Err(DicomError::TruncatedElement {
                    tag: h.tag,
                    offset: h.offset,
                    declared,
                    remaining: reader.remaining(),
                });
            }
            meta_end = Some(reader.pos + declared);
        }
        elements.push(element);
    }
    if elements.is_empty() {
        return Err(DicomError::MalformedHeader("empty file meta group".into()));
    }
    if let Some(end) = meta_end {
        if reader.pos != end {
            return Err(DicomError::MalformedHeader(
                "meta group length disagrees with its elements".into(),
            ));
        }
    }
    let syntax = elements
        .iter()
        .find(|e| e.tag == tags::TRANSFER_SYNTAX_UID)
        .and_then(|e| e.as_text())
        .ok_or_else(|| DicomError::MalformedHeader("missing transfer syntax UID".into()))
        .and_then(TransferSyntax::from_uid)?;

    while reader.remaining() > 0 {
        let h = reader.header(syntax)?;
        if h.tag.group == 0xFFFE {
            return Err(DicomError::MalformedElement {
                offset: h.offset,
                reason: format!("item or delimiter {} at top level", h.tag),
            });
        }
        if h.length == UNDEFINED_LENGTH {
            if h.tag == tags::PIXEL_DATA {
                return Err(DicomError::UnsupportedTransferSyntax(
                    "encapsulated pixel data".into(),
                ));
            }
            if h.vr != Vr::SQ && h.vr != Vr::UN {
                return Err(DicomError::MalformedElement {
                    offset: h.offset,
                    reason: format!("undefined length on non-sequence {} {}", h.tag, h.vr),
                });
            }
            reader.skip_sequence(syntax, 0)?;
            continue;
        }
        let payload = reader.take(&h)?;
        if h.vr == Vr::SQ {
            continue;
        }
        let vr = if dictionary::lookup(h.tag).is_some() {
            h.vr
        } else {
            Vr::UN
        };
        elements.push(DicomElement::from_payload(h.tag, vr, payload.to_vec()));
    }
    Ok(elements)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn explicit(tag: Tag, vr: &[u8; 2], payload: &[u8]) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(&tag.group.to_le_bytes());
        out.extend_from_slice(&tag.element.to_le_bytes());
        out.extend_from_slice(vr);
        if Vr(*vr).has_long_length() {
            out.extend_from_slice(&[0, 0]);
            out.extend_from_slice(&(payload.len() as u32).to_le_bytes());
        } else {
            out.extend_from_slice(&(payload.len() as u16).to_le_bytes());
        }
        out.extend_from_slice(payload);
        out
    }

    fn meta(ts: &str) -> Vec<u8> {
        let mut uid = ts.as_bytes().to_vec();
        if uid.len() % 2 == 1 {
            uid.push(0);
        }
        let body = explicit(tags::TRANSFER_SYNTAX_UID, b"UI", &uid);
        let mut out = vec![0u8; 128];
        out.extend_from_slice(b"DICM");
        out.extend(explicit(
            tags::FILE_META_GROUP_LENGTH,
            b"UL",
            &(body.len() as u32).to_le_bytes(),
        ));
        out.extend(body);
        out
    }

    #[test]
    fn empty_stream_is_malformed() {
        assert!(matches!(parse_file(&[]), Err(DicomError::MalformedHeader(_))));
        assert!(matches!(
            parse_file(&[0u8; 200]),
            Err(DicomError::MalformedHeader(_))
        ));
    }

    #[test]
    fn big_endian_is_rejected() {
        let bytes = meta("1.2.840.10008.1.2.2");
        assert!(matches!(
            parse_file(&bytes),
            Err(DicomError::UnsupportedTransferSyntax(_))
        ));
    }

    #[test]
    fn implicit_vr_uses_dictionary() {
        let mut bytes = meta(IMPLICIT_VR_LITTLE_ENDIAN);
        bytes.extend_from_slice(&[0x18, 0x00, 0x80, 0x00, 4, 0, 0, 0]);
        bytes.extend_from_slice(b"500 ");
        bytes.extend_from_slice(&[0x09, 0x00, 0x10, 0x00, 2, 0, 0, 0, b'X', b' ']);
        let els = parse_file(&bytes).unwrap();
        let tr = els.iter().find(|e| e.tag == tags::REPETITION_TIME).unwrap();
        assert_eq!(tr.vr, Vr::DS);
        assert_eq!(tr.as_decimal(), Some(500.0));
        let private = els.last().unwrap();
        assert_eq!(private.vr, Vr::UN);
    }

    #[test]
    fn stream_without_preamble_is_accepted() {
        let bytes = meta(EXPLICIT_VR_LITTLE_ENDIAN);
        let els = parse_file(&bytes[132..]).unwrap();
        assert_eq!(els.len(), 2);
    }

    #[test]
    fn undefined_length_sequences_are_skipped() {
        let mut bytes = meta(EXPLICIT_VR_LITTLE_ENDIAN);
        bytes.extend(explicit(tags::MODALITY, b"CS", b"MR"));
        // (0008,1140) SQ, undefined length, one undefined-length item holding a nested SQ
        bytes.extend_from_slice(&[0x08, 0x00, 0x40, 0x11, b'S', b'Q', 0, 0, 0xFF, 0xFF, 0xFF, 0xFF]);
        bytes.extend_from_slice(&[0xFE, 0xFF, 0x00, 0xE0, 0xFF, 0xFF, 0xFF, 0xFF]);
        bytes.extend(explicit(Tag::new(0x0008, 0x1150), b"UI", b"1.2\0"));
        bytes.extend_from_slice(&[0x08, 0x00, 0x41, 0x11, b'S', b'Q', 0, 0, 0xFF, 0xFF, 0xFF, 0xFF]);
        bytes.extend_from_slice(&[0xFE, 0xFF, 0x00, 0xE0, 2, 0, 0, 0, 0xAA, 0xBB]);
        bytes.extend_from_slice(&[0xFE, 0xFF, 0xDD, 0xE0, 0, 0, 0, 0]);
        bytes.extend_from_slice(&[0xFE, 0xFF, 0x0D, 0xE0, 0, 0, 0, 0]);
        bytes.extend_from_slice(&[0xFE, 0xFF, 0xDD, 0xE0, 0, 0, 0, 0]);
        bytes.extend(explicit(tags::REPETITION_TIME, b"DS", b"20"));
        let els = parse_file(&bytes).unwrap();
        let tags_seen: Vec<Tag> = els.iter().map(|e| e.tag).collect();
        assert_eq!(
            &tags_seen[2..],
            &[tags::MODALITY, tags::REPETITION_TIME]
        );
    }

    #[test]
    fn oversized_length_is_truncation() {
        let mut bytes = meta(EXPLICIT_VR_LITTLE_ENDIAN);
        let mut e = explicit(tags::REPETITION_TIME, b"DS", b"20");
        e[6] = 200;
        bytes.extend(e);
        assert!(matches!(
            parse_file(&bytes),
            Err(DicomError::TruncatedElement { .. })
        ));
    }
}
