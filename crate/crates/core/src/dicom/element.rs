use std::fmt;

use serde::{Deserialize, Serialize};

/// A (group, element) attribute tag. Ordering is lexicographic on the pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Tag {
    pub group: u16,
    pub element: u16,
}

impl Tag {
    pub const fn new(group: u16, element: u16) -> Self {
        Tag { group, element }
    }

    /// Private tags live in odd groups.
    pub fn is_private(self) -> bool {
        self.group % 2 == 1
    }
}

impl fmt::Display for Tag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({:04X},{:04X})", self.group, self.element)
    }
}

/// Two-letter value representation code.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Vr(pub [u8; 2]);

impl Vr {
    pub const AE: Vr = Vr(*b"AE");
    pub const AS: Vr = Vr(*b"AS");
    pub const CS: Vr = Vr(*b"CS");
    pub const DA: Vr = Vr(*b"DA");
    pub const DS: Vr = Vr(*b"DS");
    pub const DT: Vr = Vr(*b"DT");
    pub const FD: Vr = Vr(*b"FD");
    pub const FL: Vr = Vr(*b"FL");
    pub const IS: Vr = Vr(*b"IS");
    pub const LO: Vr = Vr(*b"LO");
    pub const LT: Vr = Vr(*b"LT");
    pub const OB: Vr = Vr(*b"OB");
    pub const OW: Vr = Vr(*b"OW");
    pub const PN: Vr = Vr(*b"PN");
    pub const SH: Vr = Vr(*b"SH");
    pub const SQ: Vr = Vr(*b"SQ");
    pub const SS: Vr = Vr(*b"SS");
    pub const ST: Vr = Vr(*b"ST");
    pub const TM: Vr = Vr(*b"TM");
    pub const UI: Vr = Vr(*b"UI");
    pub const UL: Vr = Vr(*b"UL");
    pub const UN: Vr = Vr(*b"UN");
    pub const US: Vr = Vr(*b"US");

    pub fn as_str(&self) -> &str {
        std::str::from_utf8(&self.0).unwrap_or("??")
    }

    /// VRs encoded with a 2-byte reserved field and a 4-byte length in
    /// explicit-VR transfer syntaxes.
    pub fn has_long_length(self) -> bool {
        matches!(
            &self.0,
            b"OB" | b"OD" | b"OF" | b"OL" | b"OV" | b"OW" | b"SQ" | b"SV" | b"UC" | b"UN" | b"UR"
                | b"UT" | b"UV"
        )
    }

    /// Whether the VR belongs to the set this crate decodes.
    pub fn is_decoded(self) -> bool {
        matches!(
            &self.0,
            b"DS" | b"IS"
                | b"US"
                | b"SS"
                | b"UL"
                | b"CS"
                | b"LO"
                | b"SH"
                | b"PN"
                | b"DA"
                | b"AS"
                | b"TM"
                | b"UI"
                | b"OW"
                | b"OB"
                | b"FL"
                | b"FD"
                | b"UN"
        )
    }

    fn is_text(self) -> bool {
        matches!(
            &self.0,
            b"CS" | b"LO" | b"SH" | b"PN" | b"DA" | b"AS" | b"TM" | b"UI"
        )
    }

    /// Padding byte used to reach even payload length.
    pub fn pad_byte(self) -> u8 {
        if self == Vr::UI || !(self.is_text() || self == Vr::DS || self == Vr::IS) {
            0
        } else {
            b' '
        }
    }
}

impl fmt::Debug for Vr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl fmt::Display for Vr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Typed view of an element payload.
#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Int(Vec<i64>),
    Decimal(Vec<f64>),
    Text(String),
    Bytes(Vec<u8>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DicomElement {
    pub tag: Tag,
    pub vr: Vr,
    pub payload: Vec<u8>,
    pub decoded: Option<Value>,
}

impl DicomElement {
    /// Build an element from raw payload bytes, decoding when the VR is supported.
    pub fn from_payload(tag: Tag, vr: Vr, payload: Vec<u8>) -> Self {
        let decoded = decode(vr, &payload);
        DicomElement {
            tag,
            vr,
            payload,
            decoded,
        }
    }

    /// Text element, padded to even length.
    pub fn text(tag: Tag, vr: Vr, value: &str) -> Self {
        let mut payload = value.as_bytes().to_vec();
        if payload.len() % 2 == 1 {
            payload.push(vr.pad_byte());
        }
        Self::from_payload(tag, vr, payload)
    }

    /// Multi-valued decimal string element using shortest round-trip formatting.
    pub fn decimals(tag: Tag, values: &[f64]) -> Self {
        let s = values
            .iter()
            .map(|v| format_decimal(*v))
            .collect::<Vec<_>>()
            .join("\\");
        Self::text(tag, Vr::DS, &s)
    }

    pub fn us(tag: Tag, value: u16) -> Self {
        Self::from_payload(tag, Vr::US, value.to_le_bytes().to_vec())
    }

    pub fn ul(tag: Tag, value: u32) -> Self {
        Self::from_payload(tag, Vr::UL, value.to_le_bytes().to_vec())
    }

    pub fn as_text(&self) -> Option<&str> {
        match &self.decoded {
            Some(Value::Text(s)) => Some(s.as_str()),
            _ => None,
        }
    }

    /// Decimal values, also accepting integer and numeric-text payloads.
    pub fn as_decimals(&self) -> Option<Vec<f64>> {
        match &self.decoded {
            Some(Value::Decimal(v)) => Some(v.clone()),
            Some(Value::Int(v)) => Some(v.iter().map(|&i| i as f64).collect()),
            Some(Value::Text(s)) => s
                .split('\\')
                .map(|t| t.trim().parse::<f64>().ok())
                .collect(),
            _ => None,
        }
    }

    pub fn as_decimal(&self) -> Option<f64> {
        self.as_decimals().and_then(|v| v.first().copied())
    }

    pub fn as_int(&self) -> Option<i64> {
        match &self.decoded {
            Some(Value::Int(v)) => v.first().copied(),
            Some(Value::Text(s)) => s.split('\\').next()?.trim().parse().ok(),
            _ => None,
        }
    }
}

/// Shortest decimal text that parses back to the same `f64`.
pub fn format_decimal(v: f64) -> String {
    format!("{v}")
}

fn trim_text(bytes: &[u8]) -> String {
    let s = String::from_utf8_lossy(bytes);
    s.trim_matches(|c: char| c == ' ' || c == '\0').to_string()
}

fn fixed<const N: usize, T>(payload: &[u8], f: impl Fn([u8; N]) -> T) -> Option<Vec<T>> {
    if payload.len() % N != 0 {
        return None;
    }
    Some(
        payload
            .chunks_exact(N)
            .map(|c| f(c.try_into().expect("chunk size")))
            .collect(),
    )
}

fn numeric_tokens<T: std::str::FromStr>(text: &str) -> Option<Vec<T>> {
    if text.is_empty() {
        return Some(Vec::new());
    }
    text.split('\\').map(|t| t.trim().parse().ok()).collect()
}

/// Decode a payload for the supported VR set; `None` for anything else.
pub fn decode(vr: Vr, payload: &[u8]) -> Option<Value> {
    if !vr.is_decoded() {
        return None;
    }
    let value = match &vr.0 {
        b"IS" => {
            let text = trim_text(payload);
            numeric_tokens::<i64>(&text)
                .map(Value::Int)
                .unwrap_or(Value::Text(text))
        }
        b"DS" => {
            let text = trim_text(payload);
            numeric_tokens::<f64>(&text)
                .map(Value::Decimal)
                .unwrap_or(Value::Text(text))
        }
        b"US" => fixed::<2, _>(payload, |b| u16::from_le_bytes(b) as i64)
            .map(Value::Int)
            .unwrap_or_else(|| Value::Bytes(payload.to_vec())),
        b"SS" => fixed::<2, _>(payload, |b| i16::from_le_bytes(b) as i64)
            .map(Value::Int)
            .unwrap_or_else(|| Value::Bytes(payload.to_vec())),
        b"UL" => fixed::<4, _>(payload, |b| u32::from_le_bytes(b) as i64)
            .map(Value::Int)
            .unwrap_or_else(|| Value::Bytes(payload.to_vec())),
        b"FL" => fixed::<4, _>(payload, |b| f32::from_le_bytes(b) as f64)
            .map(Value::Decimal)
            .unwrap_or_else(|| Value::Bytes(payload.to_vec())),
        b"FD" => fixed::<8, _>(payload, f64::from_le_bytes)
            .map(Value::Decimal)
            .unwrap_or_else(|| Value::Bytes(payload.to_vec())),
        b"OB" | b"OW" | b"UN" => Value::Bytes(payload.to_vec()),
        _ => Value::Text(trim_text(payload)),
    };
    Some(value)
}
