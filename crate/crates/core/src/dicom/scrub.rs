use std::collections::BTreeMap;

use sha2::{Digest, Sha256};

use super::dictionary::tags;
use super::element::{DicomElement, Tag, Vr};
use super::{DicomError, Result};

const DEFAULT_DENY_LIST: &str = include_str!("../../data/phi_denylist.txt");
const DEFAULT_SALT: &str = "protoscope";
const METHOD: &str = "protoscope deny-list";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScrubAction {
    Remove,
    Blank,
    /// Replace a UID with a salted hash under the `2.25` root.
    Hash,
}

/// Tag-to-action table loaded from the plain-text deny list.
#[derive(Debug, Clone, PartialEq)]
pub struct DenyList {
    entries: BTreeMap<Tag, ScrubAction>,
}

impl DenyList {
    /// Parse lines of the form `GGGG,EEEE action`; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let bad = |reason: &str| DicomError::BadDenyList {
                line: i + 1,
                reason: reason.to_string(),
            };
            let mut parts = line.split_whitespace();
            let tag_text = parts.next().ok_or_else(|| bad("missing tag"))?;
            let action_text = parts.next().ok_or_else(|| bad("missing action"))?;
            if parts.next().is_some() {
                return Err(bad("trailing tokens"));
            }
            let (g, e) = tag_text.split_once(',').ok_or_else(|| bad("tag must be GGGG,EEEE"))?;
            let group = u16::from_str_radix(g, 16).map_err(|_| bad("bad group"))?;
            let element = u16::from_str_radix(e, 16).map_err(|_| bad("bad element"))?;
            let action = match action_text.to_ascii_lowercase().as_str() {
                "remove" => ScrubAction::Remove,
                "blank" => ScrubAction::Blank,
                "hash" => ScrubAction::Hash,
                _ => return Err(bad("action must be remove, blank or hash")),
            };
            entries.insert(Tag::new(group, element), action);
        }
        Ok(DenyList { entries })
    }

    pub fn action(&self, tag: Tag) -> Option<ScrubAction> {
        self.entries.get(&tag).copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

impl Default for DenyList {
    fn default() -> Self {
        DenyList::parse(DEFAULT_DENY_LIST).expect("bundled deny list parses")
    }
}

#[derive(Debug, Clone)]
pub struct Scrubber {
    pub deny: DenyList,
    pub salt: String,
}

impl Default for Scrubber {
    fn default() -> Self {
        Scrubber {
            deny: DenyList::default(),
            salt: DEFAULT_SALT.to_string(),
        }
    }
}

impl Scrubber {
    pub fn new(deny: DenyList, salt: impl Into<String>) -> Self {
        Scrubber {
            deny,
            salt: salt.into(),
        }
    }

    fn hash_uid(&self, uid: &str) -> String {
        let mut h = Sha256::new();
        h.update(self.salt.as_bytes());
        h.update([0u8]);
        h.update(uid.as_bytes());
        let digest = h.finalize();
        let n = u128::from_be_bytes(digest[..16].try_into().expect("16 bytes"));
        format!("2.25.{n}")
    }

    /// Remove or rewrite identifying attributes.
    ///
    /// UIDs are hashed only once: the output carries Patient Identity
    /// Removed = YES, and hashing is skipped on input that already has it,
    /// which keeps the operation idempotent.
    pub fn scrub(&self, elements: &[DicomElement]) -> Vec<DicomElement> {
        let already = elements
            .iter()
            .any(|e| e.tag == tags::PATIENT_IDENTITY_REMOVED && e.as_text() == Some("YES"));
        let mut out = Vec::with_capacity(elements.len() + 2);
        for e in elements {
            if e.tag.is_private()
                || e.tag == tags::PATIENT_IDENTITY_REMOVED
                || e.tag == tags::DEIDENTIFICATION_METHOD
            {
                continue;
            }
            match self.deny.action(e.tag) {
                None => out.push(e.clone()),
                Some(ScrubAction::Remove) => {}
                Some(ScrubAction::Blank) => {
                    out.push(DicomElement::from_payload(e.tag, e.vr, Vec::new()))
                }
                Some(ScrubAction::Hash) if already => out.push(e.clone()),
                Some(ScrubAction::Hash) => {
                    let uid = e.as_text().map(str::to_string).unwrap_or_else(|| {
                        String::from_utf8_lossy(&e.payload).into_owned()
                    });
                    out.push(DicomElement::text(e.tag, Vr::UI, &self.hash_uid(&uid)));
                }
            }
        }
        out.push(DicomElement::text(tags::PATIENT_IDENTITY_REMOVED, Vr::CS, "YES"));
        out.push(DicomElement::text(tags::DEIDENTIFICATION_METHOD, Vr::LO, METHOD));
        out.sort_by_key(|e| e.tag);
        out
    }
}

/// Scrub with the bundled deny list and default salt.
pub fn scrub_phi(elements: &[DicomElement]) -> Vec<DicomElement> {
    Scrubber::default().scrub(elements)
}
