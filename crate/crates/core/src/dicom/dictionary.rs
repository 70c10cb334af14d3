//! The handful of standard attributes this crate knows by name.
//!
//! Tags outside this table are carried as `UN`.

use super::element::{Tag, Vr};

macro_rules! tags {
    ($($name:ident = ($g:expr, $e:expr, $vr:ident);)*) => {
        pub mod tags {
            use super::Tag;
            $(pub const $name: Tag = Tag::new($g, $e);)*
        }

        const DICTIONARY: &[(Tag, Vr)] = &[$((tags::$name, Vr::$vr),)*];
    };
}

tags! {
    FILE_META_GROUP_LENGTH = (0x0002, 0x0000, UL);
    FILE_META_VERSION = (0x0002, 0x0001, OB);
    MEDIA_STORAGE_SOP_CLASS_UID = (0x0002, 0x0002, UI);
    MEDIA_STORAGE_SOP_INSTANCE_UID = (0x0002, 0x0003, UI);
    TRANSFER_SYNTAX_UID = (0x0002, 0x0010, UI);
    IMPLEMENTATION_CLASS_UID = (0x0002, 0x0012, UI);
    IMPLEMENTATION_VERSION_NAME = (0x0002, 0x0013, SH);
    SPECIFIC_CHARACTER_SET = (0x0008, 0x0005, CS);
    SOP_CLASS_UID = (0x0008, 0x0016, UI);
    SOP_INSTANCE_UID = (0x0008, 0x0018, UI);
    STUDY_DATE = (0x0008, 0x0020, DA);
    SERIES_DATE = (0x0008, 0x0021, DA);
    STUDY_TIME = (0x0008, 0x0030, TM);
    ACCESSION_NUMBER = (0x0008, 0x0050, SH);
    MODALITY = (0x0008, 0x0060, CS);
    MANUFACTURER = (0x0008, 0x0070, LO);
    INSTITUTION_NAME = (0x0008, 0x0080, LO);
    INSTITUTION_ADDRESS = (0x0008, 0x0081, ST);
    REFERRING_PHYSICIAN_NAME = (0x0008, 0x0090, PN);
    STATION_NAME = (0x0008, 0x1010, SH);
    SERIES_DESCRIPTION = (0x0008, 0x103E, LO);
    INSTITUTIONAL_DEPARTMENT_NAME = (0x0008, 0x1040, LO);
    PERFORMING_PHYSICIAN_NAME = (0x0008, 0x1050, PN);
    READING_PHYSICIAN_NAME = (0x0008, 0x1060, PN);
    OPERATORS_NAME = (0x0008, 0x1070, PN);
    PATIENT_NAME = (0x0010, 0x0010, PN);
    PATIENT_ID = (0x0010, 0x0020, LO);
    PATIENT_BIRTH_DATE = (0x0010, 0x0030, DA);
    PATIENT_SEX = (0x0010, 0x0040, CS);
    OTHER_PATIENT_IDS = (0x0010, 0x1000, LO);
    OTHER_PATIENT_NAMES = (0x0010, 0x1001, PN);
    PATIENT_AGE = (0x0010, 0x1010, AS);
    PATIENT_WEIGHT = (0x0010, 0x1030, DS);
    PATIENT_ADDRESS = (0x0010, 0x1040, LO);
    PATIENT_TELEPHONE_NUMBERS = (0x0010, 0x2154, SH);
    PATIENT_IDENTITY_REMOVED = (0x0012, 0x0062, CS);
    DEIDENTIFICATION_METHOD = (0x0012, 0x0063, LO);
    BODY_PART_EXAMINED = (0x0018, 0x0015, CS);
    SLICE_THICKNESS = (0x0018, 0x0050, DS);
    REPETITION_TIME = (0x0018, 0x0080, DS);
    ECHO_TIME = (0x0018, 0x0081, DS);
    NUMBER_OF_AVERAGES = (0x0018, 0x0083, DS);
    IMAGING_FREQUENCY = (0x0018, 0x0084, DS);
    MAGNETIC_FIELD_STRENGTH = (0x0018, 0x0087, DS);
    PERCENT_SAMPLING = (0x0018, 0x0093, DS);
    PERCENT_PHASE_FIELD_OF_VIEW = (0x0018, 0x0094, DS);
    PROTOCOL_NAME = (0x0018, 0x1030, LO);
    RECONSTRUCTION_DIAMETER = (0x0018, 0x1100, DS);
    RECEIVE_COIL_NAME = (0x0018, 0x1250, SH);
    STUDY_INSTANCE_UID = (0x0020, 0x000D, UI);
    SERIES_INSTANCE_UID = (0x0020, 0x000E, UI);
    STUDY_ID = (0x0020, 0x0010, SH);
    SERIES_NUMBER = (0x0020, 0x0011, IS);
    INSTANCE_NUMBER = (0x0020, 0x0013, IS);
    IMAGE_ORIENTATION_PATIENT = (0x0020, 0x0037, DS);
    SLICE_LOCATION = (0x0020, 0x1041, DS);
    SAMPLES_PER_PIXEL = (0x0028, 0x0002, US);
    PHOTOMETRIC_INTERPRETATION = (0x0028, 0x0004, CS);
    ROWS = (0x0028, 0x0010, US);
    COLUMNS = (0x0028, 0x0011, US);
    PIXEL_SPACING = (0x0028, 0x0030, DS);
    BITS_ALLOCATED = (0x0028, 0x0100, US);
    BITS_STORED = (0x0028, 0x0101, US);
    HIGH_BIT = (0x0028, 0x0102, US);
    PIXEL_REPRESENTATION = (0x0028, 0x0103, US);
    PIXEL_DATA = (0x7FE0, 0x0010, OW);
}

/// Known VR for a standard tag, if the dictionary has it.
pub fn lookup(tag: Tag) -> Option<Vr> {
    DICTIONARY
        .binary_search_by(|(t, _)| t.cmp(&tag))
        .ok()
        .map(|i| DICTIONARY[i].1)
}
