//! Secondary Capture objects with the source JPEG encapsulated as pixel data.

mod dataset;
pub mod dictionary;
mod element;

use thiserror::Error;

pub use dataset::{encode_part10, DicomDataset, JPEG_BASELINE_TRANSFER_SYNTAX};
pub use element::{DicomElement, Tag, Vr};

use crate::jpeg::{parse_jpeg, ImageDescriptor, JpegError};
use crate::metadata::{validate, ClinicalMetadata, Field, ValidationIssue};
use crate::uid::{UidContext, UidError};
use dictionary::*;

pub const SECONDARY_CAPTURE_SOP_CLASS: &str = "1.2.840.10008.5.1.4.1.1.7";

/// Fixed suffix appended to the UID root to form the implementation class UID.
const IMPLEMENTATION_SUFFIX: u128 = 0x6d65_7274_6167_0001_5f3c_9a1e_2b7d_4c11;

#[derive(Debug, Error)]
pub enum DicomError {
    #[error("source is not a baseline JPEG; conversion requires JPEG Baseline (Process 1)")]
    NotBaselineJpeg,
    #[error("invalid metadata: {}", .0.iter().map(|i| i.to_string()).collect::<Vec<_>>().join("; "))]
    InvalidMetadata(Vec<ValidationIssue>),
    #[error("JPEG of {0} bytes does not fit in one pixel data fragment")]
    FragmentTooLarge(usize),
    #[error("{tag} must have VR {expected}, got {found}")]
    VrMismatch { tag: Tag, expected: Vr, found: Vr },
    #[error("{tag} value of {len} bytes exceeds the 16-bit length field")]
    ValueTooLong { tag: Tag, len: usize },
    #[error("element {0} does not belong here")]
    MisplacedElement(Tag),
    #[error(transparent)]
    Uid(#[from] UidError),
    #[error(transparent)]
    Jpeg(#[from] JpegError),
}

/// `DERMTAG <version>`, cut to the 16 characters SH allows.
pub fn implementation_version_name() -> String {
    let mut s = format!("DERMTAG {}", env!("CARGO_PKG_VERSION"));
    s.truncate(16);
    s
}

pub fn implementation_class_uid(ctx: &UidContext) -> Result<String, UidError> {
    ctx.uid_for(IMPLEMENTATION_SUFFIX)
}

fn text_or_empty(tag: Tag, vr: Vr, value: Option<&str>) -> DicomElement {
    match value {
        Some(v) => DicomElement::text(tag, vr, v),
        None => DicomElement::empty(tag, vr),
    }
}

/// Builds the Secondary Capture dataset (and file meta) for one image.
pub fn build_sc_dataset(
    m: &ClinicalMetadata,
    img: &ImageDescriptor,
    ctx: &UidContext,
) -> Result<DicomDataset, DicomError> {
    if !img.baseline {
        return Err(DicomError::NotBaselineJpeg);
    }
    let issues = validate(m);
    if !issues.is_empty() {
        return Err(DicomError::InvalidMetadata(issues));
    }

    let sop_instance = ctx.generate()?;
    let study_uid = match &m.study_instance_uid {
        Some(u) => u.clone(),
        None => ctx.generate()?,
    };
    let series_uid = match &m.series_instance_uid {
        Some(u) => u.clone(),
        None => ctx.generate()?,
    };

    let mut ds = DicomDataset::default();
    ds.put_meta(DicomElement::bytes(FILE_META_VERSION, Vr::OB, vec![0x00, 0x01]))?;
    ds.put_meta(DicomElement::text(MEDIA_STORAGE_SOP_CLASS_UID, Vr::UI, SECONDARY_CAPTURE_SOP_CLASS))?;
    ds.put_meta(DicomElement::text(MEDIA_STORAGE_SOP_INSTANCE_UID, Vr::UI, &sop_instance))?;
    ds.put_meta(DicomElement::text(TRANSFER_SYNTAX_UID, Vr::UI, JPEG_BASELINE_TRANSFER_SYNTAX))?;
    ds.put_meta(DicomElement::text(IMPLEMENTATION_CLASS_UID, Vr::UI, &implementation_class_uid(ctx)?))?;
    ds.put_meta(DicomElement::text(IMPLEMENTATION_VERSION_NAME, Vr::SH, &implementation_version_name()))?;

    if m.fields().any(|(_, v)| !v.is_ascii()) {
        ds.put(DicomElement::text(SPECIFIC_CHARACTER_SET, Vr::CS, "ISO_IR 192"))?;
    }
    ds.put(DicomElement::text(IMAGE_TYPE, Vr::CS, "DERIVED\\SECONDARY"))?;
    ds.put(DicomElement::text(SOP_CLASS_UID, Vr::UI, SECONDARY_CAPTURE_SOP_CLASS))?;
    ds.put(DicomElement::text(SOP_INSTANCE_UID, Vr::UI, &sop_instance))?;
    ds.put(text_or_empty(STUDY_DATE, Vr::DA, m.get(Field::StudyDate)))?;
    ds.put(text_or_empty(STUDY_TIME, Vr::TM, m.get(Field::StudyTime)))?;
    ds.put(DicomElement::empty(ACCESSION_NUMBER, Vr::SH))?;
    ds.put(DicomElement::text(MODALITY, Vr::CS, "OT"))?;
    ds.put(DicomElement::text(CONVERSION_TYPE, Vr::CS, "WSD"))?;
    ds.put(DicomElement::empty(REFERRING_PHYSICIAN_NAME, Vr::PN))?;
    if let Some(d) = m.get(Field::StudyDescription) {
        ds.put(DicomElement::text(STUDY_DESCRIPTION, Vr::LO, d))?;
    }
    ds.put(text_or_empty(PATIENT_NAME, Vr::PN, m.get(Field::PatientName)))?;
    ds.put(text_or_empty(PATIENT_ID, Vr::LO, m.get(Field::PatientId)))?;
    ds.put(DicomElement::empty(PATIENT_BIRTH_DATE, Vr::DA))?;
    ds.put(text_or_empty(PATIENT_SEX, Vr::CS, m.get(Field::PatientSex)))?;
    if m.deidentified {
        ds.put(DicomElement::text(PATIENT_IDENTITY_REMOVED, Vr::CS, "YES"))?;
    }
    ds.put(DicomElement::text(STUDY_INSTANCE_UID, Vr::UI, &study_uid))?;
    ds.put(DicomElement::text(SERIES_INSTANCE_UID, Vr::UI, &series_uid))?;
    ds.put(DicomElement::empty(STUDY_ID, Vr::SH))?;
    ds.put(DicomElement::text(SERIES_NUMBER, Vr::IS, "1"))?;
    ds.put(DicomElement::text(INSTANCE_NUMBER, Vr::IS, "1"))?;
    ds.put(DicomElement::empty(PATIENT_ORIENTATION, Vr::CS))?;

    ds.put(DicomElement::us(SAMPLES_PER_PIXEL, img.components as u16))?;
    let photometric = if img.components == 3 { "YBR_FULL_422" } else { "MONOCHROME2" };
    ds.put(DicomElement::text(PHOTOMETRIC_INTERPRETATION, Vr::CS, photometric))?;
    if img.components == 3 {
        ds.put(DicomElement::us(PLANAR_CONFIGURATION, 0))?;
    }
    ds.put(DicomElement::us(ROWS, img.rows))?;
    ds.put(DicomElement::us(COLUMNS, img.columns))?;
    let bits = img.bits_per_sample as u16;
    ds.put(DicomElement::us(BITS_ALLOCATED, bits))?;
    ds.put(DicomElement::us(BITS_STORED, bits))?;
    ds.put(DicomElement::us(HIGH_BIT, bits - 1))?;
    ds.put(DicomElement::us(PIXEL_REPRESENTATION, 0))?;
    ds.put(DicomElement::text(LOSSY_IMAGE_COMPRESSION, Vr::CS, "01"))?;
    ds.put(DicomElement::text(LOSSY_IMAGE_COMPRESSION_METHOD, Vr::CS, "ISO_10918_1"))?;
    Ok(ds)
}

/// Output of a JPEG to DICOM conversion.
#[derive(Debug, Clone)]
pub struct Converted {
    pub bytes: Vec<u8>,
    pub sop_instance_uid: String,
}

/// Parses `jpeg`, builds the SC dataset for `m` and encodes the Part-10 file.
pub fn convert_jpeg(jpeg: &[u8], m: &ClinicalMetadata, ctx: &UidContext) -> Result<Converted, DicomError> {
    let doc = parse_jpeg(jpeg)?;
    let ds = build_sc_dataset(m, &doc.image_descriptor(), ctx)?;
    let sop_instance_uid = ds.get(SOP_INSTANCE_UID).and_then(|e| e.as_str()).unwrap_or_default().to_owned();
    Ok(Converted { bytes: encode_part10(&ds, jpeg)?, sop_instance_uid })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn color() -> ImageDescriptor {
        ImageDescriptor { rows: 1, columns: 2, components: 3, baseline: true, bits_per_sample: 8 }
    }

    fn ctx() -> UidContext {
        UidContext::seeded("2.25", 42).unwrap()
    }

    fn value(ds: &DicomDataset, tag: Tag) -> Vec<u8> {
        ds.get(tag).unwrap().value.clone()
    }

    #[test]
    fn study_description_padding() {
        let m = ClinicalMetadata { study_description: Some("lichen planus".into()), ..Default::default() };
        let ds = build_sc_dataset(&m, &color(), &ctx()).unwrap();
        assert_eq!(value(&ds, STUDY_DESCRIPTION), b"lichen planus ");
    }

    #[test]
    fn image_pixel_module() {
        let ds = build_sc_dataset(&ClinicalMetadata::default(), &color(), &ctx()).unwrap();
        assert_eq!(value(&ds, ROWS), 1u16.to_le_bytes());
        assert_eq!(value(&ds, COLUMNS), 2u16.to_le_bytes());
        assert_eq!(value(&ds, SAMPLES_PER_PIXEL), 3u16.to_le_bytes());
        assert_eq!(ds.get(PHOTOMETRIC_INTERPRETATION).unwrap().as_str(), Some("YBR_FULL_422"));
        assert_eq!(value(&ds, PLANAR_CONFIGURATION), 0u16.to_le_bytes());
        assert_eq!(value(&ds, HIGH_BIT), 7u16.to_le_bytes());
    }

    #[test]
    fn grayscale_has_no_planar_configuration() {
        let img = ImageDescriptor { components: 1, ..color() };
        let ds = build_sc_dataset(&ClinicalMetadata::default(), &img, &ctx()).unwrap();
        assert!(ds.get(PLANAR_CONFIGURATION).is_none());
        assert_eq!(ds.get(PHOTOMETRIC_INTERPRETATION).unwrap().as_str(), Some("MONOCHROME2"));
    }

    #[test]
    fn type2_attributes_present_but_empty() {
        let ds = build_sc_dataset(&ClinicalMetadata::default(), &color(), &ctx()).unwrap();
        for tag in [PATIENT_NAME, PATIENT_ID, PATIENT_BIRTH_DATE, PATIENT_SEX, STUDY_DATE, STUDY_TIME, REFERRING_PHYSICIAN_NAME, ACCESSION_NUMBER, STUDY_ID] {
            assert!(ds.get(tag).unwrap().value.is_empty(), "{}", tag);
        }
        assert!(ds.get(STUDY_DESCRIPTION).is_none());
        assert!(ds.get(SPECIFIC_CHARACTER_SET).is_none());
    }

    #[test]
    fn fixed_attributes() {
        let ds = build_sc_dataset(&ClinicalMetadata::default(), &color(), &ctx()).unwrap();
        let s = |t| ds.get(t).unwrap().as_str().unwrap().to_owned();
        assert_eq!(s(SOP_CLASS_UID), SECONDARY_CAPTURE_SOP_CLASS);
        assert_eq!(s(MODALITY), "OT");
        assert_eq!(s(CONVERSION_TYPE), "WSD");
        assert_eq!(s(IMAGE_TYPE), "DERIVED\\SECONDARY");
        assert_eq!(s(SERIES_NUMBER), "1");
        assert_eq!(s(LOSSY_IMAGE_COMPRESSION), "01");
        assert_eq!(s(MEDIA_STORAGE_SOP_INSTANCE_UID), s(SOP_INSTANCE_UID));
        assert_eq!(s(TRANSFER_SYNTAX_UID), JPEG_BASELINE_TRANSFER_SYNTAX);
        assert!(implementation_version_name().len() <= 16);
        assert!(ds.elements().all(|e| e.value.len() % 2 == 0));
    }

    #[test]
    fn uids_from_metadata_are_kept() {
        let m = ClinicalMetadata { study_instance_uid: Some("1.2.3".into()), ..Default::default() };
        let ds = build_sc_dataset(&m, &color(), &ctx()).unwrap();
        assert_eq!(ds.get(STUDY_INSTANCE_UID).unwrap().as_str(), Some("1.2.3"));
        assert_ne!(ds.get(SERIES_INSTANCE_UID).unwrap().as_str(), Some("1.2.3"));
    }

    #[test]
    fn refuses_progressive_and_invalid() {
        let img = ImageDescriptor { baseline: false, ..color() };
        assert!(matches!(build_sc_dataset(&ClinicalMetadata::default(), &img, &ctx()), Err(DicomError::NotBaselineJpeg)));
        let m = ClinicalMetadata { patient_sex: Some("female".into()), ..Default::default() };
        assert!(matches!(build_sc_dataset(&m, &color(), &ctx()), Err(DicomError::InvalidMetadata(_))));
    }

    #[test]
    fn non_ascii_declares_utf8() {
        let m = ClinicalMetadata { patient_name: Some("MÜLLER^JÖRG".into()), ..Default::default() };
        let ds = build_sc_dataset(&m, &color(), &ctx()).unwrap();
        assert_eq!(ds.get(SPECIFIC_CHARACTER_SET).unwrap().as_str(), Some("ISO_IR 192"));
    }

    #[test]
    fn deterministic_with_seed() {
        let m = ClinicalMetadata { patient_id: Some("P1".into()), ..Default::default() };
        let a = encode_part10(&build_sc_dataset(&m, &color(), &ctx()).unwrap(), b"\xFF\xD8\xFF\xD9").unwrap();
        let b = encode_part10(&build_sc_dataset(&m, &color(), &ctx()).unwrap(), b"\xFF\xD8\xFF\xD9").unwrap();
        assert_eq!(a, b);
    }
}
