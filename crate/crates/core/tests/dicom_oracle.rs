//! Converted files read back through dicom-rs, an independent DICOM toolkit.

mod common;

use common::*;
use dermtag::dicom::{convert_jpeg, DicomError};
use dermtag::metadata::ClinicalMetadata;
use dermtag::tagging::tag_jpeg;
use dermtag::uid::UidContext;
use dicom_dictionary_std::tags;
use proptest::prelude::*;

#[test]
fn fixture_conversions() {
    let m = ClinicalMetadata {
        patient_id: Some("P001".into()),
        patient_name: Some("Doe^Jane".into()),
        patient_sex: Some("F".into()),
        study_date: Some("20210301".into()),
        study_time: Some("093000".into()),
        study_description: Some("lichen planus".into()),
        ..Default::default()
    };
    for name in BASELINE {
        let jpeg = tag_jpeg(&fixture(name), &m).unwrap();
        check_conversion(&jpeg, &m);
    }
}

#[test]
fn non_ascii_values_use_utf8_charset() {
    let m = ClinicalMetadata {
        patient_name: Some("Müller^Jörg=山田^太郎".into()),
        study_description: Some("Lichen ruber planus, Unterarm".into()),
        ..Default::default()
    };
    let jpeg = fixture("color_2x1.jpg");
    check_conversion(&jpeg, &m);
    let obj = read_back(&convert_jpeg(&jpeg, &m, &UidContext::default()).unwrap().bytes);
    assert_eq!(text(&obj, tags::SPECIFIC_CHARACTER_SET), "ISO_IR 192");
}

#[test]
fn empty_metadata_emits_type2_elements() {
    let jpeg = fixture("gray_8x8.jpg");
    check_conversion(&jpeg, &ClinicalMetadata::default());
    let obj = read_back(&convert_jpeg(&jpeg, &ClinicalMetadata::default(), &UidContext::default()).unwrap().bytes);
    for tag in [
        tags::PATIENT_NAME,
        tags::PATIENT_ID,
        tags::PATIENT_BIRTH_DATE,
        tags::PATIENT_SEX,
        tags::STUDY_DATE,
        tags::STUDY_TIME,
        tags::REFERRING_PHYSICIAN_NAME,
        tags::ACCESSION_NUMBER,
        tags::STUDY_ID,
    ] {
        assert_eq!(text(&obj, tag), "", "{}", tag);
    }
}

#[test]
fn odd_length_jpeg_is_padded() {
    let mut jpeg = fixture("gray_8x8.jpg");
    if jpeg.len() % 2 == 0 {
        jpeg.push(0x00); // trailing byte after EOI
    }
    check_conversion(&jpeg, &ClinicalMetadata::default());
}

#[test]
fn progressive_is_refused() {
    let err = convert_jpeg(&fixture("progressive_16x16.jpg"), &ClinicalMetadata::default(), &UidContext::default());
    assert!(matches!(err, Err(DicomError::NotBaselineJpeg)));
}

#[test]
fn deidentified_flag() {
    let m = ClinicalMetadata { patient_id: Some("a1b2".into()), deidentified: true, ..Default::default() };
    let obj = read_back(&convert_jpeg(&fixture("gray_8x8.jpg"), &m, &UidContext::default()).unwrap().bytes);
    assert_eq!(text(&obj, tags::PATIENT_IDENTITY_REMOVED), "YES");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn random_metadata_reads_back(m in arb_metadata(), idx in 0..BASELINE.len()) {
        let jpeg = tag_jpeg(&fixture(BASELINE[idx]), &m).unwrap();
        check_conversion(&jpeg, &m);
    }
}
