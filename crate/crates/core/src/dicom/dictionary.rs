//! The subset of the standard data dictionary this writer emits.

use super::element::{Tag, Vr};

pub const FILE_META_GROUP_LENGTH: Tag = Tag(0x0002, 0x0000);
pub const FILE_META_VERSION: Tag = Tag(0x0002, 0x0001);
pub const MEDIA_STORAGE_SOP_CLASS_UID: Tag = Tag(0x0002, 0x0002);
pub const MEDIA_STORAGE_SOP_INSTANCE_UID: Tag = Tag(0x0002, 0x0003);
pub const TRANSFER_SYNTAX_UID: Tag = Tag(0x0002, 0x0010);
pub const IMPLEMENTATION_CLASS_UID: Tag = Tag(0x0002, 0x0012);
pub const IMPLEMENTATION_VERSION_NAME: Tag = Tag(0x0002, 0x0013);

pub const SPECIFIC_CHARACTER_SET: Tag = Tag(0x0008, 0x0005);
pub const IMAGE_TYPE: Tag = Tag(0x0008, 0x0008);
pub const SOP_CLASS_UID: Tag = Tag(0x0008, 0x0016);
pub const SOP_INSTANCE_UID: Tag = Tag(0x0008, 0x0018);
pub const STUDY_DATE: Tag = Tag(0x0008, 0x0020);
pub const STUDY_TIME: Tag = Tag(0x0008, 0x0030);
pub const ACCESSION_NUMBER: Tag = Tag(0x0008, 0x0050);
pub const MODALITY: Tag = Tag(0x0008, 0x0060);
pub const CONVERSION_TYPE: Tag = Tag(0x0008, 0x0064);
pub const REFERRING_PHYSICIAN_NAME: Tag = Tag(0x0008, 0x0090);
pub const STUDY_DESCRIPTION: Tag = Tag(0x0008, 0x1030);
pub const PATIENT_NAME: Tag = Tag(0x0010, 0x0010);
pub const PATIENT_ID: Tag = Tag(0x0010, 0x0020);
pub const PATIENT_BIRTH_DATE: Tag = Tag(0x0010, 0x0030);
pub const PATIENT_SEX: Tag = Tag(0x0010, 0x0040);
pub const PATIENT_IDENTITY_REMOVED: Tag = Tag(0x0012, 0x0062);
pub const STUDY_INSTANCE_UID: Tag = Tag(0x0020, 0x000D);
pub const SERIES_INSTANCE_UID: Tag = Tag(0x0020, 0x000E);
pub const STUDY_ID: Tag = Tag(0x0020, 0x0010);
pub const SERIES_NUMBER: Tag = Tag(0x0020, 0x0011);
pub const INSTANCE_NUMBER: Tag = Tag(0x0020, 0x0013);
pub const PATIENT_ORIENTATION: Tag = Tag(0x0020, 0x0020);
pub const SAMPLES_PER_PIXEL: Tag = Tag(0x0028, 0x0002);
pub const PHOTOMETRIC_INTERPRETATION: Tag = Tag(0x0028, 0x0004);
pub const PLANAR_CONFIGURATION: Tag = Tag(0x0028, 0x0006);
pub const ROWS: Tag = Tag(0x0028, 0x0010);
pub const COLUMNS: Tag = Tag(0x0028, 0x0011);
pub const BITS_ALLOCATED: Tag = Tag(0x0028, 0x0100);
pub const BITS_STORED: Tag = Tag(0x0028, 0x0101);
pub const HIGH_BIT: Tag = Tag(0x0028, 0x0102);
pub const PIXEL_REPRESENTATION: Tag = Tag(0x0028, 0x0103);
pub const LOSSY_IMAGE_COMPRESSION: Tag = Tag(0x0028, 0x2110);
pub const LOSSY_IMAGE_COMPRESSION_METHOD: Tag = Tag(0x0028, 0x2114);
pub const PIXEL_DATA: Tag = Tag(0x7FE0, 0x0010);

pub const ITEM: Tag = Tag(0xFFFE, 0xE000);
pub const SEQUENCE_DELIMITATION_ITEM: Tag = Tag(0xFFFE, 0xE0DD);

const ENTRIES: &[(Tag, &str, Vr)] = &[
    (FILE_META_GROUP_LENGTH, "FileMetaInformationGroupLength", Vr::UL),
    (FILE_META_VERSION, "FileMetaInformationVersion", Vr::OB),
    (MEDIA_STORAGE_SOP_CLASS_UID, "MediaStorageSOPClassUID", Vr::UI),
    (MEDIA_STORAGE_SOP_INSTANCE_UID, "MediaStorageSOPInstanceUID", Vr::UI),
    (TRANSFER_SYNTAX_UID, "TransferSyntaxUID", Vr::UI),
    (IMPLEMENTATION_CLASS_UID, "ImplementationClassUID", Vr::UI),
    (IMPLEMENTATION_VERSION_NAME, "ImplementationVersionName", Vr::SH),
    (SPECIFIC_CHARACTER_SET, "SpecificCharacterSet", Vr::CS),
    (IMAGE_TYPE, "ImageType", Vr::CS),
    (SOP_CLASS_UID, "SOPClassUID", Vr::UI),
    (SOP_INSTANCE_UID, "SOPInstanceUID", Vr::UI),
    (STUDY_DATE, "StudyDate", Vr::DA),
    (STUDY_TIME, "StudyTime", Vr::TM),
    (ACCESSION_NUMBER, "AccessionNumber", Vr::SH),
    (MODALITY, "Modality", Vr::CS),
    (CONVERSION_TYPE, "ConversionType", Vr::CS),
    (REFERRING_PHYSICIAN_NAME, "ReferringPhysicianName", Vr::PN),
    (STUDY_DESCRIPTION, "StudyDescription", Vr::LO),
    (PATIENT_NAME, "PatientName", Vr::PN),
    (PATIENT_ID, "PatientID", Vr::LO),
    (PATIENT_BIRTH_DATE, "PatientBirthDate", Vr::DA),
    (PATIENT_SEX, "PatientSex", Vr::CS),
    (PATIENT_IDENTITY_REMOVED, "PatientIdentityRemoved", Vr::CS),
    (STUDY_INSTANCE_UID, "StudyInstanceUID", Vr::UI),
    (SERIES_INSTANCE_UID, "SeriesInstanceUID", Vr::UI),
    (STUDY_ID, "StudyID", Vr::SH),
    (SERIES_NUMBER, "SeriesNumber", Vr::IS),
    (INSTANCE_NUMBER, "InstanceNumber", Vr::IS),
    (PATIENT_ORIENTATION, "PatientOrientation", Vr::CS),
    (SAMPLES_PER_PIXEL, "SamplesPerPixel", Vr::US),
    (PHOTOMETRIC_INTERPRETATION, "PhotometricInterpretation", Vr::CS),
    (PLANAR_CONFIGURATION, "PlanarConfiguration", Vr::US),
    (ROWS, "Rows", Vr::US),
    (COLUMNS, "Columns", Vr::US),
    (BITS_ALLOCATED, "BitsAllocated", Vr::US),
    (BITS_STORED, "BitsStored", Vr::US),
    (HIGH_BIT, "HighBit", Vr::US),
    (PIXEL_REPRESENTATION, "PixelRepresentation", Vr::US),
    (LOSSY_IMAGE_COMPRESSION, "LossyImageCompression", Vr::CS),
    (LOSSY_IMAGE_COMPRESSION_METHOD, "LossyImageCompressionMethod", Vr::CS),
    (PIXEL_DATA, "PixelData", Vr::OB),
];

pub fn lookup(tag: Tag) -> Option<(&'static str, Vr)> {
    ENTRIES.iter().find(|e| e.0 == tag).map(|e| (e.1, e.2))
}
