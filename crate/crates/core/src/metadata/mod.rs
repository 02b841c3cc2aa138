//! Clinical metadata carried in the UserComment payload.
//!
//! Field names follow DICOM keywords so that each value maps directly onto a
//! Secondary Capture attribute. The diagnosis is stored in StudyDescription.

mod anonymize;
mod json;
mod validate;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use chrono::{NaiveDate, NaiveDateTime, Timelike};
use thiserror::Error;

pub use anonymize::{anonymize, pseudonym, AnonymizationPolicy, Anonymizer, DateHandling};
pub use json::{canonical, decode_metadata, detect, encode_metadata, from_document, to_document, MARKER_KEY};
pub use validate::{validate, ValidationIssue};

pub const SCHEMA_VERSION: &str = "1.0";

#[derive(Debug, Error)]
pub enum MetadataError {
    #[error("malformed JSON: {0}")]
    MalformedJson(String),
    #[error("not a dicoderma payload (missing \"dicoderma\" key)")]
    NotDicoderma,
    #[error("invalid metadata: {}", format_issues(.0))]
    InvalidMetadata(Vec<ValidationIssue>),
    #[error("pseudonymization requires a non-empty secret")]
    MissingSecret,
}

fn format_issues(issues: &[ValidationIssue]) -> String {
    issues.iter().map(|i| i.to_string()).collect::<Vec<_>>().join("; ")
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClinicalMetadata {
    pub schema_version: String,
    pub patient_id: Option<String>,
    pub patient_name: Option<String>,
    pub patient_sex: Option<String>,
    pub study_date: Option<String>,
    pub study_time: Option<String>,
    pub study_description: Option<String>,
    pub study_instance_uid: Option<String>,
    pub series_instance_uid: Option<String>,
    pub deidentified: bool,
    /// Keys this version does not interpret, kept for re-emission.
    pub extras: BTreeMap<String, serde_json::Value>,
}

impl Default for ClinicalMetadata {
    fn default() -> Self {
        ClinicalMetadata {
            schema_version: SCHEMA_VERSION.to_owned(),
            patient_id: None,
            patient_name: None,
            patient_sex: None,
            study_date: None,
            study_time: None,
            study_description: None,
            study_instance_uid: None,
            series_instance_uid: None,
            deidentified: false,
            extras: BTreeMap::new(),
        }
    }
}

/// Text-valued metadata fields.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Field {
    PatientId,
    PatientName,
    PatientSex,
    StudyDate,
    StudyTime,
    StudyDescription,
    StudyInstanceUid,
    SeriesInstanceUid,
}

impl Field {
    pub const ALL: [Field; 8] = [
        Field::PatientId,
        Field::PatientName,
        Field::PatientSex,
        Field::StudyDate,
        Field::StudyTime,
        Field::StudyDescription,
        Field::StudyInstanceUid,
        Field::SeriesInstanceUid,
    ];

    /// DICOM keyword, also used as the JSON key.
    pub fn keyword(self) -> &'static str {
        match self {
            Field::PatientId => "PatientID",
            Field::PatientName => "PatientName",
            Field::PatientSex => "PatientSex",
            Field::StudyDate => "StudyDate",
            Field::StudyTime => "StudyTime",
            Field::StudyDescription => "StudyDescription",
            Field::StudyInstanceUid => "StudyInstanceUID",
            Field::SeriesInstanceUid => "SeriesInstanceUID",
        }
    }

    /// Value representation of the corresponding DICOM attribute.
    pub fn vr(self) -> &'static str {
        match self {
            Field::PatientId | Field::StudyDescription => "LO",
            Field::PatientName => "PN",
            Field::PatientSex => "CS",
            Field::StudyDate => "DA",
            Field::StudyTime => "TM",
            Field::StudyInstanceUid | Field::SeriesInstanceUid => "UI",
        }
    }
}

/// Serializes as the payload object, including the marker key.
impl serde::Serialize for ClinicalMetadata {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        to_document(self).serialize(s)
    }
}

impl fmt::Display for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

impl serde::Serialize for Field {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.keyword())
    }
}

impl<'de> serde::Deserialize<'de> for Field {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Field, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown metadata field {0:?}")]
pub struct UnknownField(pub String);

impl FromStr for Field {
    type Err = UnknownField;

    /// Accepts the DICOM keyword (any case), the snake_case name, or
    /// `diagnosis` as an alias for StudyDescription.
    fn from_str(s: &str) -> Result<Field, UnknownField> {
        let norm: String = s.chars().filter(|c| *c != '_').collect::<String>().to_ascii_lowercase();
        if norm == "diagnosis" {
            return Ok(Field::StudyDescription);
        }
        Field::ALL
            .into_iter()
            .find(|f| f.keyword().to_ascii_lowercase() == norm)
            .ok_or_else(|| UnknownField(s.to_owned()))
    }
}

impl ClinicalMetadata {
    pub fn get(&self, field: Field) -> Option<&str> {
        self.slot(field).as_deref()
    }

    pub fn set(&mut self, field: Field, value: Option<String>) {
        *self.slot_mut(field) = value;
    }

    fn slot(&self, field: Field) -> &Option<String> {
        match field {
            Field::PatientId => &self.patient_id,
            Field::PatientName => &self.patient_name,
            Field::PatientSex => &self.patient_sex,
            Field::StudyDate => &self.study_date,
            Field::StudyTime => &self.study_time,
            Field::StudyDescription => &self.study_description,
            Field::StudyInstanceUid => &self.study_instance_uid,
            Field::SeriesInstanceUid => &self.series_instance_uid,
        }
    }

    fn slot_mut(&mut self, field: Field) -> &mut Option<String> {
        match field {
            Field::PatientId => &mut self.patient_id,
            Field::PatientName => &mut self.patient_name,
            Field::PatientSex => &mut self.patient_sex,
            Field::StudyDate => &mut self.study_date,
            Field::StudyTime => &mut self.study_time,
            Field::StudyDescription => &mut self.study_description,
            Field::StudyInstanceUid => &mut self.study_instance_uid,
            Field::SeriesInstanceUid => &mut self.series_instance_uid,
        }
    }

    /// Present fields in keyword order.
    pub fn fields(&self) -> impl Iterator<Item = (Field, &str)> {
        Field::ALL.into_iter().filter_map(|f| self.get(f).map(|v| (f, v)))
    }

    /// Copies every present field of `other` over `self`; extras are merged
    /// key by key and the deidentified flag is or-ed.
    pub fn merge(&mut self, other: &ClinicalMetadata) {
        for (f, v) in other.fields() {
            self.set(f, Some(v.to_owned()));
        }
        self.extras.extend(other.extras.iter().map(|(k, v)| (k.clone(), v.clone())));
        self.deidentified |= other.deidentified;
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unrecognized date-time {0:?} (expected ISO-8601, e.g. 2021-03-01T09:30:00)")]
pub struct DateTimeError(pub String);

/// Splits an ISO-8601 date or date-time into DICOM DA and TM strings.
/// A trailing UTC offset is accepted and ignored; the wall-clock time is kept.
pub fn split_date_time(input: &str) -> Result<(String, Option<String>), DateTimeError> {
    let s = input.trim();
    if let Ok(d) = NaiveDate::parse_from_str(s, "%Y-%m-%d") {
        return Ok((d.format("%Y%m%d").to_string(), None));
    }
    if let Ok(dt) = chrono::DateTime::parse_from_rfc3339(s) {
        return Ok(da_tm(dt.naive_local()));
    }
    for fmt in ["%Y-%m-%dT%H:%M:%S%.f", "%Y-%m-%d %H:%M:%S%.f", "%Y-%m-%dT%H:%M", "%Y-%m-%d %H:%M"] {
        if let Ok(dt) = NaiveDateTime::parse_from_str(s, fmt) {
            return Ok(da_tm(dt));
        }
    }
    Err(DateTimeError(input.to_owned()))
}

fn da_tm(dt: NaiveDateTime) -> (String, Option<String>) {
    let date = dt.format("%Y%m%d").to_string();
    let mut time = dt.format("%H%M%S").to_string();
    let micros = dt.nanosecond() / 1000;
    if micros > 0 {
        time.push_str(&format!(".{:06}", micros));
    }
    (date, Some(time))
}
