use std::fmt;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::{ClinicalMetadata, Field};
use crate::uid::is_valid_uid;

/// One rule violation. `rule` identifiers are stable.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationIssue {
    pub field: String,
    pub rule: String,
    pub message: String,
}

impl fmt::Display for ValidationIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {} ({})", self.field, self.message, self.rule)
    }
}

fn issue(field: impl ToString, rule: &str, message: impl Into<String>) -> ValidationIssue {
    ValidationIssue { field: field.to_string(), rule: rule.to_owned(), message: message.into() }
}

const SEX_CODES: [&str; 3] = ["M", "F", "O"];

/// Every rule violation in `m`; empty when the metadata can be encoded and
/// mapped onto DICOM attributes.
pub fn validate(m: &ClinicalMetadata) -> Vec<ValidationIssue> {
    let mut out = Vec::new();
    if !is_version(&m.schema_version) {
        out.push(issue("dicoderma", "version-format", format!("schema version {:?} is not MAJOR.MINOR", m.schema_version)));
    }
    for (field, value) in m.fields() {
        check_field(field, value, &mut out);
    }
    for key in m.extras.keys() {
        let reserved = key == super::MARKER_KEY
            || key == super::json::DEIDENTIFIED_KEY
            || Field::ALL.iter().any(|f| f.keyword() == key);
        if reserved {
            out.push(issue(key, "extras-reserved", "extra key collides with a schema key"));
        }
    }
    out
}

pub(crate) fn is_version(v: &str) -> bool {
    match v.split_once('.') {
        Some((a, b)) => [a, b].iter().all(|p| !p.is_empty() && p.bytes().all(|c| c.is_ascii_digit())),
        None => false,
    }
}

fn check_field(field: Field, value: &str, out: &mut Vec<ValidationIssue>) {
    if value.is_empty() {
        out.push(issue(field, "value-empty", "empty value; omit the field instead"));
        return;
    }
    match field.vr() {
        "LO" => check_lo(field, value, out),
        "PN" => check_pn(field, value, out),
        "CS" => check_sex(field, value, out),
        "DA" => check_da(field, value, out),
        "TM" => check_tm(field, value, out),
        "UI" => check_ui(field, value, out),
        vr => unreachable!("no rule for VR {}", vr),
    }
}

fn has_forbidden_char(value: &str) -> bool {
    value.chars().any(|c| c == '\\' || c.is_control())
}

fn check_lo(field: Field, value: &str, out: &mut Vec<ValidationIssue>) {
    let n = value.chars().count();
    if n > 64 {
        out.push(issue(field, "LO-maxlen", format!("{} characters exceeds the LO limit of 64", n)));
    }
    if has_forbidden_char(value) {
        out.push(issue(field, "LO-charset", "LO values may not contain backslash or control characters"));
    }
}

fn check_pn(field: Field, value: &str, out: &mut Vec<ValidationIssue>) {
    if has_forbidden_char(value) {
        out.push(issue(field, "PN-charset", "PN values may not contain backslash or control characters"));
    }
    let groups: Vec<&str> = value.split('=').collect();
    if groups.len() > 3 {
        out.push(issue(field, "PN-components", "at most 3 component groups separated by '='"));
    }
    for g in &groups {
        let n = g.chars().count();
        if n > 64 {
            out.push(issue(field, "PN-maxlen", format!("component group of {} characters exceeds 64", n)));
        }
        if g.split('^').count() > 5 {
            out.push(issue(field, "PN-components", "at most 5 '^'-separated components per group"));
        }
    }
}

fn check_sex(field: Field, value: &str, out: &mut Vec<ValidationIssue>) {
    let charset_ok = value.len() <= 16
        && value.bytes().all(|b| b.is_ascii_uppercase() || b.is_ascii_digit() || b == b' ' || b == b'_');
    if !charset_ok {
        out.push(issue(field, "CS-charset", "CS values are 1-16 characters from A-Z, 0-9, space and underscore"));
    }
    if !SEX_CODES.contains(&value) {
        out.push(issue(field, "CS-codeset", format!("{:?} is not in the CS code set {{M, F, O}}", value)));
    }
}

fn check_da(field: Field, value: &str, out: &mut Vec<ValidationIssue>) {
    if value.len() != 8 || !value.bytes().all(|b| b.is_ascii_digit()) {
        out.push(issue(field, "DA-format", "DA values are YYYYMMDD"));
        return;
    }
    if NaiveDate::parse_from_str(value, "%Y%m%d").is_err() {
        out.push(issue(field, "DA-calendar", format!("{} is not a calendar date", value)));
    }
}

/// HH, HHMM, HHMMSS or HHMMSS.F with 1-6 fraction digits.
fn check_tm(field: Field, value: &str, out: &mut Vec<ValidationIssue>) {
    let (main, frac) = match value.split_once('.') {
        Some((m, f)) => (m, Some(f)),
        None => (value, None),
    };
    let digits = |s: &str| !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit());
    let shape_ok = digits(main)
        && matches!(main.len(), 2 | 4 | 6)
        && frac.map_or(true, |f| main.len() == 6 && digits(f) && f.len() <= 6);
    if !shape_ok {
        out.push(issue(field, "TM-format", "TM values are HH, HHMM, HHMMSS or HHMMSS.FFFFFF"));
        return;
    }
    let part = |i: usize| main.get(i..i + 2).map(|p| p.parse::<u32>().unwrap_or(0));
    let in_range = part(0).map_or(true, |h| h < 24)
        && part(2).map_or(true, |m| m < 60)
        && part(4).map_or(true, |s| s < 60);
    if !in_range {
        out.push(issue(field, "TM-range", format!("{} has an out-of-range component", value)));
    }
}

fn check_ui(field: Field, value: &str, out: &mut Vec<ValidationIssue>) {
    if value.len() > 64 {
        out.push(issue(field, "UI-maxlen", format!("{} characters exceeds the UI limit of 64", value.len())));
    }
    let grammar = value.split('.').all(|c| {
        !c.is_empty() && c.bytes().all(|b| b.is_ascii_digit()) && (c == "0" || !c.starts_with('0'))
    });
    if !grammar {
        out.push(issue(field, "UI-grammar", "UI values are dot-separated decimal components without leading zeros"));
    }
    debug_assert_eq!(grammar && value.len() <= 64, is_valid_uid(value));
}
