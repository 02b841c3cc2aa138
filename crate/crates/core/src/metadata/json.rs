//! Canonical JSON payload.
//!
//! Canonical form: one object, keys sorted by byte value at every nesting
//! level, no whitespace, every non-ASCII character written as a `\uXXXX`
//! escape (UTF-16 code units). The output is therefore pure ASCII and two
//! equal metadata values always encode to the same bytes.

use std::fmt::Write as _;

use serde_json::{Map, Value};

use super::validate::is_version;
use super::{validate, ClinicalMetadata, Field, MetadataError, ValidationIssue};

/// Marker key identifying a payload; its value is the schema version.
pub const MARKER_KEY: &str = "dicoderma";
pub(crate) const DEIDENTIFIED_KEY: &str = "Deidentified";

pub fn encode_metadata(m: &ClinicalMetadata) -> Result<String, MetadataError> {
    let issues = validate(m);
    if !issues.is_empty() {
        return Err(MetadataError::InvalidMetadata(issues));
    }
    Ok(canonical(&Value::Object(to_object(m))))
}

pub(crate) fn to_object(m: &ClinicalMetadata) -> Map<String, Value> {
    let mut obj: Map<String, Value> = m.extras.iter().map(|(k, v)| (k.clone(), v.clone())).collect();
    obj.insert(MARKER_KEY.to_owned(), Value::String(m.schema_version.clone()));
    for (f, v) in m.fields() {
        obj.insert(f.keyword().to_owned(), Value::String(v.to_owned()));
    }
    if m.deidentified {
        obj.insert(DEIDENTIFIED_KEY.to_owned(), Value::Bool(true));
    }
    obj
}

pub fn decode_metadata(text: &str) -> Result<ClinicalMetadata, MetadataError> {
    let value: Value = serde_json::from_str(text).map_err(|e| MetadataError::MalformedJson(e.to_string()))?;
    let Value::Object(obj) = value else {
        return Err(MetadataError::NotDicoderma);
    };
    if !obj.contains_key(MARKER_KEY) {
        return Err(MetadataError::NotDicoderma);
    }
    from_object(obj, true)
}

/// Builds metadata from a JSON object. With `require_marker` false a
/// missing version marker defaults to the current schema version.
pub(crate) fn from_object(obj: Map<String, Value>, require_marker: bool) -> Result<ClinicalMetadata, MetadataError> {
    let mut m = ClinicalMetadata::default();
    let mut issues = Vec::new();
    let type_issue = |key: &str, expected: &str| ValidationIssue {
        field: key.to_owned(),
        rule: "value-type".to_owned(),
        message: format!("expected a JSON {}", expected),
    };
    let mut saw_marker = false;
    for (key, value) in obj {
        if key == MARKER_KEY {
            saw_marker = true;
            match value {
                Value::String(s) => m.schema_version = s,
                _ => issues.push(type_issue(&key, "string")),
            }
        } else if key == DEIDENTIFIED_KEY {
            match value {
                Value::Bool(b) => m.deidentified = b,
                _ => issues.push(type_issue(&key, "boolean")),
            }
        } else if let Some(field) = Field::ALL.into_iter().find(|f| f.keyword() == key) {
            match value {
                Value::String(s) => m.set(field, Some(s)),
                Value::Null => {}
                _ => issues.push(type_issue(&key, "string")),
            }
        } else {
            m.extras.insert(key, value);
        }
    }
    if require_marker && !saw_marker {
        return Err(MetadataError::NotDicoderma);
    }
    issues.extend(validate(&m));
    if issues.is_empty() {
        Ok(m)
    } else {
        Err(MetadataError::InvalidMetadata(issues))
    }
}

/// Metadata as a JSON object (the payload before canonical serialization).
pub fn to_document(m: &ClinicalMetadata) -> Value {
    Value::Object(to_object(m))
}

/// Reads a metadata document submitted by a client. The version marker is
/// optional here and defaults to the current schema version.
pub fn from_document(doc: Value) -> Result<ClinicalMetadata, MetadataError> {
    match doc {
        Value::Object(obj) => from_object(obj, false),
        _ => Err(MetadataError::MalformedJson("expected a JSON object".into())),
    }
}

/// True iff `comment` is a JSON object carrying the marker key with a
/// well-formed version string. Never fails.
pub fn detect(comment: Option<&str>) -> bool {
    let Some(text) = comment else { return false };
    match serde_json::from_str::<Value>(text) {
        Ok(Value::Object(obj)) => obj.get(MARKER_KEY).and_then(Value::as_str).is_some_and(is_version),
        _ => false,
    }
}

/// Serializes any JSON value in canonical form.
pub fn canonical(value: &Value) -> String {
    let mut out = String::new();
    write_value(&mut out, value);
    out
}

fn write_value(out: &mut String, value: &Value) {
    match value {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => out.push_str(&n.to_string()),
        Value::String(s) => write_string(out, s),
        Value::Array(items) => {
            out.push('[');
            for (i, v) in items.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write_value(out, v);
            }
            out.push(']');
        }
        Value::Object(map) => {
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            out.push('{');
            for (i, k) in keys.into_iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write_string(out, k);
                out.push(':');
                write_value(out, &map[k]);
            }
            out.push('}');
        }
    }
}

fn write_string(out: &mut String, s: &str) {
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            '\u{08}' => out.push_str("\\b"),
            '\u{0c}' => out.push_str("\\f"),
            c if (c as u32) < 0x20 || !c.is_ascii() => {
                let mut buf = [0u16; 2];
                for unit in c.encode_utf16(&mut buf) {
                    let _ = write!(out, "\\u{:04x}", unit);
                }
            }
            c => out.push(c),
        }
    }
    out.push('"');
}
