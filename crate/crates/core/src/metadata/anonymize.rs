//! De-identification of clinical metadata.

use std::collections::HashMap;

use hmac::{Hmac, Mac};
use sha2::Sha256;

use super::{validate, ClinicalMetadata, MetadataError};
use crate::uid::UidContext;

/// Number of hex characters kept from the keyed hash.
pub const PSEUDONYM_LEN: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DateHandling {
    #[default]
    Keep,
    /// StudyDate becomes YYYY0101 and StudyTime is removed.
    YearOnly,
    Drop,
}

#[derive(Debug, Clone)]
pub struct AnonymizationPolicy {
    pub drop_name: bool,
    pub pseudonymize_id: bool,
    pub date_handling: DateHandling,
    /// Key for the HMAC-SHA256 pseudonym.
    pub secret: Vec<u8>,
    /// Keep payload keys this version does not interpret. Off by default
    /// since nothing is known about what they contain.
    pub keep_extras: bool,
}

impl Default for AnonymizationPolicy {
    fn default() -> Self {
        AnonymizationPolicy {
            drop_name: true,
            pseudonymize_id: true,
            date_handling: DateHandling::Keep,
            secret: Vec::new(),
            keep_extras: false,
        }
    }
}

impl AnonymizationPolicy {
    pub fn with_secret(secret: impl Into<Vec<u8>>) -> AnonymizationPolicy {
        AnonymizationPolicy { secret: secret.into(), ..Default::default() }
    }
}

/// First 16 lowercase hex characters of HMAC-SHA256(secret, id).
pub fn pseudonym(secret: &[u8], id: &str) -> String {
    let mut mac = Hmac::<Sha256>::new_from_slice(secret).expect("HMAC accepts keys of any length");
    mac.update(id.as_bytes());
    let digest = mac.finalize().into_bytes();
    let mut hex: String = digest.iter().map(|b| format!("{:02x}", b)).collect();
    hex.truncate(PSEUDONYM_LEN);
    hex
}

/// Applies one policy to a batch of images. UIDs are remapped consistently
/// within the batch, so images from one study keep a shared (new)
/// StudyInstanceUID.
#[derive(Debug)]
pub struct Anonymizer {
    policy: AnonymizationPolicy,
    uids: UidContext,
    remapped: HashMap<String, String>,
}

impl Anonymizer {
    pub fn new(policy: AnonymizationPolicy, uids: UidContext) -> Result<Anonymizer, MetadataError> {
        if policy.pseudonymize_id && policy.secret.is_empty() {
            return Err(MetadataError::MissingSecret);
        }
        Ok(Anonymizer { policy, uids, remapped: HashMap::new() })
    }

    pub fn policy(&self) -> &AnonymizationPolicy {
        &self.policy
    }

    pub fn anonymize(&mut self, m: &ClinicalMetadata) -> Result<ClinicalMetadata, MetadataError> {
        let issues = validate(m);
        if !issues.is_empty() {
            return Err(MetadataError::InvalidMetadata(issues));
        }
        if m.deidentified {
            return Ok(m.clone());
        }
        let p = &self.policy;
        let mut out = m.clone();
        if p.drop_name {
            out.patient_name = None;
        }
        if p.pseudonymize_id {
            out.patient_id = m.patient_id.as_deref().map(|id| pseudonym(&p.secret, id));
        }
        match p.date_handling {
            DateHandling::Keep => {}
            DateHandling::YearOnly => {
                out.study_date = m.study_date.as_deref().map(|d| format!("{}0101", &d[..4]));
                out.study_time = None;
            }
            DateHandling::Drop => {
                out.study_date = None;
                out.study_time = None;
            }
        }
        if !p.keep_extras {
            out.extras.clear();
        }
        out.study_instance_uid = self.remap(m.study_instance_uid.as_deref())?;
        out.series_instance_uid = self.remap(m.series_instance_uid.as_deref())?;
        out.deidentified = true;
        debug_assert!(validate(&out).is_empty());
        Ok(out)
    }

    fn remap(&mut self, uid: Option<&str>) -> Result<Option<String>, MetadataError> {
        let Some(uid) = uid else { return Ok(None) };
        if let Some(new) = self.remapped.get(uid) {
            return Ok(Some(new.clone()));
        }
        let new = self
            .uids
            .generate()
            .map_err(|e| MetadataError::InvalidMetadata(vec![super::ValidationIssue {
                field: "uid-root".into(),
                rule: "UI-maxlen".into(),
                message: e.to_string(),
            }]))?;
        self.remapped.insert(uid.to_owned(), new.clone());
        Ok(Some(new))
    }
}

/// Single-image convenience wrapper using a fresh batch.
pub fn anonymize(m: &ClinicalMetadata, p: &AnonymizationPolicy) -> Result<ClinicalMetadata, MetadataError> {
    Anonymizer::new(p.clone(), UidContext::default())?.anonymize(m)
}
