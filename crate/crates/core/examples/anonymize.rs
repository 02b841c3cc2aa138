//! Anonymize a batch of payloads with one key.
//!
//!     DERMTAG_SECRET=... cargo run --example anonymize

use dermtag::metadata::{encode_metadata, pseudonym, AnonymizationPolicy, Anonymizer, ClinicalMetadata, DateHandling};
use dermtag::uid::UidContext;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let secret = std::env::var("DERMTAG_SECRET").unwrap_or_else(|_| "example-only-secret".into());
    let policy = AnonymizationPolicy { date_handling: DateHandling::YearOnly, ..AnonymizationPolicy::with_secret(secret.as_bytes()) };
    let mut anon = Anonymizer::new(policy, UidContext::default())?;

    let study = "1.2.826.0.1.3680043.2.1125.1";
    let batch: Vec<ClinicalMetadata> = ["P001", "P002", "P001"]
        .iter()
        .map(|id| ClinicalMetadata {
            patient_id: Some((*id).into()),
            patient_name: Some("Doe^Jane".into()),
            study_date: Some("20210301".into()),
            study_instance_uid: Some(study.into()),
            ..Default::default()
        })
        .collect();

    for m in &batch {
        let out = anon.anonymize(m)?;
        println!("{}", encode_metadata(&out)?);
        // running it again changes nothing
        assert_eq!(anon.anonymize(&out)?, out);
    }
    println!("pseudonym(P001) = {}", pseudonym(secret.as_bytes(), "P001"));
    Ok(())
}
