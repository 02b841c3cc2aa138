//! Recursive search by diagnosis.
//!
//!     cargo run --example search_folder -- [root] [text]
//!
//! Without a root, a small nested folder of tagged fixtures is built in a
//! temporary directory first.

use std::path::PathBuf;
use std::time::Instant;

use dermtag::metadata::{ClinicalMetadata, Field};
use dermtag::search::{scan, Predicate, SearchQuery};
use dermtag::tagging::tag_jpeg;

fn demo_corpus() -> Result<tempfile::TempDir, Box<dyn std::error::Error>> {
    let dir = tempfile::tempdir()?;
    let raw = std::fs::read(concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/gray_8x8.jpg"))?;
    let diagnoses = ["lichen planus", "psoriasis", "eczema", "Lichen sclerosus", "melanoma in situ"];
    for (i, dx) in diagnoses.iter().enumerate() {
        let sub = dir.path().join(format!("clinic{}/visit{}", i % 2, i));
        std::fs::create_dir_all(&sub)?;
        let m = ClinicalMetadata {
            patient_id: Some(format!("P{:03}", i)),
            study_description: Some((*dx).into()),
            ..Default::default()
        };
        std::fs::write(sub.join("lesion.jpg"), tag_jpeg(&raw, &m)?)?;
    }
    std::fs::write(dir.path().join("untagged.jpg"), &raw)?;
    Ok(dir)
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let (root, _guard) = match args.next() {
        Some(r) => (PathBuf::from(r), None),
        None => {
            let d = demo_corpus()?;
            (d.path().to_owned(), Some(d))
        }
    };
    let text = args.next().unwrap_or_else(|| "lichen".into());

    let query = SearchQuery::new(vec![Predicate::contains(Field::StudyDescription, &text)]);
    let started = Instant::now();
    let outcome = scan(&root, &query)?;
    for r in &outcome.records {
        println!("{}\t{}", r.path.display(), r.metadata.study_description.as_deref().unwrap_or(""));
    }
    let d = &outcome.diagnostics;
    eprintln!(
        "{} match(es); {} jpeg(s) seen, {} tagged, {} untagged, {} unparseable in {:?}",
        outcome.records.len(),
        d.considered,
        d.tagged,
        d.untagged,
        d.unparseable,
        started.elapsed()
    );
    Ok(())
}
