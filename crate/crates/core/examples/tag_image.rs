//! Store clinical metadata in a JPEG and read it back.
//!
//!     cargo run --example tag_image -- [input.jpg] [output.jpg]

use std::path::PathBuf;

use dermtag::jpeg::parse_jpeg;
use dermtag::metadata::{split_date_time, ClinicalMetadata};
use dermtag::tagging::{read_tags, tag_jpeg, write_atomic};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let input = args
        .next()
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/camera_le.jpg")));
    let output = args.next().map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("tag_image.jpg"));

    let (date, time) = split_date_time("2021-03-01T09:30:00")?;
    let m = ClinicalMetadata {
        patient_id: Some("P001".into()),
        patient_name: Some("Doe^Jane".into()),
        patient_sex: Some("F".into()),
        study_date: Some(date),
        study_time: time,
        study_description: Some("lichen planus".into()),
        ..Default::default()
    };

    let original = std::fs::read(&input)?;
    let tagged = tag_jpeg(&original, &m)?;
    write_atomic(&output, &tagged)?;

    let doc = parse_jpeg(&tagged)?;
    println!("{} -> {} ({} bytes)", input.display(), output.display(), tagged.len());
    println!("payload: {}", doc.read_user_comment()?.unwrap_or_default());
    let back = read_tags(&doc)?;
    assert_eq!(back.metadata(), Some(&m));
    assert_eq!(doc.scan_data, parse_jpeg(&original)?.scan_data);
    println!("round trip ok, scan data untouched");
    Ok(())
}
