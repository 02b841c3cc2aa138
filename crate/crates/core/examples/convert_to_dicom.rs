//! Convert a tagged JPEG into a DICOM Secondary Capture file.
//!
//!     cargo run --example convert_to_dicom -- [tagged.jpg] [out.dcm]

use std::path::PathBuf;

use dermtag::dicom::convert_jpeg;
use dermtag::jpeg::parse_jpeg;
use dermtag::metadata::ClinicalMetadata;
use dermtag::tagging::{read_tags, tag_jpeg, write_atomic};
use dermtag::uid::UidContext;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let jpeg = match args.next() {
        Some(p) => std::fs::read(p)?,
        None => {
            // Tag a fixture on the fly.
            let raw = std::fs::read(concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/color_2x1.jpg"))?;
            let m = ClinicalMetadata {
                patient_id: Some("P001".into()),
                study_description: Some("psoriasis".into()),
                ..Default::default()
            };
            tag_jpeg(&raw, &m)?
        }
    };
    let out = args.next().map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("convert_to_dicom.dcm"));

    let metadata = read_tags(&parse_jpeg(&jpeg)?)?.metadata().cloned().ok_or("input is not tagged")?;
    let converted = convert_jpeg(&jpeg, &metadata, &UidContext::default())?;
    write_atomic(&out, &converted.bytes)?;

    println!("wrote {} ({} bytes)", out.display(), converted.bytes.len());
    println!("SOPInstanceUID {}", converted.sop_instance_uid);
    Ok(())
}
