//! Dump the marker segments, frame header and EXIF directories of a JPEG.
//!
//!     cargo run --example inspect_exif -- [file.jpg]

use dermtag::jpeg::parse_jpeg;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = std::env::args()
        .nth(1)
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/camera_le.jpg").into());
    let bytes = std::fs::read(&path)?;
    let doc = parse_jpeg(&bytes)?;

    println!("{}: {} bytes", path, bytes.len());
    for s in &doc.segments {
        println!("  FF{:02X}  {:>6} bytes", s.marker, s.payload.len());
    }
    println!("  scan   {:>6} bytes", doc.scan_data.len());
    let f = doc.image_descriptor();
    println!("frame: {}x{} rows x cols, {} component(s), baseline={}", f.rows, f.columns, f.components, f.baseline);

    let Some(exif) = doc.exif()? else {
        println!("no EXIF");
        return Ok(());
    };
    println!("EXIF byte order: {:?}", exif.byte_order);
    for (kind, e) in exif.entries() {
        println!("  {:<9} 0x{:04X} type {:>2} count {:>4}", format!("{:?}", kind), e.tag, e.field_type, e.count);
    }
    if let Some(t) = exif.ifd1.as_ref().and_then(|i| i.thumbnail.as_ref()) {
        println!("thumbnail: {} bytes", t.len());
    }
    println!("UserComment: {:?}", doc.read_user_comment()?);
    Ok(())
}
