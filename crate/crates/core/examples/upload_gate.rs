//! Reject uploads that still carry clinical metadata.
//!
//!     cargo run --example upload_gate -- file.jpg...
//!
//! Exits 3 if any file is tagged and 1 if any cannot be read, like
//! `dermtag detect`.

use std::path::PathBuf;

use dermtag::cli::{detect_exit_code, verdict};

fn main() {
    let mut paths: Vec<PathBuf> = std::env::args().skip(1).map(PathBuf::from).collect();
    if paths.is_empty() {
        let fixtures = PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures"));
        let mut found: Vec<_> = std::fs::read_dir(&fixtures)
            .expect("fixtures directory")
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| dermtag::search::is_jpeg_path(p))
            .collect();
        found.sort();
        paths = found;
    }
    let verdicts: Vec<_> = paths.iter().map(|p| verdict(p)).collect();
    for (p, v) in paths.iter().zip(&verdicts) {
        println!("{}\t{}", p.display(), v.label());
    }
    std::process::exit(detect_exit_code(&verdicts));
}
