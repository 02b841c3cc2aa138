//! Run the HTTP API over a directory.
//!
//!     cargo run --example serve -- [root] [addr]
//!
//! Defaults to a temporary copy of the fixtures on 127.0.0.1:8080.

use std::net::SocketAddr;
use std::path::PathBuf;

use dermtag::service::{serve, ServiceConfig};

#[tokio::main]
async fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let mut _guard = None;
    let root = match args.next() {
        Some(r) => PathBuf::from(r),
        None => {
            let dir = tempfile::tempdir()?;
            let fixtures = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures");
            for e in std::fs::read_dir(fixtures)? {
                let p = e?.path();
                if dermtag::search::is_jpeg_path(&p) {
                    std::fs::copy(&p, dir.path().join(p.file_name().unwrap()))?;
                }
            }
            let root = dir.path().to_owned();
            _guard = Some(dir);
            root
        }
    };
    let addr: SocketAddr = args.next().as_deref().unwrap_or("127.0.0.1:8080").parse()?;
    serve(ServiceConfig::new(root.clone()), addr, |a| {
        println!("serving {} on http://{}/api/images", root.display(), a);
    })
    .await?;
    Ok(())
}
