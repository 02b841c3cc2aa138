//! Generate DICOM UIDs under the 2.25 root or an organisation root.
//!
//!     cargo run --example generate_uids -- [count] [root]

use dermtag::uid::{is_valid_uid, UidContext, UUID_ROOT};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let count: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(5);
    let root = args.next().unwrap_or_else(|| UUID_ROOT.into());
    let ctx = UidContext::new(&root, Box::new(dermtag::uid::OsEntropy))?;
    for _ in 0..count {
        let uid = ctx.generate()?;
        debug_assert!(is_valid_uid(&uid));
        println!("{}", uid);
    }
    eprintln!("smallest: {}", ctx.uid_for(1)?);
    Ok(())
}
