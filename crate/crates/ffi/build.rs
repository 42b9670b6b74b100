use std::env;
use std::path::PathBuf;

// Regenerates the committed C header from the extern surface so the two can
// never drift.
fn main() {
    let crate_dir = PathBuf::from(env::var("CARGO_MANIFEST_DIR").unwrap());
    let header = crate_dir.join("include").join("pulsemark.h");
    cbindgen::generate(&crate_dir)
        .expect("cbindgen failed on src/lib.rs")
        .write_to_file(header);
    println!("cargo:rerun-if-changed=src/lib.rs");
    println!("cargo:rerun-if-changed=cbindgen.toml");
}
