//! Generates the C header (include/otoc_ladder.h) from the exported API.

use std::env;
use std::path::PathBuf;

fn main() {
    let crate_dir = PathBuf::from(env::var("CARGO_MANIFEST_DIR").expect("manifest dir"));
    println!("cargo:rerun-if-changed=src/lib.rs");

    let config = cbindgen::Config {
        language: cbindgen::Language::C,
        cpp_compat: true,
        include_guard: Some("OTOC_LADDER_H".into()),
        documentation: true,
        enumeration: cbindgen::EnumConfig {
            prefix_with_name: true,
            ..Default::default()
        },
        header: Some("/* C interface for the two-leg OTOC protocol simulator. */".into()),
        ..Default::default()
    };

    match cbindgen::Builder::new()
        .with_crate(&crate_dir)
        .with_config(config)
        .generate()
    {
        Ok(bindings) => {
            bindings.write_to_file(crate_dir.join("include").join("otoc_ladder.h"));
        }
        // don't break `cargo build` on a cbindgen parse hiccup; the header
        // is a generated artifact, not a build input
        Err(e) => println!("cargo:warning=cbindgen failed: {e}"),
    }
}
