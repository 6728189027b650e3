use std::path::PathBuf;

fn main() {
    let dir = PathBuf::from(std::env::var("CARGO_MANIFEST_DIR").unwrap());
    println!("cargo:rerun-if-changed=src");
    let config = cbindgen::Config {
        language: cbindgen::Language::C,
        include_guard: Some("GSDEFOCUS_H".into()),
        cpp_compat: true,
        documentation: true,
        header: Some("/* Generated by cbindgen; do not edit. */".into()),
        enumeration: cbindgen::EnumConfig {
            prefix_with_name: false,
            ..Default::default()
        },
        ..Default::default()
    };
    cbindgen::Builder::new()
        .with_crate(&dir)
        .with_config(config)
        .generate()
        .expect("cbindgen failed")
        .write_to_file(dir.join("include/gsdefocus.h"));
}
