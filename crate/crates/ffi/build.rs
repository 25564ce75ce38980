use std::path::PathBuf;

fn main() {
    let dir = PathBuf::from(std::env::var("CARGO_MANIFEST_DIR").unwrap());
    println!("cargo:rerun-if-changed=src/lib.rs");
    println!("cargo:rerun-if-changed=cbindgen.toml");
    match cbindgen::generate(&dir) {
        Ok(bindings) => {
            bindings.write_to_file(dir.join("include").join("avn.h"));
        }
        Err(e) => println!("cargo:warning=header not regenerated: {e}"),
    }
}
