//! Compiles a C program against the generated header and the static library.

use std::path::{Path, PathBuf};
use std::process::Command;

fn staticlib() -> PathBuf {
    // target/<profile>/deps/c_abi-<hash> -> target/<profile>/
    let exe = std::env::current_exe().unwrap();
    exe.parent().unwrap().parent().unwrap().join("liblora_combining_ffi.a")
}

#[test]
fn header_compiles_and_links_from_c() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR"));
    let lib = staticlib();
    assert!(lib.exists(), "missing {}", lib.display());
    let out = tempfile_path("c_smoke");
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    let status = Command::new(&cc)
        .args(["-std=c11", "-Wall", "-Wextra", "-Werror", "-I"])
        .arg(dir.join("include"))
        .arg(dir.join("tests/c_smoke.c"))
        .arg(&lib)
        .args(["-lm", "-lpthread", "-ldl", "-o"])
        .arg(&out)
        .status()
        .unwrap_or_else(|e| panic!("cannot run {cc}: {e}"));
    assert!(status.success(), "C compilation failed");
    let run = Command::new(&out).output().unwrap();
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    assert!(String::from_utf8_lossy(&run.stdout).starts_with("ok "));
    let _ = std::fs::remove_file(out);
}

#[test]
fn header_is_valid_cpp() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR"));
    let cxx = std::env::var("CXX").unwrap_or_else(|_| "c++".into());
    let src = tempfile_path("hdr.cpp");
    std::fs::write(&src, "#include \"lora_combining.h\"\nint main() { return lc_version() == nullptr; }\n").unwrap();
    let status = Command::new(&cxx)
        .args(["-std=c++17", "-Wall", "-Werror", "-fsyntax-only", "-I"])
        .arg(dir.join("include"))
        .arg(&src)
        .status()
        .unwrap_or_else(|e| panic!("cannot run {cxx}: {e}"));
    let _ = std::fs::remove_file(src);
    assert!(status.success());
}

fn tempfile_path(stem: &str) -> PathBuf {
    std::env::temp_dir().join(format!("lora_combining_{}_{stem}", std::process::id()))
}
