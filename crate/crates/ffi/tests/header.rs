use std::path::{Path, PathBuf};
use std::process::Command;

fn header() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("include").join("proprio.h")
}

#[test]
fn header_declares_every_export() {
    let text = std::fs::read_to_string(header()).unwrap();
    let src = std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("src/lib.rs")).unwrap();
    let exports: Vec<&str> = src
        .lines()
        .filter_map(|l| l.split("extern \"C\" fn ").nth(1))
        .map(|rest| rest.split('(').next().unwrap())
        .collect();
    assert!(exports.len() > 20);
    for name in exports {
        assert!(text.contains(&format!("{name}(")), "{name} missing from header");
    }
    for ty in ["ProprioDataset", "ProprioCodec", "ProprioMap", "ProprioStatus", "ProprioKdeParams"] {
        assert!(text.contains(ty), "{ty} missing from header");
    }
}

#[test]
fn header_compiles_as_c_and_cpp() {
    for (lang, compiler) in [("c", "cc"), ("c++", "c++")] {
        let status = Command::new(compiler)
            .args(["-fsyntax-only", "-Wall", "-Werror", "-x", lang])
            .arg(header())
            .status()
            .expect("C compiler available");
        assert!(status.success(), "{compiler} rejected the header");
    }
}

#[test]
fn c_program_links_and_runs() {
    // the integration test binary lives in <target>/<profile>/deps
    let exe = std::env::current_exe().unwrap();
    let profile_dir = exe.parent().and_then(Path::parent).unwrap();
    let lib = profile_dir.join("libproprio_ffi.a");
    assert!(lib.exists(), "static library not built at {}", lib.display());
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("main.c");
    std::fs::write(
        &src,
        r#"
#include <stdio.h>
#include "proprio.h"

int main(void) {
    ProprioCodec *codec = NULL;
    if (proprio_codec_single(PROPRIO_FAMILY_GAUSSIAN, 10, -40.0, 30.0, &codec) != PROPRIO_STATUS_OK) return 1;
    double angle = 12.5, code[10], back[1];
    if (proprio_codec_encode(codec, &angle, 1, code, 10) != PROPRIO_STATUS_OK) return 2;
    if (proprio_codec_decode(codec, code, 10, proprio_kde_params_default(), back, 1) != PROPRIO_STATUS_OK) return 3;
    double bad = 99.0;
    if (proprio_codec_encode(codec, &bad, 1, code, 10) != PROPRIO_STATUS_DOMAIN) return 4;
    if (proprio_last_error() == NULL) return 5;
    proprio_codec_free(codec);
    printf("%.3f\n", back[0]);
    return 0;
}
"#,
    )
    .unwrap();
    let bin = dir.path().join("main");
    let status = Command::new("cc")
        .arg(&src)
        .arg("-I")
        .arg(header().parent().unwrap())
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&bin)
        .status()
        .unwrap();
    assert!(status.success(), "linking against {} failed", lib.display());
    let out = Command::new(&bin).output().unwrap();
    assert!(out.status.success(), "C program exited with {:?}", out.status);
    let decoded: f64 = String::from_utf8_lossy(&out.stdout).trim().parse().unwrap();
    assert!((decoded - 12.5).abs() <= 0.1);
}
