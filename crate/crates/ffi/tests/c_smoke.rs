//! Builds tests/c/smoke.c against the generated header and the static
//! library, then runs it. Skipped when no C compiler is available.

use std::path::PathBuf;
use std::process::Command;

#[test]
fn c_program_links_and_runs() {
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let exe = std::env::current_exe().unwrap();
    let profile_dir = exe.parent().and_then(|p| p.parent()).unwrap();
    let lib = profile_dir.join("libotdrimg_ffi.a");
    if !lib.exists() {
        eprintln!("skipping: {} not found", lib.display());
        return;
    }
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    let out = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("otdr_smoke");
    let build = Command::new(&cc)
        .arg(manifest.join("tests/c/smoke.c"))
        .arg("-I")
        .arg(manifest.join("include"))
        .arg(&lib)
        .args(["-lm", "-lpthread", "-ldl", "-o"])
        .arg(&out)
        .output();
    let build = match build {
        Ok(b) => b,
        Err(e) => {
            eprintln!("skipping: cannot run {cc}: {e}");
            return;
        }
    };
    assert!(build.status.success(), "{}", String::from_utf8_lossy(&build.stderr));
    let run = Command::new(&out).output().unwrap();
    assert!(run.status.success(), "exit {:?}: {}", run.status.code(), String::from_utf8_lossy(&run.stderr));
    assert!(String::from_utf8_lossy(&run.stdout).contains("accuracy=0.75"));
}
