use std::path::PathBuf;
use std::process::Command;

// The cdylib is built next to this test in `deps/`, or uplifted one level.
fn library() -> Option<PathBuf> {
    let exe = std::env::current_exe().ok()?;
    let deps = exe.parent()?;
    [deps, deps.parent()?]
        .iter()
        .flat_map(|d| ["libpyprovisim.so", "libpyprovisim.dylib"].map(|n| d.join(n)))
        .find(|p| p.exists())
}

#[test]
fn python_smoke_script() {
    let Some(lib) = library() else {
        eprintln!("skipped: extension library not found");
        return;
    };
    let script = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("python/smoke_test.py");
    let out = match Command::new("python3").arg(&script).env("PYPROVISIM_LIB", &lib).output() {
        Ok(out) => out,
        Err(e) => {
            eprintln!("skipped: python3 unavailable ({e})");
            return;
        }
    };
    assert!(
        out.status.success(),
        "{}\n{}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    println!("{}", String::from_utf8_lossy(&out.stdout).trim());
}
