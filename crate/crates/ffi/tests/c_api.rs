use std::ffi::{c_char, CStr, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use confscan_ffi::*;

fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures")
}

fn cstr(p: &Path) -> CString {
    CString::new(p.display().to_string()).unwrap()
}

fn last_error() -> Option<String> {
    let p = confscan_last_error();
    (!p.is_null()).then(|| unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned())
}

fn load() -> *mut ConfscanSnapshot {
    let mut snap = ptr::null_mut();
    let path = cstr(&fixtures().join("snapshot.json"));
    let status = unsafe { confscan_snapshot_load(path.as_ptr(), &mut snap) };
    assert_eq!(status, ConfscanStatus::Ok, "{:?}", last_error());
    snap
}

fn take_json(p: *mut c_char) -> serde_json::Value {
    assert!(!p.is_null());
    let text = unsafe { CStr::from_ptr(p) }.to_str().unwrap().to_owned();
    unsafe { confscan_string_free(p) };
    serde_json::from_str(&text).unwrap()
}

#[test]
fn check_project_through_handle() {
    let snap = load();
    assert!(unsafe { confscan_snapshot_package_count(snap) } > 10);

    for (dir, want) in [("pfrl-0.3.1", true), ("pfrl-0.3.0", false)] {
        let project = cstr(&fixtures().join("corpus").join(dir));
        let mut json = ptr::null_mut();
        let mut validated = !want;
        let status = unsafe { confscan_check_project(snap, project.as_ptr(), &mut json, &mut validated) };
        assert_eq!(status, ConfscanStatus::Ok);
        assert_eq!(validated, want, "{dir}");
        assert!(last_error().is_none());
        let doc = take_json(json);
        assert_eq!(doc["schema_version"], 1);
        assert_eq!(doc["reports"][0]["validated"], want);
    }
    unsafe { confscan_snapshot_free(snap) };
}

#[test]
fn check_corpus_through_handle() {
    let snap = load();
    let corpus = cstr(&fixtures().join("corpus"));
    let mut json = ptr::null_mut();
    let status = unsafe { confscan_check_corpus(snap, corpus.as_ptr(), 0, &mut json) };
    assert_eq!(status, ConfscanStatus::Ok);
    assert_eq!(take_json(json)["reports"].as_array().unwrap().len(), 17);
    unsafe { confscan_snapshot_free(snap) };
}

#[test]
fn error_codes_and_messages() {
    let mut snap = ptr::null_mut();
    assert_eq!(unsafe { confscan_snapshot_load(ptr::null(), &mut snap) }, ConfscanStatus::NullPointer);
    assert!(snap.is_null());

    let missing = CString::new("/nonexistent/snapshot.json").unwrap();
    assert_eq!(unsafe { confscan_snapshot_load(missing.as_ptr(), &mut snap) }, ConfscanStatus::Io);
    assert!(last_error().unwrap().contains("/nonexistent/snapshot.json"));

    let bad = [0xffu8, 0xfe, 0];
    let status = unsafe { confscan_snapshot_load(bad.as_ptr().cast(), &mut snap) };
    assert_eq!(status, ConfscanStatus::InvalidUtf8);

    let mut json = ptr::null_mut();
    let dir = CString::new(".").unwrap();
    let status = unsafe { confscan_check_project(ptr::null(), dir.as_ptr(), &mut json, ptr::null_mut()) };
    assert_eq!(status, ConfscanStatus::NullPointer);
    assert!(json.is_null());

    let snap = load();
    assert!(last_error().is_none(), "success clears the error");
    let status = unsafe { confscan_check_corpus(snap, missing.as_ptr(), 1, &mut json) };
    assert_eq!(status, ConfscanStatus::Io);
    unsafe {
        confscan_snapshot_free(snap);
        confscan_snapshot_free(ptr::null_mut());
        confscan_string_free(ptr::null_mut());
    }
}

#[test]
fn version_is_static() {
    let v = unsafe { CStr::from_ptr(confscan_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

const C_PROGRAM: &str = r#"
#include <stdio.h>
#include "confscan.h"

int main(int argc, char **argv) {
    ConfscanSnapshot *snap = NULL;
    if (confscan_snapshot_load(argv[1], &snap) != CONFSCAN_STATUS_OK) {
        fprintf(stderr, "%s\n", confscan_last_error());
        return 10;
    }
    char *json = NULL;
    bool validated = false;
    ConfscanStatus st = confscan_check_project(snap, argv[2], &json, &validated);
    if (st != CONFSCAN_STATUS_OK) {
        return 11;
    }
    printf("validated=%d bytes>0=%d\n", validated, json[0] == '{');
    confscan_string_free(json);
    confscan_snapshot_free(snap);
    return 0;
}
"#;

/// Compiles a C caller against the generated header and the static library.
#[test]
fn header_links_from_c() {
    let Ok(cc) = which_cc() else {
        eprintln!("no C compiler found; skipping");
        return;
    };
    let target_dir = std::env::current_exe().unwrap().parent().unwrap().parent().unwrap().to_path_buf();
    let lib = target_dir.join("libconfscan_ffi.a");
    if !lib.exists() {
        eprintln!("{} not built; skipping", lib.display());
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("main.c");
    let exe = dir.path().join("main");
    std::fs::write(&src, C_PROGRAM).unwrap();
    let include = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include");
    let out = Command::new(cc)
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(&include)
        .arg(&src)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let run = Command::new(&exe)
        .arg(fixtures().join("snapshot.json"))
        .arg(fixtures().join("corpus/pfrl-0.3.1"))
        .output()
        .unwrap();
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    assert_eq!(String::from_utf8_lossy(&run.stdout), "validated=1 bytes>0=1\n");
}

fn which_cc() -> Result<String, ()> {
    for cc in ["cc", "gcc", "clang"] {
        if Command::new(cc).arg("--version").output().is_ok_and(|o| o.status.success()) {
            return Ok(cc.to_string());
        }
    }
    Err(())
}
