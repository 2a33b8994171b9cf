//! C ABI over confscan: load a snapshot once, check projects or corpora
//! against it, and receive reports as JSON strings.
//!
//! Every call returns a [`ConfscanStatus`]. On failure the message is
//! available from [`confscan_last_error`] on the same thread. Strings
//! handed out by this library are freed with [`confscan_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use confscan::checker::{check_project, discover_corpus, project_label, run_corpus, CheckOptions, SiblingCache};
use confscan::project::scan_project;
use confscan::report::ReportDocument;
use confscan::snapshot::IndexSnapshot;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConfscanStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    /// A file or directory could not be read or is malformed.
    Io = 3,
    /// The input was read but could not be analyzed.
    InvalidInput = 4,
    Panic = 5,
}

/// Opaque handle to a loaded index snapshot.
pub struct ConfscanSnapshot {
    inner: IndexSnapshot,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

struct Failure(ConfscanStatus, String);

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> ConfscanStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => ConfscanStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            ConfscanStatus::Panic
        }
    }
}

unsafe fn path_arg(p: *const c_char, what: &str) -> Result<PathBuf, Failure> {
    if p.is_null() {
        return Err(Failure(ConfscanStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map(PathBuf::from)
        .map_err(|_| Failure(ConfscanStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

unsafe fn snapshot_arg<'a>(s: *const ConfscanSnapshot) -> Result<&'a IndexSnapshot, Failure> {
    s.as_ref()
        .map(|s| &s.inner)
        .ok_or_else(|| Failure(ConfscanStatus::NullPointer, "snapshot is null".into()))
}

fn emit_json(doc: &ReportDocument, out: *mut *mut c_char) -> Result<(), Failure> {
    let text = CString::new(doc.to_json())
        .map_err(|_| Failure(ConfscanStatus::InvalidInput, "report contains a NUL byte".into()))?;
    // SAFETY: checked non-null by the caller of this helper.
    unsafe { *out = text.into_raw() };
    Ok(())
}

/// Loads a snapshot JSON file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn confscan_snapshot_load(path: *const c_char, out: *mut *mut ConfscanSnapshot) -> ConfscanStatus {
    guard(|| {
        if out.is_null() {
            return Err(Failure(ConfscanStatus::NullPointer, "out is null".into()));
        }
        *out = ptr::null_mut();
        let path = path_arg(path, "path")?;
        let inner = IndexSnapshot::load(&path).map_err(|e| Failure(ConfscanStatus::Io, e.to_string()))?;
        *out = Box::into_raw(Box::new(ConfscanSnapshot { inner }));
        Ok(())
    })
}

/// Number of packages in the snapshot, 0 for a null handle.
///
/// # Safety
/// `snapshot` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn confscan_snapshot_package_count(snapshot: *const ConfscanSnapshot) -> usize {
    snapshot.as_ref().map_or(0, |s| s.inner.len())
}

/// # Safety
/// `snapshot` must be null or a handle from [`confscan_snapshot_load`]
/// not yet freed.
#[no_mangle]
pub unsafe extern "C" fn confscan_snapshot_free(snapshot: *mut ConfscanSnapshot) {
    if !snapshot.is_null() {
        drop(Box::from_raw(snapshot));
    }
}

/// Checks the project in `project_dir` in static mode. On success `*out_json`
/// holds a report document with one report and `*out_validated` (when
/// non-null) whether the release passed all checks.
///
/// # Safety
/// Pointers must be valid; strings NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn confscan_check_project(
    snapshot: *const ConfscanSnapshot,
    project_dir: *const c_char,
    out_json: *mut *mut c_char,
    out_validated: *mut bool,
) -> ConfscanStatus {
    guard(|| {
        if out_json.is_null() {
            return Err(Failure(ConfscanStatus::NullPointer, "out_json is null".into()));
        }
        *out_json = ptr::null_mut();
        let snap = snapshot_arg(snapshot)?;
        let dir = path_arg(project_dir, "project_dir")?;
        let p = scan_project(&dir).map_err(|e| Failure(ConfscanStatus::Io, e.to_string()))?;
        let label = project_label(&p);
        let report = check_project(p, &label, snap, &CheckOptions::default(), &SiblingCache::new());
        if !out_validated.is_null() {
            *out_validated = report.validated;
        }
        emit_json(&ReportDocument::new(vec![report]), out_json)
    })
}

/// Checks every `<name>-<version>/` release under `corpus_dir` with up to
/// `jobs` threads (0 means one).
///
/// # Safety
/// Pointers must be valid; strings NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn confscan_check_corpus(
    snapshot: *const ConfscanSnapshot,
    corpus_dir: *const c_char,
    jobs: u32,
    out_json: *mut *mut c_char,
) -> ConfscanStatus {
    guard(|| {
        if out_json.is_null() {
            return Err(Failure(ConfscanStatus::NullPointer, "out_json is null".into()));
        }
        *out_json = ptr::null_mut();
        let snap = snapshot_arg(snapshot)?;
        let dir = path_arg(corpus_dir, "corpus_dir")?;
        let entries = discover_corpus(&dir).map_err(|e| Failure(ConfscanStatus::Io, e.to_string()))?;
        let reports = run_corpus(&entries, snap, &CheckOptions::default(), jobs.max(1) as usize);
        emit_json(&ReportDocument::new(reports), out_json)
    })
}

/// Message of the last failed call on this thread, or null. Valid until
/// the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn confscan_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// # Safety
/// `s` must be null or a string returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn confscan_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Library version, static storage.
#[no_mangle]
pub extern "C" fn confscan_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
