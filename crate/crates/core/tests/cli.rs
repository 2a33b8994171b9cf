mod common;

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use confscan::report::ReportDocument;
use serde_json::Value;

fn confscan(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_confscan")).args(args).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn p(path: &Path) -> String {
    path.display().to_string()
}

fn snapshot_arg() -> String {
    p(&common::fixtures().join("snapshot.json"))
}

fn check_corpus(out: &Path, jobs: &str) -> Output {
    confscan(&[
        "check", "--corpus", &p(&common::corpus()), "--snapshot", &snapshot_arg(), "--jobs", jobs, "--json", &p(out),
    ])
}

#[test]
fn exit_codes() {
    let corpus = p(&common::corpus());
    let snap = snapshot_arg();
    let clean = confscan(&["check", "--release", "clean==1.0", "--corpus", &corpus, "--snapshot", &snap]);
    assert_eq!(code(&clean), 0, "{}", String::from_utf8_lossy(&clean.stderr));

    let issues = confscan(&["check", "--release", "claripy==9.0", "--corpus", &corpus, "--snapshot", &snap]);
    assert_eq!(code(&issues), 1);
    assert!(String::from_utf8_lossy(&issues.stdout).contains("MissingDirectImportDeps"));

    let project = confscan(&["check", "--project", &p(&common::corpus().join("pfrl-0.3.1")), "--snapshot", &snap]);
    assert_eq!(code(&project), 0, "{}", String::from_utf8_lossy(&project.stdout));

    let missing = confscan(&["check", "--release", "clean==1.0", "--corpus", &corpus, "--snapshot", "/nonexistent.json"]);
    assert_eq!(code(&missing), 2);
    let unknown = confscan(&["check", "--release", "nothere==1.0", "--corpus", &corpus, "--snapshot", &snap]);
    assert_eq!(code(&unknown), 2);
    assert_eq!(code(&confscan(&["check", "--snapshot", &snap, "--bogus"])), 2);
}

#[test]
fn corpus_json_is_identical_across_job_counts() {
    let dir = tempfile::tempdir().unwrap();
    let one = dir.path().join("one.json");
    let eight = dir.path().join("eight.json");
    assert_eq!(code(&check_corpus(&one, "1")), 1);
    assert_eq!(code(&check_corpus(&eight, "8")), 1);
    let (a, b) = (fs::read(&one).unwrap(), fs::read(&eight).unwrap());
    assert!(!a.is_empty());
    assert_eq!(a, b);
}

#[test]
fn report_round_trips_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report.json");
    check_corpus(&out, "4");
    let text = fs::read_to_string(&out).unwrap();
    let doc = ReportDocument::from_json(&text).unwrap();
    assert_eq!(doc.reports.len(), 17);
    assert_eq!(doc.to_json(), text);

    let rendered = confscan(&["report", "--json", &p(&out), "--format", "markdown"]);
    assert_eq!(code(&rendered), 1);
    let md = String::from_utf8(rendered.stdout).unwrap();
    assert!(md.contains("| Category | Issue | Kind | Check | Fatal | Releases |"));
    assert!(md.contains("| Incorrect Code | Parsing error | ParsingError | Dependency Check | yes | 1 |"));

    let newer = dir.path().join("newer.json");
    fs::write(&newer, text.replacen("\"schema_version\": 1", "\"schema_version\": 2", 1)).unwrap();
    assert_eq!(code(&confscan(&["report", "--json", &p(&newer)])), 2);
}

#[test]
fn bench_reports_pass_rate() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("bench.json");
    let bench = common::bench_corpus();
    let run = confscan(&[
        "bench", "--corpus", &p(&bench), "--inferred", &p(&bench.join("inferred.json")), "--snapshot", &snapshot_arg(),
        "--json", &p(&out),
    ]);
    assert_eq!(code(&run), 1);
    let text = fs::read_to_string(&out).unwrap();
    assert!(text.contains("\"pass_rate\": 0.650"), "{text}");
    let v: Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["bench"]["entries"], 20);
    assert_eq!(v["bench"]["validated"], 13);

    // Without inferred configurations nothing is declared.
    let bare = confscan(&["bench", "--corpus", &p(&bench), "--snapshot", &snapshot_arg(), "--json", &p(&out)]);
    assert_eq!(code(&bare), 1);
    let v: Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v["bench"]["histogram"]["MissingConfigFiles"], 20);
}

#[test]
fn live_mode_uses_the_probe() {
    let run = confscan(&[
        "check", "--release", "frames==1.0", "--corpus", &p(&common::corpus()), "--snapshot", &snapshot_arg(),
        "--mode", "live", "--interpreter", "sh", "--probe-script", &p(&common::fixtures().join("probes/typeerror.sh")),
    ]);
    assert_eq!(code(&run), 1);
    assert!(String::from_utf8_lossy(&run.stdout).contains("OtherImportRuntimeError"));
}

#[test]
fn ingest_from_recorded_payloads() {
    let dir = tempfile::tempdir().unwrap();
    let payloads = dir.path().join("payloads");
    fs::create_dir(&payloads).unwrap();
    let multipart = serde_json::json!({
        "info": {"version": "0.1.1", "requires_dist": null},
        "releases": {
            "2.0": [{"upload_time_iso_8601": "2019-02-01T00:00:00Z", "packagetype": "sdist"}],
            "0.1.1": [{"upload_time_iso_8601": "2020-03-10T00:00:00Z", "packagetype": "sdist"}],
            "0.2": [{"upload_time_iso_8601": "2022-01-01T00:00:00Z", "packagetype": "sdist"}]
        }
    });
    fs::write(payloads.join("multipart.json"), multipart.to_string()).unwrap();
    let out = dir.path().join("snap.json");
    let run = confscan(&["ingest", "--from-dir", &p(&payloads), "--out", &p(&out), "--as-of", "2021-01-01"]);
    assert_eq!(code(&run), 0, "{}", String::from_utf8_lossy(&run.stderr));

    let snap = confscan::snapshot::load_snapshot(&out).unwrap();
    let name = confscan::pep::NormalizedName::new("multipart").unwrap();
    let versions: Vec<String> = snap.releases(&name).unwrap().iter().map(|r| r.version.to_string()).collect();
    assert_eq!(versions, ["0.1.1", "2.0"]);
    assert_eq!(snap.detect_version_date_inversions(&name).unwrap().len(), 1);
}

#[test]
fn scan_env_reads_site_dir() {
    let dir = tempfile::tempdir().unwrap();
    let site = dir.path().join("lib/python3.9/site-packages/six-1.16.0.dist-info");
    fs::create_dir_all(&site).unwrap();
    fs::write(site.join("METADATA"), "Metadata-Version: 2.1\nName: six\nVersion: 1.16.0\nRequires-Dist: ghostdep\n").unwrap();
    let run = confscan(&["scan-env", "--site-dir", &p(&dir.path().join("lib/python3.9/site-packages"))]);
    assert_eq!(code(&run), 1);
    let v: Value = serde_json::from_slice(&run.stdout).unwrap();
    assert_eq!(v["issues"][0]["kind"], "MissingIndirectImportModules");
}
