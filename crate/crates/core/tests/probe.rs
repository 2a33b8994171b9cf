use std::fs;
use std::path::Path;
use std::time::{Duration, Instant};

use confscan::probe::{ProbeClient, ProbeError, ProbeRequest};

fn script(dir: &Path, name: &str, body: &str) -> ProbeClient {
    let path = dir.join(name);
    fs::write(&path, format!("#!/bin/sh\n{body}\n")).unwrap();
    ProbeClient::new("sh", vec![path.display().to_string()])
}

const TWO_RESULTS: &str = r#"{"results": [{"id": 1, "ok": true, "error_type": null, "error_message": null}, {"id": 2, "ok": false, "error_type": "ModuleNotFoundError", "error_message": "No module named 'celery'"}], "interpreter": "3.10.12"}"#;

fn statements() -> Vec<String> {
    vec!["import six".into(), "from celery import Celery".into()]
}

#[test]
fn sends_request_and_reads_results() {
    let dir = tempfile::tempdir().unwrap();
    let captured = dir.path().join("request.json");
    let probe = script(
        dir.path(),
        "ok.sh",
        &format!("cat > '{}'\nprintf '%s\\n' '{TWO_RESULTS}'", captured.display()),
    );
    let resp = probe.run(&statements()).unwrap();
    assert_eq!(resp.interpreter, "3.10.12");
    assert!(resp.results[0].ok);
    assert_eq!(resp.results[1].error_type.as_deref(), Some("ModuleNotFoundError"));

    let request: ProbeRequest = serde_json::from_str(&fs::read_to_string(&captured).unwrap()).unwrap();
    assert_eq!(request.imports.len(), 2);
    assert_eq!(request.imports[0].id, 1);
    assert_eq!(request.imports[1].statement_text, "from celery import Celery");
    let raw: serde_json::Value = serde_json::from_str(&fs::read_to_string(&captured).unwrap()).unwrap();
    assert!(raw["imports"][0].get("statement-text").is_some());
}

#[test]
fn wrong_cardinality_is_a_protocol_error() {
    let dir = tempfile::tempdir().unwrap();
    let probe = script(dir.path(), "short.sh", &format!("cat >/dev/null\nprintf '%s\\n' '{TWO_RESULTS}'"));
    let err = probe.run(&["import six".to_string()]).unwrap_err();
    assert!(matches!(err, ProbeError::Protocol(_)), "{err}");
}

#[test]
fn garbage_is_a_protocol_error() {
    let dir = tempfile::tempdir().unwrap();
    let probe = script(dir.path(), "garbage.sh", "cat >/dev/null\necho 'Traceback (most recent call last):'");
    assert!(matches!(probe.run(&statements()), Err(ProbeError::Protocol(_))));
}

#[test]
fn ok_with_error_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let body = r#"{"results": [{"id": 1, "ok": true, "error_type": "ImportError", "error_message": "x"}], "interpreter": "3.8.0"}"#;
    let probe = script(dir.path(), "contradict.sh", &format!("cat >/dev/null\nprintf '%s\\n' '{body}'"));
    assert!(matches!(probe.run(&["import a".to_string()]), Err(ProbeError::Protocol(_))));
}

#[test]
fn nonzero_exit_reports_stderr() {
    let dir = tempfile::tempdir().unwrap();
    let probe = script(dir.path(), "fail.sh", "cat >/dev/null\necho 'probe broke' >&2\nexit 3");
    match probe.run(&statements()) {
        Err(ProbeError::Exit { stderr, .. }) => assert_eq!(stderr, "probe broke"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn missing_program_fails_to_spawn() {
    let probe = ProbeClient::new("/nonexistent/interpreter", Vec::new());
    assert!(matches!(probe.run(&statements()), Err(ProbeError::Spawn(_))));
}

#[test]
fn overrun_times_out_every_statement() {
    let dir = tempfile::tempdir().unwrap();
    let probe = script(dir.path(), "hang.sh", "sleep 20").with_timeout(Duration::from_millis(100));
    let start = Instant::now();
    let resp = probe.run(&statements()).unwrap();
    assert!(start.elapsed() < Duration::from_secs(5));
    assert_eq!(resp.results.len(), 2);
    assert!(resp.results.iter().all(|r| !r.ok && r.error_type.as_deref() == Some("Timeout")));
}
