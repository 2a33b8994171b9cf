//! Client for the import probe: a helper script run under the target
//! interpreter that attempts import statements one at a time and answers
//! with JSON on stdout.

use std::io::{Read, Write};
use std::path::PathBuf;
use std::process::{Command, Stdio};
use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_IMPORT_TIMEOUT: Duration = Duration::from_secs(30);

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProbeImport {
    pub id: u64,
    #[serde(rename = "statement-text")]
    pub statement_text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProbeRequest {
    pub imports: Vec<ProbeImport>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProbeResult {
    pub id: u64,
    pub ok: bool,
    pub error_type: Option<String>,
    pub error_message: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProbeResponse {
    pub results: Vec<ProbeResult>,
    pub interpreter: String,
}

#[derive(Debug, Error)]
pub enum ProbeError {
    #[error("cannot start probe: {0}")]
    Spawn(#[source] std::io::Error),
    #[error("probe exited with {status}: {stderr}")]
    Exit { status: String, stderr: String },
    #[error("malformed probe output: {0}")]
    Protocol(String),
}

/// How to launch the probe: `program args...`, typically
/// `python3 probe.py`.
#[derive(Debug, Clone)]
pub struct ProbeClient {
    pub program: PathBuf,
    pub args: Vec<String>,
    /// Per-import budget. The whole run is allowed one budget per import
    /// plus one.
    pub timeout: Duration,
}

impl ProbeClient {
    pub fn new(program: impl Into<PathBuf>, args: Vec<String>) -> Self {
        ProbeClient {
            program: program.into(),
            args,
            timeout: DEFAULT_IMPORT_TIMEOUT,
        }
    }

    pub fn with_timeout(mut self, timeout: Duration) -> Self {
        self.timeout = timeout;
        self
    }

    /// Runs the statements through the probe. Ids are 1-based positions.
    /// When the probe overruns the overall budget it is killed and every
    /// statement gets a `Timeout` result.
    pub fn run(&self, statements: &[String]) -> Result<ProbeResponse, ProbeError> {
        let request = ProbeRequest {
            imports: statements
                .iter()
                .enumerate()
                .map(|(i, s)| ProbeImport {
                    id: i as u64 + 1,
                    statement_text: s.clone(),
                })
                .collect(),
        };
        let body = serde_json::to_vec(&request).expect("request serializes");

        let mut child = Command::new(&self.program)
            .args(&self.args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped())
            .spawn()
            .map_err(ProbeError::Spawn)?;

        let mut stdin = child.stdin.take().expect("piped stdin");
        let writer = thread::spawn(move || {
            let _ = stdin.write_all(&body);
        });
        let mut stdout = child.stdout.take().expect("piped stdout");
        let reader = thread::spawn(move || {
            let mut buf = Vec::new();
            let _ = stdout.read_to_end(&mut buf);
            buf
        });
        let mut stderr = child.stderr.take().expect("piped stderr");
        let err_reader = thread::spawn(move || {
            let mut buf = Vec::new();
            let _ = stderr.read_to_end(&mut buf);
            buf
        });

        let budget = self.timeout * (statements.len() as u32 + 1);
        let start = Instant::now();
        let status = loop {
            match child.try_wait().map_err(ProbeError::Spawn)? {
                Some(status) => break Some(status),
                None if start.elapsed() >= budget => {
                    let _ = child.kill();
                    let _ = child.wait();
                    break None;
                }
                None => thread::sleep(Duration::from_millis(10)),
            }
        };
        // A killed probe's own children may still hold the pipes open, so
        // the reader threads are left behind rather than joined.
        let Some(status) = status else {
            return Ok(timed_out(&request, budget));
        };
        let _ = writer.join();
        let out = reader.join().unwrap_or_default();
        let err = err_reader.join().unwrap_or_default();
        if !status.success() {
            return Err(ProbeError::Exit {
                status: status.to_string(),
                stderr: String::from_utf8_lossy(&err).trim().to_string(),
            });
        }
        let response: ProbeResponse =
            serde_json::from_slice(&out).map_err(|e| ProbeError::Protocol(e.to_string()))?;
        validate(&request, &response)?;
        Ok(response)
    }
}

fn timed_out(request: &ProbeRequest, budget: Duration) -> ProbeResponse {
    ProbeResponse {
        results: request
            .imports
            .iter()
            .map(|i| ProbeResult {
                id: i.id,
                ok: false,
                error_type: Some("Timeout".into()),
                error_message: Some(format!("probe did not finish within {}s", budget.as_secs())),
            })
            .collect(),
        interpreter: String::new(),
    }
}

/// One result per request id, in request order; successes carry no error.
pub fn validate(request: &ProbeRequest, response: &ProbeResponse) -> Result<(), ProbeError> {
    if request.imports.len() != response.results.len() {
        return Err(ProbeError::Protocol(format!(
            "{} imports but {} results",
            request.imports.len(),
            response.results.len()
        )));
    }
    for (want, got) in request.imports.iter().zip(&response.results) {
        if want.id != got.id {
            return Err(ProbeError::Protocol(format!("expected id {}, got {}", want.id, got.id)));
        }
        if got.ok && (got.error_type.is_some() || got.error_message.is_some()) {
            return Err(ProbeError::Protocol(format!("id {} is ok but carries an error", got.id)));
        }
    }
    Ok(())
}

/// The module named by a `No module named 'x'` message.
pub fn missing_module_name(message: &str) -> Option<&str> {
    let rest = message.split("No module named ").nth(1)?;
    let rest = rest.trim_start_matches(['\'', '"']);
    let end = rest.find(['\'', '"']).unwrap_or(rest.len());
    Some(rest[..end].trim()).filter(|m| !m.is_empty())
}
