//! Pass-rate benchmark over a corpus, optionally with dependency
//! configurations inferred by an external tool.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::checker::{discover_corpus, run_corpus, CheckOptions, ConfigOverride, CorpusError};
use crate::pep::{parse_requirement, parse_specifier_set, parse_version, DependencyDecl, NormalizedName, Version};
use crate::report::{BenchSummary, ReportDocument, ReportError};
use crate::snapshot::{IndexSnapshot, PyVersion};

#[derive(Debug, Error)]
pub enum BenchError {
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Report(#[from] ReportError),
    #[error("malformed bench entries: {0}")]
    Entries(String),
}

/// A dependency in a bench file: a requirement line or an object.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DepSpec {
    Line(String),
    Decl {
        name: String,
        #[serde(default)]
        constraint: String,
        #[serde(default)]
        marker: Option<String>,
    },
}

impl DepSpec {
    pub fn to_decl(&self) -> Result<DependencyDecl, String> {
        match self {
            DepSpec::Line(line) => parse_requirement(line).map(|r| r.decl).map_err(|e| e.to_string()),
            DepSpec::Decl { name, constraint, marker } => {
                let name = NormalizedName::new(name).map_err(|e| e.to_string())?;
                let constraint = parse_specifier_set(constraint).map_err(|e| e.to_string())?;
                Ok(DependencyDecl {
                    name,
                    constraint,
                    marker: marker.clone().filter(|m| !m.trim().is_empty()),
                })
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchEntryFile {
    pub release: String,
    pub inferred_deps: Vec<DepSpec>,
    #[serde(default)]
    pub inferred_python: Option<PyVersion>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BenchEntry {
    pub name: NormalizedName,
    pub version: Version,
    pub inferred_deps: Vec<DependencyDecl>,
    /// `None`: the checker searches for an interpreter itself.
    pub inferred_python: Option<PyVersion>,
}

/// Parses `name==version`.
pub fn parse_release_id(text: &str) -> Result<(NormalizedName, Version), String> {
    let (name, version) = text
        .split_once("==")
        .ok_or_else(|| format!("release `{text}` is not NAME==VERSION"))?;
    Ok((
        NormalizedName::new(name.trim()).map_err(|e| e.to_string())?,
        parse_version(version.trim()).map_err(|e| e.to_string())?,
    ))
}

pub fn parse_bench_entries(text: &str) -> Result<Vec<BenchEntry>, BenchError> {
    let files: Vec<BenchEntryFile> = serde_json::from_str(text).map_err(|e| BenchError::Entries(e.to_string()))?;
    files
        .into_iter()
        .map(|f| {
            let (name, version) = parse_release_id(&f.release).map_err(BenchError::Entries)?;
            let inferred_deps = f
                .inferred_deps
                .iter()
                .map(DepSpec::to_decl)
                .collect::<Result<_, _>>()
                .map_err(|e| BenchError::Entries(format!("{}: {e}", f.release)))?;
            Ok(BenchEntry {
                name,
                version,
                inferred_deps,
                inferred_python: f.inferred_python,
            })
        })
        .collect()
}

/// Checks every release of the corpus, or only the entries given, with
/// their inferred configuration substituted for the declared one.
pub fn run_bench(
    corpus: &Path,
    inferred: Option<&[BenchEntry]>,
    snapshot: &IndexSnapshot,
    opts: &CheckOptions,
    jobs: usize,
) -> Result<ReportDocument, BenchError> {
    let available = discover_corpus(corpus)?;
    let entries = match inferred {
        None => available,
        Some(list) => {
            let mut out = Vec::with_capacity(list.len());
            for b in list {
                let mut entry = available
                    .iter()
                    .find(|e| e.name == b.name && e.version == b.version)
                    .cloned()
                    .ok_or_else(|| CorpusError::MissingRelease(format!("{}=={}", b.name, b.version)))?;
                entry.config = ConfigOverride {
                    deps: Some(b.inferred_deps.clone()),
                    python: b.inferred_python,
                };
                out.push(entry);
            }
            out.sort_by(|a, b| (&a.name, &a.version).cmp(&(&b.name, &b.version)));
            out
        }
    };
    let reports = run_corpus(&entries, snapshot, opts, jobs);
    let bench = BenchSummary::of(&reports)?;
    let mut doc = ReportDocument::new(reports);
    doc.bench = Some(bench);
    Ok(doc)
}
