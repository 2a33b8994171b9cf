//! The three-check pipeline over one release, driven as a status machine,
//! and the corpus runner on top of it.

mod deps;
mod install;
mod validate;

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::env::{scan_environment, EnvironmentModel, ScanOptions};
use crate::issue::{CheckKind, IssueRecord};
use crate::pep::{parse_version, DependencyDecl, NormalizedName, Version};
use crate::probe::ProbeClient;
use crate::project::{scan_project, DeclSource, ParseOutcome, ProjectError, ProjectModel};
use crate::snapshot::{IndexSnapshot, InterpreterTable, PyVersion};

pub use deps::run_dependency_check;
pub use install::{exact_python, run_installation_check, search_order, InstallOutcome, SiblingCache, COMMON_VERSIONS};
pub use validate::{package_for_module, run_import_validation, Mode, ValidationInput, ValidationOutcome};

/// Progress of one release through the pipeline. Statuses only advance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum CheckStatus {
    #[serde(rename = "S0-loaded")]
    Loaded,
    #[serde(rename = "S1-analyzed-py3")]
    AnalyzedPy3,
    #[serde(rename = "S2-analyzed-py2")]
    AnalyzedPy2,
    #[serde(rename = "S3-blocks-built")]
    BlocksBuilt,
    #[serde(rename = "S4-validated")]
    Validated,
}

impl CheckStatus {
    pub fn code(self) -> &'static str {
        match self {
            CheckStatus::Loaded => "S0",
            CheckStatus::AnalyzedPy3 => "S1",
            CheckStatus::AnalyzedPy2 => "S2",
            CheckStatus::BlocksBuilt => "S3",
            CheckStatus::Validated => "S4",
        }
    }

    fn can_advance_to(self, next: CheckStatus) -> bool {
        use CheckStatus::*;
        matches!(
            (self, next),
            (Loaded, AnalyzedPy3) | (Loaded, AnalyzedPy2) | (AnalyzedPy3, BlocksBuilt) | (AnalyzedPy2, BlocksBuilt) | (BlocksBuilt, Validated)
        )
    }
}

impl fmt::Display for CheckStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = serde_json::to_value(self).expect("status serializes");
        f.write_str(s.as_str().unwrap_or_default())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckResults {
    pub installation: bool,
    pub dependency: bool,
    pub import_validation: bool,
}

impl CheckResults {
    fn from_issues(issues: &[IssueRecord]) -> Self {
        let passes = |k: CheckKind| !issues.iter().any(|i| i.check == k);
        CheckResults {
            installation: passes(CheckKind::Installation),
            dependency: passes(CheckKind::Dependency),
            import_validation: passes(CheckKind::ImportValidation),
        }
    }

    pub fn all(&self) -> bool {
        self.installation && self.dependency && self.import_validation
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EnvSource {
    Simulated,
    Scanned,
    /// Installation failed; only the interpreter is modeled.
    Interpreter,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvSummary {
    pub source: EnvSource,
    pub python: PyVersion,
    pub installed: BTreeMap<String, String>,
}

impl EnvSummary {
    fn of(env: &EnvironmentModel, source: EnvSource) -> Self {
        EnvSummary {
            source,
            python: env.python_version,
            installed: env
                .installed
                .values()
                .map(|d| (d.name.to_string(), d.version.to_string()))
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckReport {
    pub release: String,
    pub mode: Mode,
    pub final_status: CheckStatus,
    pub validated: bool,
    pub checks: CheckResults,
    /// Dependency and import checks ran without an installed environment.
    pub degraded: bool,
    pub chosen_python: Option<PyVersion>,
    pub pythons_tried: Vec<PyVersion>,
    pub environment: EnvSummary,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub interpreter: Option<String>,
    pub issues: Vec<IssueRecord>,
    pub warnings: Vec<String>,
}

impl CheckReport {
    pub fn has_kind(&self, kind: crate::issue::IssueKind) -> bool {
        self.issues.iter().any(|i| i.kind == kind)
    }
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("release directory for {0} not found in corpus")]
    MissingRelease(String),
    #[error("corpus directory {0} does not exist")]
    NotFound(String),
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Project(#[from] ProjectError),
}

#[derive(Debug, Clone, Default)]
pub struct CheckOptions {
    pub table: InterpreterTable,
    /// Live mode when set: leaf results come from the probe.
    pub probe: Option<ProbeClient>,
    /// Validate against an installed site directory instead of the
    /// simulated environment.
    pub site_dir: Option<PathBuf>,
}

/// Configuration supplied from outside the release, replacing what it
/// declares.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfigOverride {
    pub deps: Option<Vec<DependencyDecl>>,
    pub python: Option<PyVersion>,
}

impl ConfigOverride {
    pub fn apply(&self, p: &mut ProjectModel) {
        if let Some(deps) = &self.deps {
            p.declared_deps = deps.clone();
            p.decl_source = Some(DeclSource::Inferred);
        }
        if let Some(py) = self.python {
            p.declared_python = Some(exact_python(py));
        }
    }
}

struct Machine {
    status: CheckStatus,
}

impl Machine {
    fn advance(&mut self, next: CheckStatus) {
        assert!(self.status.can_advance_to(next), "{} -> {}", self.status, next);
        self.status = next;
    }
}

/// A project's display identity: `name==version` from its declarations,
/// else the directory name.
pub fn project_label(p: &ProjectModel) -> String {
    match (&p.declared_name, &p.declared_version) {
        (Some(n), Some(v)) => format!("{n}=={v}"),
        _ => p
            .root
            .file_name()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| p.root.display().to_string()),
    }
}

/// Runs the three checks over a loaded project.
pub fn check_project(
    p: ProjectModel,
    label: &str,
    snapshot: &IndexSnapshot,
    opts: &CheckOptions,
    siblings: &SiblingCache,
) -> CheckReport {
    let p = p.parse_sources();
    let mut machine = Machine {
        status: CheckStatus::Loaded,
    };
    let mut warnings = p.warnings.clone();

    let install = run_installation_check(&p, label, snapshot, &opts.table, siblings);
    warnings.extend(install.warnings.iter().cloned());
    let mut issues = install.issues.clone();

    let (env, source) = match &opts.site_dir {
        Some(dir) => {
            let scan = ScanOptions {
                python: install.chosen_python,
                submodules: true,
            };
            match scan_environment(dir, &scan) {
                Ok(env) => {
                    warnings.extend(env.warnings.iter().cloned());
                    (Some(env.with_own_modules(p.own_modules())), EnvSource::Scanned)
                }
                Err(e) => {
                    warnings.push(format!("site directory not usable: {e}"));
                    (install.env.clone(), EnvSource::Simulated)
                }
            }
        }
        None => (install.env.clone(), EnvSource::Simulated),
    };
    let degraded = env.is_none();
    let (env, source) = match env {
        Some(env) => (env, source),
        None => (
            EnvironmentModel::new(install.initial_python).with_own_modules(p.own_modules()),
            EnvSource::Interpreter,
        ),
    };

    issues.extend(run_dependency_check(&p, (!degraded).then_some(&env), snapshot, label));

    let all_parsed = p.has_source()
        && p.source_files.iter().all(|f| matches!(f.parse, ParseOutcome::Parsed(_)));
    if all_parsed {
        let legacy = p.source_files.iter().any(|f| f.module().is_some_and(|m| m.legacy));
        machine.advance(if legacy { CheckStatus::AnalyzedPy2 } else { CheckStatus::AnalyzedPy3 });
    }

    let validation = run_import_validation(
        &p,
        &ValidationInput {
            env: &env,
            snapshot,
            degraded,
            probe: opts.probe.as_ref(),
        },
    );
    if all_parsed {
        machine.advance(CheckStatus::BlocksBuilt);
    }
    warnings.extend(validation.warnings.iter().cloned());
    issues.extend(validation.issues.iter().cloned());

    issues.sort();
    issues.dedup();
    if issues.is_empty() {
        machine.advance(CheckStatus::Validated);
    }
    let checks = CheckResults::from_issues(&issues);
    CheckReport {
        release: label.to_string(),
        mode: validation.mode,
        final_status: machine.status,
        validated: issues.is_empty(),
        checks,
        degraded,
        chosen_python: install.chosen_python,
        pythons_tried: install.tried.clone(),
        environment: EnvSummary::of(&env, source),
        interpreter: validation.interpreter.clone(),
        issues,
        warnings,
    }
}

/// One release directory of a corpus laid out as `<name>-<version>/`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusEntry {
    pub release: String,
    pub name: NormalizedName,
    pub version: Version,
    pub dir: PathBuf,
    pub config: ConfigOverride,
}

impl CorpusEntry {
    pub fn label(&self) -> String {
        format!("{}=={}", self.name, self.version)
    }
}

/// Splits `name-version` at the last dash followed by a parseable version.
pub fn split_release_dir(dir_name: &str) -> Option<(NormalizedName, Version)> {
    let (name, version) = dir_name.rsplit_once('-')?;
    Some((NormalizedName::new(name).ok()?, parse_version(version).ok()?))
}

/// Release directories of a corpus, sorted by (name, version).
pub fn discover_corpus(corpus: &Path) -> Result<Vec<CorpusEntry>, CorpusError> {
    if !corpus.is_dir() {
        return Err(CorpusError::NotFound(corpus.display().to_string()));
    }
    let io = |source| CorpusError::Io {
        path: corpus.display().to_string(),
        source,
    };
    let mut out = Vec::new();
    for entry in std::fs::read_dir(corpus).map_err(io)?.flatten() {
        if !entry.path().is_dir() {
            continue;
        }
        let dir_name = entry.file_name().to_string_lossy().into_owned();
        if let Some((name, version)) = split_release_dir(&dir_name) {
            out.push(CorpusEntry {
                release: dir_name,
                name,
                version,
                dir: entry.path(),
                config: ConfigOverride::default(),
            });
        }
    }
    out.sort_by(|a, b| (&a.name, &a.version, &a.release).cmp(&(&b.name, &b.version, &b.release)));
    Ok(out)
}

/// Finds the directory of `name==version` in a corpus.
pub fn locate_release(corpus: &Path, name: &NormalizedName, version: &Version) -> Result<CorpusEntry, CorpusError> {
    discover_corpus(corpus)?
        .into_iter()
        .find(|e| &e.name == name && &e.version == version)
        .ok_or_else(|| CorpusError::MissingRelease(format!("{name}=={version}")))
}

fn check_entry(entry: &CorpusEntry, snapshot: &IndexSnapshot, opts: &CheckOptions, siblings: &SiblingCache) -> CheckReport {
    let label = entry.label();
    match scan_project(&entry.dir) {
        Ok(mut p) => {
            entry.config.apply(&mut p);
            check_project(p, &label, snapshot, opts, siblings)
        }
        Err(e) => {
            // The directory vanished between discovery and checking.
            let mut p = ProjectModel::empty(&entry.dir);
            p.warnings.push(e.to_string());
            check_project(p, &label, snapshot, opts, siblings)
        }
    }
}

/// Checks one release of a corpus.
pub fn check_release(
    name: &NormalizedName,
    version: &Version,
    corpus: &Path,
    snapshot: &IndexSnapshot,
    opts: &CheckOptions,
    siblings: &SiblingCache,
) -> Result<CheckReport, CorpusError> {
    let entry = locate_release(corpus, name, version)?;
    Ok(check_entry(&entry, snapshot, opts, siblings))
}

/// Checks entries with up to `jobs` threads. Releases of one package run
/// in version order on one thread so interpreter choices carry over
/// deterministically; reports come back in entry order.
pub fn run_corpus(entries: &[CorpusEntry], snapshot: &IndexSnapshot, opts: &CheckOptions, jobs: usize) -> Vec<CheckReport> {
    use rayon::prelude::*;

    let mut groups: BTreeMap<&NormalizedName, Vec<usize>> = BTreeMap::new();
    for (i, e) in entries.iter().enumerate() {
        groups.entry(&e.name).or_default().push(i);
    }
    let mut groups: Vec<Vec<usize>> = groups.into_values().collect();
    for g in &mut groups {
        g.sort_by(|&a, &b| entries[a].version.cmp(&entries[b].version).then(a.cmp(&b)));
    }

    let siblings = SiblingCache::new();
    let run = || {
        groups
            .par_iter()
            .flat_map_iter(|g| {
                g.iter()
                    .map(|&i| (i, check_entry(&entries[i], snapshot, opts, &siblings)))
                    .collect::<Vec<_>>()
            })
            .collect::<Vec<_>>()
    };
    let mut results = match rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build() {
        Ok(pool) => pool.install(run),
        Err(_) => run(),
    };
    results.sort_by_key(|(i, _)| *i);
    results.into_iter().map(|(_, r)| r).collect()
}
