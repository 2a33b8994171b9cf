//! Dependency check: declarations against metadata, the environment, the
//! index's release history, and the syntax of the sources.

use crate::env::{check_env_consistency, EnvironmentModel};
use crate::issue::{IssueKind, IssueRecord};
use crate::project::{check_metadata_consistency, DeclSource, FailureReason, ParseOutcome, ProjectModel};
use crate::snapshot::IndexSnapshot;

pub fn run_dependency_check(
    p: &ProjectModel,
    env: Option<&EnvironmentModel>,
    snapshot: &IndexSnapshot,
    label: &str,
) -> Vec<IssueRecord> {
    let mut issues = check_metadata_consistency(p);
    if let Some(env) = env {
        issues.extend(check_env_consistency(env));
    }

    if !p.has_source() {
        let evidence = match &p.top_level_declared {
            Some(tops) if !tops.is_empty() => {
                format!("declared top-level modules [{}] have no source in the release", tops.join(", "))
            }
            _ => "the release contains no importable modules".to_string(),
        };
        issues.push(IssueRecord::at_package(IssueKind::MissingSourceCode, label, evidence));
    }

    for f in &p.source_files {
        if let ParseOutcome::Failed(fail) = &f.parse {
            let what = match fail.reason {
                FailureReason::Syntax => "syntax error",
                FailureReason::Encoding => "encoding error",
            };
            issues.push(IssueRecord::at_file(
                IssueKind::ParsingError,
                f.display_path(),
                fail.line,
                format!("{what}: {}", fail.message),
            ));
        }
    }

    // With nothing declared at all the missing configuration is the issue.
    // Inferred dependencies without a Python leave the choice to the search.
    if p.declared_python.is_none() && p.has_declarations() && p.decl_source != Some(DeclSource::Inferred) {
        issues.push(IssueRecord::at_package(
            IssueKind::MissingPythonVersion,
            label,
            "no Requires-Python constraint is declared",
        ));
    }

    for dep in &p.declared_deps {
        let Ok(releases) = snapshot.releases(&dep.name) else { continue };
        let Ok(pairs) = snapshot.detect_version_date_inversions(&dep.name) else { continue };
        if let Some((older, newer)) = pairs.first() {
            let date = |v| {
                releases
                    .iter()
                    .find(|r| &r.version == v)
                    .map(|r| r.release_date.to_string())
                    .unwrap_or_default()
            };
            let more = match pairs.len() {
                1 => String::new(),
                n => format!(" ({} more pairs)", n - 1),
            };
            issues.push(IssueRecord::at_package(
                IssueKind::VersionDateInconsistency,
                dep.name.to_string(),
                format!(
                    "{} {older} was released {} after {newer} ({}){more}; declared as {dep}",
                    dep.name,
                    date(older),
                    date(newer)
                ),
            ));
        }
    }
    issues
}
