//! Import validation: evaluate each file's import expression against the
//! environment and attribute the failures.

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::env::{indirect_failures, resolve_import, EnvironmentModel, Resolution};
use crate::imports::{
    build_import_expr, classify_import, collect_imports, dynamic_import_lines, evaluate_with, ImportClass,
    ImportExpr, ImportNode, Scope,
};
use crate::issue::{IssueKind, IssueRecord};
use crate::pep::{normalize_name, NormalizedName};
use crate::probe::{missing_module_name, ProbeClient, ProbeResult};
use crate::project::ProjectModel;
use crate::snapshot::IndexSnapshot;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    #[default]
    Static,
    Live,
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Mode::Static => "static",
            Mode::Live => "live",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum LeafFailure {
    Missing { module: String },
    MissingSubmodule { dist: NormalizedName, module: String },
    Indirect { dist: Option<NormalizedName>, module: String },
    ImportFailed { error_type: String, message: String },
    Runtime { error_type: String, message: String },
}

impl LeafFailure {
    fn describe(&self, env: &EnvironmentModel) -> String {
        match self {
            LeafFailure::Missing { module } => format!("no installed distribution provides {module}"),
            LeafFailure::MissingSubmodule { dist, module } => {
                let version = env.installed.get(dist).map(|d| d.version.to_string()).unwrap_or_default();
                format!("installed {dist} {version} has no module {module}")
            }
            LeafFailure::Indirect { dist: Some(d), module } => {
                format!("{d} imports {module}, which is not installed")
            }
            LeafFailure::Indirect { dist: None, module } => format!("an indirect import of {module} fails"),
            LeafFailure::ImportFailed { error_type, message } | LeafFailure::Runtime { error_type, message } => {
                format!("{error_type}: {message}")
            }
        }
    }
}

type Verdict = Result<(), LeafFailure>;

pub struct ValidationInput<'a> {
    pub env: &'a EnvironmentModel,
    pub snapshot: &'a IndexSnapshot,
    /// Installation failed; the environment holds only the interpreter.
    /// Declared but uninstalled packages are then given the benefit of
    /// the doubt.
    pub degraded: bool,
    pub probe: Option<&'a ProbeClient>,
}

#[derive(Debug, Clone, Default)]
pub struct ValidationOutcome {
    pub issues: Vec<IssueRecord>,
    pub warnings: Vec<String>,
    pub files: usize,
    pub blocks: usize,
    /// Interpreter reported by the probe in live mode.
    pub interpreter: Option<String>,
    pub mode: Mode,
}

/// The distribution a top-level module most likely comes from: the
/// installed provider, a declared package listing it, any indexed package
/// listing it, else the module name itself.
pub fn package_for_module(
    top: &str,
    env: &EnvironmentModel,
    declared: &BTreeSet<NormalizedName>,
    snapshot: &IndexSnapshot,
) -> Option<NormalizedName> {
    if let Some(name) = env.module_index.get(top) {
        return Some(name.clone());
    }
    let lists = |name: &NormalizedName, every: bool| {
        snapshot.releases(name).is_ok_and(|rels| {
            let mut it = rels.iter().rev();
            if every {
                it.any(|r| r.top_levels().iter().any(|m| m == top))
            } else {
                it.next().is_some_and(|r| r.top_levels().iter().any(|m| m == top))
            }
        })
    };
    if let Some(name) = declared.iter().find(|n| lists(n, true)) {
        return Some(name.clone());
    }
    if let Some(name) = snapshot.package_names().find(|n| lists(n, false)) {
        return Some(name.clone());
    }
    normalize_name(top).ok()
}

fn static_verdict(node: &ImportNode, input: &ValidationInput, declared: &BTreeSet<NormalizedName>) -> Verdict {
    match resolve_import(input.env, &node.module_path) {
        Resolution::MissingTopLevel => {
            if input.degraded {
                let pkg = package_for_module(node.top_module(), input.env, declared, input.snapshot);
                if pkg.is_some_and(|p| declared.contains(&p)) {
                    return Ok(());
                }
            }
            Err(LeafFailure::Missing {
                module: node.top_module().to_string(),
            })
        }
        Resolution::MissingSubmodule { dist, module } => Err(LeafFailure::MissingSubmodule { dist, module }),
        _ => match indirect_failures(input.env, &node.module_path).into_iter().next() {
            Some((dist, module)) => Err(LeafFailure::Indirect { dist: Some(dist), module }),
            None => Ok(()),
        },
    }
}

fn live_verdict(node: &ImportNode, result: &ProbeResult, env: &EnvironmentModel) -> Verdict {
    if result.ok {
        return Ok(());
    }
    let error_type = result.error_type.clone().unwrap_or_else(|| "Error".into());
    let message = result.error_message.clone().unwrap_or_default();
    match error_type.as_str() {
        "ModuleNotFoundError" | "ImportError" => match missing_module_name(&message) {
            Some(m) => {
                let own_top = m.split('.').next() == Some(node.top_module());
                if own_top {
                    Err(LeafFailure::ImportFailed { error_type, message })
                } else {
                    Err(LeafFailure::Indirect {
                        dist: env.module_index.get(node.top_module()).cloned(),
                        module: m.to_string(),
                    })
                }
            }
            None => Err(LeafFailure::ImportFailed { error_type, message }),
        },
        _ => Err(LeafFailure::Runtime { error_type, message }),
    }
}

fn leaf_kind(
    node: &ImportNode,
    failure: &LeafFailure,
    input: &ValidationInput,
    declared: &BTreeSet<NormalizedName>,
) -> IssueKind {
    match failure {
        LeafFailure::Indirect { .. } => IssueKind::MissingIndirectImportModules,
        LeafFailure::Runtime { .. } => IssueKind::OtherImportRuntimeError,
        _ => {
            let pkg = package_for_module(node.top_module(), input.env, declared, input.snapshot);
            if pkg.is_some_and(|p| declared.contains(&p)) {
                IssueKind::DirectImportInconsistentWithInstalled
            } else {
                IssueKind::MissingDirectImportDeps
            }
        }
    }
}

fn scope_note(node: &ImportNode) -> &'static str {
    match node.scope {
        Scope::FunctionLevel => " (deferred import)",
        Scope::ModuleLevel => "",
    }
}

fn first_false_block<'e>(
    expr: &'e ImportExpr,
    verdict: &mut dyn FnMut(&ImportNode) -> bool,
) -> Option<&'e ImportExpr> {
    let ImportExpr::All(children) = expr else { return None };
    children.iter().find(|c| {
        matches!(c, ImportExpr::Any(_)) && !evaluate_with(c, &mut |n| Some(verdict(n))).unwrap_or(true)
    })
}

/// Validates every parsed source file. Files that failed to parse are
/// left to the dependency check.
pub fn run_import_validation(p: &ProjectModel, input: &ValidationInput) -> ValidationOutcome {
    let mut out = ValidationOutcome::default();
    let declared: BTreeSet<NormalizedName> = p.declared_deps.iter().map(|d| d.name.clone()).collect();

    let mut files = Vec::new();
    for f in &p.source_files {
        let Some(m) = f.module() else { continue };
        let path = f.display_path();
        for line in dynamic_import_lines(m) {
            out.warnings.push(format!("{path}:{line}: dynamic import not analyzed"));
        }
        let external: Vec<ImportNode> = collect_imports(m, &path)
            .into_iter()
            .filter(|n| classify_import(n, &f.local_modules) == ImportClass::External)
            .collect();
        let expr = build_import_expr(m, &external);
        if let ImportExpr::All(children) = &expr {
            out.blocks += children.iter().filter(|c| matches!(c, ImportExpr::Any(_))).count();
        }
        files.push((path, expr));
    }
    out.files = files.len();

    let mut live: Option<HashMap<String, ProbeResult>> = None;
    if let Some(client) = input.probe {
        out.mode = Mode::Live;
        let statements: BTreeSet<String> = files
            .iter()
            .flat_map(|(_, e)| e.leaves().into_iter().map(ImportNode::statement))
            .collect();
        let statements: Vec<String> = statements.into_iter().collect();
        if !statements.is_empty() {
            match client.run(&statements) {
                Ok(resp) => {
                    out.interpreter = Some(resp.interpreter.clone());
                    live = Some(statements.into_iter().zip(resp.results).collect());
                }
                Err(e) => {
                    out.mode = Mode::Static;
                    out.warnings.push(format!("probe failed ({e}); falling back to static resolution"));
                }
            }
        }
    }

    let mut cache: HashMap<ImportNode, Verdict> = HashMap::new();
    let mut verdict_of = |n: &ImportNode| -> Verdict {
        cache
            .entry(n.clone())
            .or_insert_with(|| match live.as_ref().and_then(|m| m.get(&n.statement())) {
                Some(result) => live_verdict(n, result, input.env),
                None => static_verdict(n, input, &declared),
            })
            .clone()
    };

    for (path, expr) in &files {
        let ok = evaluate_with(expr, &mut |n| Some(verdict_of(n).is_ok())).unwrap_or(true);
        if ok {
            continue;
        }
        let mut leaf_issues = Vec::new();
        for node in expr.block_free() {
            if let Err(failure) = verdict_of(node) {
                let kind = leaf_kind(node, &failure, input, &declared);
                leaf_issues.push(IssueRecord::at_file(
                    kind,
                    path.clone(),
                    Some(node.line),
                    format!("`{}`: {}{}", node.statement(), failure.describe(input.env), scope_note(node)),
                ));
            }
        }
        if !leaf_issues.is_empty() {
            out.issues.extend(leaf_issues);
            continue;
        }
        let mut as_bool = |n: &ImportNode| verdict_of(n).is_ok();
        let block = first_false_block(expr, &mut as_bool);
        let leaves: Vec<&ImportNode> = block.map(|b| b.leaves()).unwrap_or_default();
        let line = leaves.iter().map(|n| n.line).min();
        let detail: Vec<String> = leaves
            .iter()
            .filter_map(|n| {
                verdict_of(n)
                    .err()
                    .map(|f| format!("`{}` ({})", n.statement(), f.describe(input.env)))
            })
            .collect();
        out.issues.push(IssueRecord::at_file(
            IssueKind::MultipleVersionControlFailure,
            path.clone(),
            line,
            format!("no alternative of the branch imports succeeds: {}", detail.join("; ")),
        ));
    }
    out
}
