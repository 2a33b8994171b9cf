//! Installation check: interpreter search plus setup-time analysis.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Mutex;

use crate::env::{is_stdlib, simulate_install, EnvironmentModel, InstallError};
use crate::imports::{build_import_expr, classify_import, collect_imports, ImportClass, ImportNode};
use crate::issue::{IssueKind, IssueRecord};
use crate::pep::{parse_requirement, DependencyDecl, NormalizedName, SpecifierSet};
use crate::project::{ParseOutcome, ProjectModel, SourceFile};
use crate::snapshot::{initial_python_version, IndexSnapshot, InterpreterTable, PyVersion, ReleaseRecord};

/// Versions tried after the constrained ones: the commonly used set.
pub const COMMON_VERSIONS: [PyVersion; 3] = [PyVersion::new(2, 7), PyVersion::new(3, 6), PyVersion::new(3, 10)];

/// Modules a build environment has without asking.
const BUILD_BASELINE: [&str; 5] = ["setuptools", "pkg_resources", "distutils", "wheel", "_distutils_hack"];

/// Interpreter versions that installed other releases of a package during
/// this run.
#[derive(Debug, Default)]
pub struct SiblingCache {
    inner: Mutex<BTreeMap<NormalizedName, BTreeSet<PyVersion>>>,
}

impl SiblingCache {
    pub fn new() -> Self {
        Self::default()
    }

    /// Newest first.
    pub fn get(&self, name: &NormalizedName) -> Vec<PyVersion> {
        let map = self.inner.lock().unwrap_or_else(|e| e.into_inner());
        map.get(name).map(|s| s.iter().rev().copied().collect()).unwrap_or_default()
    }

    pub fn record(&self, name: &NormalizedName, py: PyVersion) {
        let mut map = self.inner.lock().unwrap_or_else(|e| e.into_inner());
        map.entry(name.clone()).or_default().insert(py);
    }
}

#[derive(Debug, Clone)]
pub struct InstallOutcome {
    pub env: Option<EnvironmentModel>,
    pub chosen_python: Option<PyVersion>,
    pub initial_python: PyVersion,
    pub tried: Vec<PyVersion>,
    pub issues: Vec<IssueRecord>,
    pub warnings: Vec<String>,
}

fn permits(set: &SpecifierSet, py: PyVersion) -> bool {
    set.matches(&py.to_version())
}

/// The release record the initial interpreter is derived from: the
/// project's own snapshot entry when present, otherwise one built from
/// its declared classifiers and dated at the snapshot date.
fn own_record(p: &ProjectModel, snapshot: &IndexSnapshot) -> ReleaseRecord {
    if let (Some(name), Some(version)) = (&p.declared_name, &p.declared_version) {
        if let Some(rec) = snapshot.release(name, version) {
            let mut rec = rec.clone();
            if rec.classifiers.is_empty() {
                rec.classifiers = p.classifiers.clone();
            }
            return rec;
        }
    }
    let name = p
        .declared_name
        .clone()
        .unwrap_or_else(|| NormalizedName::new("project").expect("valid name"));
    let version = p
        .declared_version
        .clone()
        .unwrap_or_else(|| crate::pep::parse_version("0").expect("valid version"));
    let mut rec = ReleaseRecord::new(name, version, snapshot.snapshot_date());
    rec.classifiers = p.classifiers.clone();
    rec
}

/// Interpreter versions in search order, without repeats: constrained
/// versions from the initial one downward (then upward), sibling
/// successes, the common set, then the whole table newest first.
pub fn search_order(
    declared_python: Option<&SpecifierSet>,
    initial: PyVersion,
    siblings: &[PyVersion],
    table: &InterpreterTable,
) -> Vec<PyVersion> {
    let mut order = Vec::new();
    let push = |v: PyVersion, order: &mut Vec<PyVersion>| {
        if table.contains(v) && !order.contains(&v) {
            order.push(v);
        }
    };
    match declared_python {
        Some(set) => {
            let allowed: Vec<PyVersion> = table.versions_desc().filter(|&v| permits(set, v)).collect();
            for &v in allowed.iter().filter(|&&v| v <= initial) {
                push(v, &mut order);
            }
            for &v in allowed.iter().rev().filter(|&&v| v > initial) {
                push(v, &mut order);
            }
        }
        None => push(initial, &mut order),
    }
    for &v in siblings {
        push(v, &mut order);
    }
    for v in COMMON_VERSIONS {
        push(v, &mut order);
    }
    for v in table.versions_desc() {
        push(v, &mut order);
    }
    order
}

/// Searches for an interpreter under which the declared dependencies
/// install, and reports setup-time problems.
pub fn run_installation_check(
    p: &ProjectModel,
    label: &str,
    snapshot: &IndexSnapshot,
    table: &InterpreterTable,
    siblings: &SiblingCache,
) -> InstallOutcome {
    let mut issues = Vec::new();
    let mut warnings = Vec::new();
    if !p.has_declarations() {
        issues.push(IssueRecord::at_package(
            IssueKind::MissingConfigFiles,
            label,
            "no dependency declarations found (no dist-info, pyproject [project] table or requirements.txt)",
        ));
    }
    let (setup_issues, setup_warnings) = setup_issues(p, snapshot);
    issues.extend(setup_issues);
    warnings.extend(setup_warnings);

    let rec = own_record(p, snapshot);
    let initial = match initial_python_version(&rec, table) {
        Ok(v) => v,
        Err(e) => {
            let newest = table.versions_desc().next().unwrap_or(PyVersion::new(3, 12));
            warnings.push(format!("{e}; starting from {newest}"));
            newest
        }
    };
    // Undeclared projects are keyed by their label so unrelated ones never
    // share successes.
    let sibling_key = p
        .declared_name
        .clone()
        .or_else(|| NormalizedName::new(label.split("==").next().unwrap_or(label)).ok())
        .unwrap_or_else(|| rec.name.clone());
    let order = search_order(p.declared_python.as_ref(), initial, &siblings.get(&sibling_key), table);

    let mut tried = Vec::new();
    let mut first_error: Option<InstallError> = None;
    for py in order {
        tried.push(py);
        match simulate_install(&p.declared_deps, snapshot, py) {
            Ok(env) => {
                siblings.record(&sibling_key, py);
                if let Some(set) = &p.declared_python {
                    if !permits(set, py) {
                        let why = match &first_error {
                            Some(e) => format!("; first failure: {e}"),
                            None => "; no table version satisfies it".to_string(),
                        };
                        issues.push(IssueRecord::at_package(
                            IssueKind::IncorrectPythonVersion,
                            label,
                            format!(
                                "installation fails on every Python allowed by `{set}`{why}; succeeds on {py}"
                            ),
                        ));
                    }
                }
                warnings.extend(env.warnings.iter().cloned());
                let env = env.with_own_modules(p.own_modules());
                return InstallOutcome {
                    env: Some(env),
                    chosen_python: Some(py),
                    initial_python: initial,
                    tried,
                    issues,
                    warnings,
                };
            }
            Err(e) => {
                first_error.get_or_insert(e);
            }
        }
    }

    let evidence = match &first_error {
        Some(e) => format!(
            "{e} (tried Python {})",
            tried.iter().map(ToString::to_string).collect::<Vec<_>>().join(", ")
        ),
        None => "interpreter table is empty".to_string(),
    };
    issues.push(IssueRecord::at_package(IssueKind::SetupDependencyConflict, label, evidence));
    InstallOutcome {
        env: None,
        chosen_python: None,
        initial_python: initial,
        tried,
        issues,
        warnings,
    }
}

fn is_baseline(module: &str) -> bool {
    BUILD_BASELINE.contains(&module) || is_stdlib(module)
}

/// Modules the build requirements provide.
fn build_modules(reqs: &[DependencyDecl], snapshot: &IndexSnapshot) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    for req in reqs {
        out.insert(req.name.as_module_name());
        if let Some(latest) = snapshot.releases(&req.name).ok().and_then(|r| r.last()) {
            out.extend(latest.top_levels());
        }
    }
    out
}

fn block_free_external(file: &SourceFile, own: &[String]) -> Vec<ImportNode> {
    let Some(m) = file.module() else { return Vec::new() };
    let path = file.display_path();
    let external: Vec<ImportNode> = collect_imports(m, &path)
        .into_iter()
        .filter(|n| classify_import(n, &file.local_modules) == ImportClass::External)
        .collect();
    build_import_expr(m, &external)
        .block_free()
        .into_iter()
        .filter(|n| !own.iter().any(|o| o == n.top_module()))
        .cloned()
        .collect()
}

fn init_of<'a>(p: &'a ProjectModel, module: &str) -> Option<&'a SourceFile> {
    let candidates = [
        format!("{module}/__init__.py"),
        format!("src/{module}/__init__.py"),
        format!("{module}.py"),
        format!("src/{module}.py"),
    ];
    p.source_files.iter().find(|f| candidates.contains(&f.display_path()))
}

/// MissingSetupRequires and OtherSetupRuntimeError found statically in
/// setup.py and pyproject.toml.
fn setup_issues(p: &ProjectModel, snapshot: &IndexSnapshot) -> (Vec<IssueRecord>, Vec<String>) {
    let mut issues = Vec::new();
    let mut warnings = Vec::new();

    let mut build_reqs = p.build_requires.clone();
    if let Some(setup) = &p.setup_script {
        let path = setup.display_path();
        match &setup.parse {
            ParseOutcome::Failed(f) => issues.push(IssueRecord::at_file(
                IssueKind::OtherSetupRuntimeError,
                &path,
                f.line,
                format!("{path} cannot run: {}", f.message),
            )),
            ParseOutcome::Pending => {}
            ParseOutcome::Parsed(m) => {
                let facts = crate::project::analyze_setup(m);
                if facts.dynamic {
                    warnings.push(format!("{path} computes its requirements at run time; not analyzed"));
                }
                for line in &facts.setup_requires {
                    match parse_requirement(line) {
                        Ok(r) => build_reqs.push(r.decl),
                        Err(e) => warnings.push(format!("{path}: setup_requires entry {e}, skipped")),
                    }
                }
                for (file, line) in &facts.file_refs {
                    if !p.root.join(file).exists() {
                        issues.push(IssueRecord::at_file(
                            IssueKind::OtherSetupRuntimeError,
                            &path,
                            Some(*line),
                            format!("{path} reads {file}, which is not in the release"),
                        ));
                    }
                }
            }
        }
    }
    if let Some(readme) = &p.pyproject_readme {
        if !p.root.join(readme).exists() {
            issues.push(IssueRecord::at_file(
                IssueKind::OtherSetupRuntimeError,
                "pyproject.toml",
                None,
                format!("readme {readme} is not in the release"),
            ));
        }
    }

    let provided = build_modules(&build_reqs, snapshot);
    for req in &build_reqs {
        if !is_baseline(&req.name.as_module_name()) && !snapshot.contains(&req.name) {
            issues.push(IssueRecord::at_package(
                IssueKind::MissingSetupRequires,
                req.name.to_string(),
                format!("build requirement {req} is not available in the index"),
            ));
        }
    }

    if let Some(setup) = &p.setup_script {
        let own = p.own_modules();
        let path = setup.display_path();
        let needs = |m: &str| !is_baseline(m) && !provided.contains(m);
        let Some(m) = setup.module() else { return (issues, warnings) };
        let external: Vec<ImportNode> = collect_imports(m, &path)
            .into_iter()
            .filter(|n| n.relative_level == 0)
            .collect();
        for node in build_import_expr(m, &external).block_free() {
            let top = node.top_module();
            if own.iter().any(|o| o == top) {
                let Some(init) = init_of(p, top) else { continue };
                for inner in block_free_external(init, &own) {
                    if needs(inner.top_module()) {
                        issues.push(IssueRecord::at_file(
                            IssueKind::MissingSetupRequires,
                            &path,
                            Some(node.line),
                            format!(
                                "{path} imports {top}, whose {}:{} imports {}, which no build requirement provides",
                                inner.file,
                                inner.line,
                                inner.top_module()
                            ),
                        ));
                    }
                }
            } else if needs(top) {
                issues.push(IssueRecord::at_file(
                    IssueKind::MissingSetupRequires,
                    &path,
                    Some(node.line),
                    format!("{path} imports {top}, which no build requirement provides"),
                ));
            }
        }
    }
    (issues, warnings)
}

/// The interpreter set `>=X.Y, <X.Y+1` that admits exactly one minor
/// version.
pub fn exact_python(py: PyVersion) -> SpecifierSet {
    let text = format!(">={py}, <{}.{}", py.major, py.minor + 1);
    crate::pep::parse_specifier_set(&text).expect("well-formed specifier")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table() -> InterpreterTable {
        InterpreterTable::default()
    }

    #[test]
    fn order_without_constraint() {
        let order = search_order(None, PyVersion::new(3, 8), &[], &table());
        assert_eq!(&order[..4], &[PyVersion::new(3, 8), PyVersion::new(2, 7), PyVersion::new(3, 6), PyVersion::new(3, 10)]);
        let unique: BTreeSet<_> = order.iter().collect();
        assert_eq!(unique.len(), order.len());
        assert_eq!(order.len(), table().versions_desc().count());
    }

    #[test]
    fn order_with_constraint_and_siblings() {
        let set = crate::pep::parse_specifier_set(">=3.7, <3.10").unwrap();
        let order = search_order(Some(&set), PyVersion::new(3, 8), &[PyVersion::new(3, 11), PyVersion::new(3, 8)], &table());
        assert_eq!(
            &order[..7],
            &[
                PyVersion::new(3, 8),
                PyVersion::new(3, 7),
                PyVersion::new(3, 9),
                PyVersion::new(3, 11),
                PyVersion::new(2, 7),
                PyVersion::new(3, 6),
                PyVersion::new(3, 10),
            ]
        );
    }

    #[test]
    fn exact_python_admits_one_minor() {
        let set = exact_python(PyVersion::new(3, 6));
        assert!(permits(&set, PyVersion::new(3, 6)));
        assert!(!permits(&set, PyVersion::new(3, 7)));
        assert!(!permits(&set, PyVersion::new(3, 5)));
    }
}
