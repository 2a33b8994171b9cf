//! Run-time environment models: simulated installs against a snapshot,
//! scans of installed site directories, and import resolution.

mod install;
mod scan;
mod stdlib;

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::issue::{IssueKind, IssueRecord};
use crate::pep::{evaluate_marker, DependencyDecl, MarkerOutcome, NormalizedName, Version};
use crate::snapshot::PyVersion;
pub use install::{simulate_install, ConflictLink, InstallError, InstallFailure};
pub use scan::{scan_environment, write_site_dir, ScanError, ScanOptions};
pub use stdlib::{is_stdlib, STDLIB_MODULES};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct InstalledDist {
    pub name: NormalizedName,
    pub version: Version,
    pub top_level_modules: Vec<String>,
    pub requires_dist: Vec<DependencyDecl>,
    /// Dotted module paths known to exist, when a listing is available.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub submodules: Option<BTreeSet<String>>,
    /// Modules this distribution imports when its top level is imported.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub import_requires: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EnvironmentModel {
    pub python_version: PyVersion,
    pub installed: BTreeMap<NormalizedName, InstalledDist>,
    pub module_index: BTreeMap<String, NormalizedName>,
    /// Modules provided by the project under analysis.
    pub own_modules: BTreeSet<String>,
    /// Requirement targets per installed name: (requirer, constraint).
    #[serde(skip)]
    pub constraints: BTreeMap<NormalizedName, Vec<(Option<NormalizedName>, crate::pep::SpecifierSet)>>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl EnvironmentModel {
    pub fn new(python_version: PyVersion) -> Self {
        EnvironmentModel {
            python_version,
            installed: BTreeMap::new(),
            module_index: BTreeMap::new(),
            own_modules: BTreeSet::new(),
            constraints: BTreeMap::new(),
            warnings: Vec::new(),
        }
    }

    /// Adds a distribution and indexes its modules. Earlier providers of
    /// a module keep it.
    pub fn insert(&mut self, dist: InstalledDist) {
        for module in &dist.top_level_modules {
            self.module_index
                .entry(module.clone())
                .or_insert_with(|| dist.name.clone());
        }
        self.installed.insert(dist.name.clone(), dist);
    }

    pub fn with_own_modules(mut self, modules: impl IntoIterator<Item = String>) -> Self {
        self.own_modules.extend(modules);
        self
    }

    /// Versions that violate a constraint placed on them during
    /// resolution. Empty for any environment `simulate_install` returns.
    pub fn audit(&self) -> Vec<(NormalizedName, Version, String)> {
        let mut out = Vec::new();
        for (name, list) in &self.constraints {
            if let Some(dist) = self.installed.get(name) {
                for (_, set) in list {
                    if !set.matches(&dist.version) {
                        out.push((name.clone(), dist.version.clone(), set.to_string()));
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum Resolution {
    Stdlib,
    Project,
    Resolved { dist: NormalizedName },
    MissingTopLevel,
    MissingSubmodule { dist: NormalizedName, module: String },
}

impl Resolution {
    pub fn is_ok(&self) -> bool {
        matches!(
            self,
            Resolution::Stdlib | Resolution::Project | Resolution::Resolved { .. }
        )
    }
}

/// Resolves a dotted module path. Deeper segments are checked only when
/// the providing distribution carries a submodule listing.
pub fn resolve_import(env: &EnvironmentModel, module_path: &str) -> Resolution {
    let top = module_path.split('.').next().unwrap_or(module_path);
    if env.own_modules.contains(top) {
        return Resolution::Project;
    }
    if let Some(name) = env.module_index.get(top) {
        let dist = &env.installed[name];
        if let Some(listing) = &dist.submodules {
            let mut prefix = top.to_string();
            for segment in module_path.split('.').skip(1) {
                prefix.push('.');
                prefix.push_str(segment);
                if !listing.contains(&prefix) {
                    return Resolution::MissingSubmodule {
                        dist: name.clone(),
                        module: prefix,
                    };
                }
            }
        }
        return Resolution::Resolved { dist: name.clone() };
    }
    if is_stdlib(top) {
        return Resolution::Stdlib;
    }
    Resolution::MissingTopLevel
}

/// Modules that importing `module_path` would pull in and that cannot be
/// resolved, found by following `import_requires` transitively. Each
/// entry is (requiring distribution, missing module).
pub fn indirect_failures(env: &EnvironmentModel, module_path: &str) -> Vec<(NormalizedName, String)> {
    let mut out = Vec::new();
    let mut visited = BTreeSet::new();
    let mut stack = Vec::new();
    if let Resolution::Resolved { dist } = resolve_import(env, module_path) {
        stack.push(dist);
    }
    while let Some(dist) = stack.pop() {
        if !visited.insert(dist.clone()) {
            continue;
        }
        for module in &env.installed[&dist].import_requires {
            match resolve_import(env, module) {
                Resolution::Resolved { dist: next } => stack.push(next),
                r if r.is_ok() => {}
                _ => out.push((dist.clone(), module.clone())),
            }
        }
    }
    out.sort();
    out.dedup();
    out
}

/// Checks each installed distribution's requirements against the
/// environment. Missing requirements are reported as
/// MissingIndirectImportModules and version violations as
/// MetadataInconsistency.
pub fn check_env_consistency(env: &EnvironmentModel) -> Vec<IssueRecord> {
    let py = env.python_version.to_version();
    let mut issues = Vec::new();
    for dist in env.installed.values() {
        for req in &dist.requires_dist {
            if let Some(marker) = &req.marker {
                if evaluate_marker(marker, Some(&py)) != MarkerOutcome::Include {
                    continue;
                }
            }
            match env.installed.get(&req.name) {
                None => issues.push(IssueRecord::at_package(
                    IssueKind::MissingIndirectImportModules,
                    dist.name.to_string(),
                    format!(
                        "{} {} requires {} which is not installed",
                        dist.name, dist.version, req
                    ),
                )),
                Some(dep) if !req.constraint.matches(&dep.version) => issues.push(IssueRecord::at_package(
                    IssueKind::MetadataInconsistency,
                    dist.name.to_string(),
                    format!(
                        "{} {} requires {} but {} is installed",
                        dist.name, dist.version, req, dep.version
                    ),
                )),
                Some(_) => {}
            }
        }
    }
    issues
}
