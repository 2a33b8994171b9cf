//! Installation simulated against a snapshot: breadth-first, newest
//! satisfying version, no backtracking.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use super::{EnvironmentModel, InstalledDist};
use crate::pep::{evaluate_marker, DependencyDecl, MarkerOutcome, NormalizedName, SpecifierSet, Version};
use crate::snapshot::{IndexSnapshot, PyVersion, ReleaseRecord};

/// One requirement in a conflict chain. `requirer` is `None` for the
/// project's own declarations.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConflictLink {
    pub requirer: Option<(NormalizedName, Version)>,
    pub requirement: String,
}

impl fmt::Display for ConflictLink {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.requirer {
            Some((n, v)) => write!(f, "{n} {v} requires {}", self.requirement),
            None => write!(f, "project requires {}", self.requirement),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "reason", rename_all = "kebab-case")]
pub enum InstallFailure {
    DependencyConflict {
        name: NormalizedName,
        constraint: String,
        available_max: Option<Version>,
        chain: Vec<ConflictLink>,
    },
    PythonVersionRejected {
        name: NormalizedName,
        constraint: String,
        python: PyVersion,
        chain: Vec<ConflictLink>,
    },
}

impl fmt::Display for InstallFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let chain = |c: &[ConflictLink]| {
            c.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
        };
        match self {
            InstallFailure::DependencyConflict {
                name,
                constraint,
                available_max,
                chain: c,
            } => {
                write!(f, "Could not find a version that satisfies the requirement {name}{constraint}")?;
                match available_max {
                    Some(v) => write!(f, " (latest available {v})")?,
                    None => write!(f, " (no releases)")?,
                }
                write!(f, " [{}]", chain(c))
            }
            InstallFailure::PythonVersionRejected {
                name,
                constraint,
                python,
                chain: c,
            } => write!(
                f,
                "every release of {name} matching `{constraint}` excludes Python {python} [{}]",
                chain(c)
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum InstallError {
    #[error("{0}")]
    Failure(Box<InstallFailure>),
    #[error("unknown package {name} (required by {requirer})")]
    UnknownPackage { name: NormalizedName, requirer: String },
}

struct Requirement {
    requirer: Option<NormalizedName>,
    decl: DependencyDecl,
}

struct Resolver<'a> {
    snapshot: &'a IndexSnapshot,
    py: PyVersion,
    py_version: Version,
    constraints: BTreeMap<NormalizedName, Vec<Requirement>>,
    selected: BTreeMap<NormalizedName, &'a ReleaseRecord>,
    reselected: BTreeSet<NormalizedName>,
    warnings: Vec<String>,
}

impl<'a> Resolver<'a> {
    fn add_requirements(
        &mut self,
        requirer: Option<&ReleaseRecord>,
        deps: &[DependencyDecl],
        frontier: &mut BTreeSet<NormalizedName>,
    ) {
        for dep in deps {
            if let Some(marker) = &dep.marker {
                match evaluate_marker(marker, Some(&self.py_version)) {
                    MarkerOutcome::Include => {}
                    MarkerOutcome::Exclude => continue,
                    MarkerOutcome::Undecidable(var) => {
                        let who = requirer.map_or("project".to_string(), |r| format!("{} {}", r.name, r.version));
                        self.warnings.push(format!(
                            "{who}: skipped {} (marker depends on {var})",
                            dep
                        ));
                        continue;
                    }
                }
            }
            self.constraints.entry(dep.name.clone()).or_default().push(Requirement {
                requirer: requirer.map(|r| r.name.clone()),
                decl: dep.clone(),
            });
            frontier.insert(dep.name.clone());
        }
    }

    fn chain(&self, name: &NormalizedName) -> Vec<ConflictLink> {
        self.constraints
            .get(name)
            .into_iter()
            .flatten()
            .map(|req| ConflictLink {
                requirer: req.requirer.as_ref().and_then(|r| {
                    self.selected.get(r).map(|rec| (rec.name.clone(), rec.version.clone()))
                }),
                requirement: req.decl.to_string(),
            })
            .collect()
    }

    fn combined(&self, name: &NormalizedName) -> SpecifierSet {
        self.constraints
            .get(name)
            .into_iter()
            .flatten()
            .fold(SpecifierSet::empty(), |acc, r| acc.intersect(&r.decl.constraint))
    }

    fn python_ok(&self, rec: &ReleaseRecord) -> bool {
        rec.requires_python
            .as_ref()
            .is_none_or(|rp| rp.matches(&self.py_version))
    }

    fn pick(&self, name: &NormalizedName) -> Result<&'a ReleaseRecord, InstallError> {
        let releases = self.snapshot.releases(name).map_err(|_| InstallError::UnknownPackage {
            name: name.clone(),
            requirer: self.chain(name).first().map_or("project".into(), |l| match &l.requirer {
                Some((n, v)) => format!("{n} {v}"),
                None => "project".into(),
            }),
        })?;
        let set = self.combined(name);
        let matching: Vec<&ReleaseRecord> = releases.iter().filter(|r| set.matches(&r.version)).collect();
        if let Some(rec) = matching.iter().rev().find(|r| self.python_ok(r)) {
            return Ok(rec);
        }
        let failure = if matching.is_empty() {
            InstallFailure::DependencyConflict {
                name: name.clone(),
                constraint: set.to_string(),
                available_max: releases.last().map(|r| r.version.clone()),
                chain: self.chain(name),
            }
        } else {
            InstallFailure::PythonVersionRejected {
                name: name.clone(),
                constraint: set.to_string(),
                python: self.py,
                chain: self.chain(name),
            }
        };
        Err(InstallError::Failure(Box::new(failure)))
    }
}

/// Simulates installing `deps` under interpreter `py`.
///
/// Each round accumulates constraints for every pending name before
/// selecting, so the result does not depend on declaration order. A
/// package whose selection is invalidated by a later constraint is
/// re-selected once; a second invalidation is a conflict.
pub fn simulate_install(
    deps: &[DependencyDecl],
    snapshot: &IndexSnapshot,
    py: PyVersion,
) -> Result<EnvironmentModel, InstallError> {
    let mut r = Resolver {
        snapshot,
        py,
        py_version: py.to_version(),
        constraints: BTreeMap::new(),
        selected: BTreeMap::new(),
        reselected: BTreeSet::new(),
        warnings: Vec::new(),
    };
    let mut frontier = BTreeSet::new();
    r.add_requirements(None, deps, &mut frontier);

    while !frontier.is_empty() {
        let mut next = BTreeSet::new();
        for name in std::mem::take(&mut frontier) {
            let set = r.combined(&name);
            if let Some(current) = r.selected.get(&name) {
                if set.matches(&current.version) {
                    continue;
                }
                if !r.reselected.insert(name.clone()) {
                    return Err(InstallError::Failure(Box::new(InstallFailure::DependencyConflict {
                        name: name.clone(),
                        constraint: set.to_string(),
                        available_max: r.snapshot.max_version(&name).cloned(),
                        chain: r.chain(&name),
                    })));
                }
                // Forget what the replaced release asked for.
                for (target, reqs) in r.constraints.iter_mut() {
                    let before = reqs.len();
                    reqs.retain(|q| q.requirer.as_ref() != Some(&name));
                    if reqs.len() != before {
                        next.insert(target.clone());
                    }
                }
            }
            let rec = r.pick(&name)?;
            r.selected.insert(name.clone(), rec);
            r.add_requirements(Some(rec), &rec.requires_dist, &mut next);
        }
        frontier = next;
    }

    let mut env = EnvironmentModel::new(py);
    for (name, rec) in &r.selected {
        let listing = rec.top_level_modules.as_ref().and_then(|mods| {
            let dotted: BTreeSet<String> = mods.iter().filter(|m| m.contains('.')).cloned().collect();
            (!dotted.is_empty()).then_some(dotted)
        });
        env.insert(InstalledDist {
            name: name.clone(),
            version: rec.version.clone(),
            top_level_modules: rec.top_levels(),
            requires_dist: rec.requires_dist.clone(),
            submodules: listing,
            import_requires: rec.import_requires.clone().unwrap_or_default(),
        });
    }
    env.constraints = r
        .constraints
        .into_iter()
        .map(|(k, v)| (k, v.into_iter().map(|q| (q.requirer, q.decl.constraint)).collect()))
        .collect();
    env.warnings = r.warnings;
    Ok(env)
}
