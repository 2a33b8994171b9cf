//! Offline model of package-index metadata.
//!
//! A snapshot is a dated, immutable copy of per-release metadata. All
//! resolution in offline mode goes through it, so runs are reproducible.

mod interpreters;
mod registry;

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pep::{
    parse_requirement, parse_specifier_set, parse_version, DependencyDecl, NormalizedName,
    SpecifierSet, Version,
};

pub use interpreters::{initial_python_version, InterpreterTable, PyVersion};
pub use registry::{
    parse_registry_payload, RegistryClient, RegistryError, DEFAULT_REGISTRY_URL, DEFAULT_TTL_DAYS,
};

#[derive(Debug, Error)]
pub enum SnapshotError {
    #[error("cannot read snapshot {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("snapshot schema error: {0}")]
    Schema(String),
    #[error("duplicate release {name} {version}")]
    DuplicateRelease { name: NormalizedName, version: Box<Version> },
    #[error("unknown package {0}")]
    UnknownPackage(NormalizedName),
    #[error("no version of {name} satisfies `{constraint}` (latest available: {})", .available_max.as_ref().map(|v| v.to_string()).unwrap_or_else(|| "none".into()))]
    NoSatisfyingVersion {
        name: NormalizedName,
        constraint: Box<SpecifierSet>,
        available_max: Option<Box<Version>>,
    },
    #[error("no interpreter in the table is old enough for {0}")]
    NoCandidate(String),
}

/// Metadata of one published release.
#[derive(Debug, Clone, PartialEq)]
pub struct ReleaseRecord {
    pub name: NormalizedName,
    pub version: Version,
    pub release_date: NaiveDate,
    pub requires_python: Option<SpecifierSet>,
    pub requires_dist: Vec<DependencyDecl>,
    pub classifiers: Vec<String>,
    /// Importable modules. Dotted entries (`gym.wrappers`) double as a
    /// submodule listing for their top-level package.
    pub top_level_modules: Option<Vec<String>>,
    pub has_source: bool,
    /// Modules the distribution itself imports when its top-level module
    /// is imported. Optional extension field; absent in registry data.
    pub import_requires: Option<Vec<String>>,
}

impl ReleaseRecord {
    pub fn new(name: NormalizedName, version: Version, release_date: NaiveDate) -> Self {
        ReleaseRecord {
            name,
            version,
            release_date,
            requires_python: None,
            requires_dist: Vec::new(),
            classifiers: Vec::new(),
            top_level_modules: None,
            has_source: true,
            import_requires: None,
        }
    }

    /// Top-level module names, falling back to the distribution name
    /// spelled as a module when no listing is known.
    pub fn top_levels(&self) -> Vec<String> {
        match &self.top_level_modules {
            Some(mods) => {
                let mut tops: Vec<String> = mods
                    .iter()
                    .map(|m| m.split('.').next().unwrap_or(m).to_string())
                    .filter(|m| !m.is_empty())
                    .collect();
                tops.sort();
                tops.dedup();
                tops
            }
            None => vec![self.name.as_module_name()],
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct SnapshotFile {
    snapshot_date: String,
    packages: BTreeMap<String, Vec<RecordFile>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub(crate) struct RecordFile {
    version: String,
    release_date: String,
    #[serde(default)]
    requires_python: Option<String>,
    requires_dist: Vec<DependencyFile>,
    classifiers: Vec<String>,
    #[serde(default)]
    top_level_modules: Option<Vec<String>>,
    has_source: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    import_requires: Option<Vec<String>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct DependencyFile {
    name: String,
    constraint: String,
    #[serde(default)]
    marker: Option<String>,
}

impl RecordFile {
    pub(crate) fn from_record(rec: &ReleaseRecord) -> Self {
        RecordFile {
            version: rec.version.to_string(),
            release_date: rec.release_date.format("%Y-%m-%d").to_string(),
            requires_python: rec.requires_python.as_ref().map(ToString::to_string),
            requires_dist: rec
                .requires_dist
                .iter()
                .map(|d| DependencyFile {
                    name: d.name.to_string(),
                    constraint: d.constraint.to_string(),
                    marker: d.marker.clone(),
                })
                .collect(),
            classifiers: rec.classifiers.clone(),
            top_level_modules: rec.top_level_modules.clone(),
            has_source: rec.has_source,
            import_requires: rec.import_requires.clone(),
        }
    }

    /// Converts to a record. Unparseable versions yield `Ok(None)` with a
    /// warning; they are legacy strings no resolver can order.
    pub(crate) fn into_record(
        self,
        name: &NormalizedName,
        warnings: &mut Vec<String>,
    ) -> Result<Option<ReleaseRecord>, SnapshotError> {
        let version = match parse_version(&self.version) {
            Ok(v) => v,
            Err(_) => {
                warnings.push(format!(
                    "{name}: skipping unparseable version `{}`",
                    self.version
                ));
                return Ok(None);
            }
        };
        let release_date = parse_date(&self.release_date)?;
        let requires_python = match self.requires_python.as_deref().map(str::trim) {
            None | Some("") => None,
            Some(text) => match parse_specifier_set(text) {
                Ok(set) => Some(set),
                Err(_) => {
                    warnings.push(format!(
                        "{name} {version}: ignoring unparseable requires_python `{text}`"
                    ));
                    None
                }
            },
        };
        let mut requires_dist = Vec::with_capacity(self.requires_dist.len());
        for dep in self.requires_dist {
            let dep_name = NormalizedName::new(&dep.name)
                .map_err(|e| SnapshotError::Schema(format!("{name} {version}: {e}")))?;
            match parse_specifier_set(&dep.constraint) {
                Ok(constraint) => requires_dist.push(DependencyDecl {
                    name: dep_name,
                    constraint,
                    marker: dep.marker.filter(|m| !m.trim().is_empty()),
                }),
                Err(_) => warnings.push(format!(
                    "{name} {version}: ignoring dependency {dep_name} with unparseable constraint `{}`",
                    dep.constraint
                )),
            }
        }
        Ok(Some(ReleaseRecord {
            name: name.clone(),
            version,
            release_date,
            requires_python,
            requires_dist,
            classifiers: self.classifiers,
            top_level_modules: self.top_level_modules,
            has_source: self.has_source,
            import_requires: self.import_requires,
        }))
    }
}

pub(crate) fn parse_date(text: &str) -> Result<NaiveDate, SnapshotError> {
    NaiveDate::parse_from_str(text.trim(), "%Y-%m-%d")
        .map_err(|_| SnapshotError::Schema(format!("invalid date `{text}`")))
}

/// An immutable, validated index snapshot.
#[derive(Debug, Clone, PartialEq)]
pub struct IndexSnapshot {
    snapshot_date: NaiveDate,
    packages: BTreeMap<NormalizedName, Vec<ReleaseRecord>>,
    warnings: Vec<String>,
}

impl IndexSnapshot {
    /// Builds a snapshot from records, normalizing order and rejecting
    /// duplicates and releases dated after `snapshot_date`.
    pub fn from_records(
        snapshot_date: NaiveDate,
        records: impl IntoIterator<Item = ReleaseRecord>,
    ) -> Result<Self, SnapshotError> {
        let mut packages: BTreeMap<NormalizedName, Vec<ReleaseRecord>> = BTreeMap::new();
        for rec in records {
            if rec.release_date > snapshot_date {
                return Err(SnapshotError::Schema(format!(
                    "{} {} is dated {} after the snapshot date {}",
                    rec.name, rec.version, rec.release_date, snapshot_date
                )));
            }
            packages.entry(rec.name.clone()).or_default().push(rec);
        }
        for releases in packages.values_mut() {
            releases.sort_by(|a, b| a.version.cmp(&b.version));
            if let Some(pair) = releases.windows(2).find(|w| w[0].version == w[1].version) {
                return Err(SnapshotError::DuplicateRelease {
                    name: pair[1].name.clone(),
                    version: Box::new(pair[1].version.clone()),
                });
            }
        }
        Ok(IndexSnapshot {
            snapshot_date,
            packages,
            warnings: Vec::new(),
        })
    }

    pub fn empty(snapshot_date: NaiveDate) -> Self {
        IndexSnapshot {
            snapshot_date,
            packages: BTreeMap::new(),
            warnings: Vec::new(),
        }
    }

    pub fn from_json_str(text: &str) -> Result<Self, SnapshotError> {
        let file: SnapshotFile =
            serde_json::from_str(text).map_err(|e| SnapshotError::Schema(e.to_string()))?;
        let snapshot_date = parse_date(&file.snapshot_date)?;
        let mut warnings = Vec::new();
        let mut records = Vec::new();
        for (raw_name, releases) in file.packages {
            let name = NormalizedName::new(&raw_name)
                .map_err(|e| SnapshotError::Schema(e.to_string()))?;
            for rf in releases {
                if let Some(rec) = rf.into_record(&name, &mut warnings)? {
                    records.push(rec);
                }
            }
        }
        let mut snapshot = IndexSnapshot::from_records(snapshot_date, records)?;
        snapshot.warnings = warnings;
        Ok(snapshot)
    }

    pub fn load(path: &Path) -> Result<Self, SnapshotError> {
        let text = fs::read_to_string(path).map_err(|source| SnapshotError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json_str(&text)
    }

    pub fn to_json_string(&self) -> String {
        let file = SnapshotFile {
            snapshot_date: self.snapshot_date.format("%Y-%m-%d").to_string(),
            packages: self
                .packages
                .iter()
                .map(|(name, releases)| {
                    (
                        name.to_string(),
                        releases.iter().map(RecordFile::from_record).collect(),
                    )
                })
                .collect(),
        };
        serde_json::to_string_pretty(&file).expect("snapshot serializes")
    }

    pub fn save(&self, path: &Path) -> std::io::Result<()> {
        fs::write(path, self.to_json_string())
    }

    pub fn snapshot_date(&self) -> NaiveDate {
        self.snapshot_date
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    pub fn package_names(&self) -> impl Iterator<Item = &NormalizedName> {
        self.packages.keys()
    }

    pub fn len(&self) -> usize {
        self.packages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.packages.is_empty()
    }

    pub fn contains(&self, name: &NormalizedName) -> bool {
        self.packages.contains_key(name)
    }

    /// Releases of a package in ascending version order.
    pub fn releases(&self, name: &NormalizedName) -> Result<&[ReleaseRecord], SnapshotError> {
        self.packages
            .get(name)
            .map(Vec::as_slice)
            .ok_or_else(|| SnapshotError::UnknownPackage(name.clone()))
    }

    pub fn release(&self, name: &NormalizedName, version: &Version) -> Option<&ReleaseRecord> {
        let releases = self.packages.get(name)?;
        releases
            .binary_search_by(|r| r.version.cmp(version))
            .ok()
            .map(|i| &releases[i])
    }

    pub fn max_version(&self, name: &NormalizedName) -> Option<&Version> {
        self.packages.get(name)?.last().map(|r| &r.version)
    }

    /// The newest release matching `set`.
    pub fn latest_satisfying(
        &self,
        name: &NormalizedName,
        set: &SpecifierSet,
    ) -> Result<&ReleaseRecord, SnapshotError> {
        let releases = self.releases(name)?;
        releases
            .iter()
            .rev()
            .find(|r| set.matches(&r.version))
            .ok_or_else(|| SnapshotError::NoSatisfyingVersion {
                name: name.clone(),
                constraint: Box::new(set.clone()),
                available_max: releases.last().map(|r| Box::new(r.version.clone())),
            })
    }

    /// All pairs `(a, b)` where `a` has the lower version but was released
    /// after `b`. Sorted by `(a, b)`.
    pub fn detect_version_date_inversions(
        &self,
        name: &NormalizedName,
    ) -> Result<Vec<(Version, Version)>, SnapshotError> {
        let releases = self.releases(name)?;
        // Sweep upward by version keeping already-seen releases keyed by
        // date; every seen release dated after the current one inverts.
        let mut seen: BTreeMap<NaiveDate, Vec<usize>> = BTreeMap::new();
        let mut pairs = Vec::new();
        for (idx, rel) in releases.iter().enumerate() {
            if let Some(next_day) = rel.release_date.succ_opt() {
                for &lower in seen.range(next_day..).flat_map(|(_, v)| v) {
                    pairs.push((lower, idx));
                }
            }
            seen.entry(rel.release_date).or_default().push(idx);
        }
        pairs.sort();
        Ok(pairs
            .into_iter()
            .map(|(a, b)| (releases[a].version.clone(), releases[b].version.clone()))
            .collect())
    }
}

pub fn load_snapshot(path: &Path) -> Result<IndexSnapshot, SnapshotError> {
    IndexSnapshot::load(path)
}

/// Parses a requirement line into a dependency, ignoring extras.
pub(crate) fn dependency_from_line(line: &str) -> Result<DependencyDecl, crate::pep::PepError> {
    parse_requirement(line).map(|r| r.decl)
}
