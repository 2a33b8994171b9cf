use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use chrono::{Days, NaiveDate};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{parse_date, ReleaseRecord, SnapshotError};
use crate::pep::Version;

/// An interpreter `major.minor` version.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PyVersion {
    pub major: u32,
    pub minor: u32,
}

impl PyVersion {
    pub const fn new(major: u32, minor: u32) -> Self {
        PyVersion { major, minor }
    }

    pub fn to_version(self) -> Version {
        Version::from_release(&[u64::from(self.major), u64::from(self.minor)])
    }
}

impl fmt::Display for PyVersion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.major, self.minor)
    }
}

impl FromStr for PyVersion {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (major, minor) = s
            .trim()
            .split_once('.')
            .ok_or_else(|| format!("expected major.minor, got `{s}`"))?;
        Ok(PyVersion {
            major: major.parse().map_err(|_| format!("bad major in `{s}`"))?,
            minor: minor.parse().map_err(|_| format!("bad minor in `{s}`"))?,
        })
    }
}

impl Serialize for PyVersion {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for PyVersion {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = String::deserialize(deserializer)?;
        raw.parse().map_err(serde::de::Error::custom)
    }
}

const DEFAULT_TABLE: &[(u32, u32, &str)] = &[
    (2, 7, "2010-07-03"),
    (3, 0, "2008-12-03"),
    (3, 1, "2009-06-27"),
    (3, 2, "2011-02-20"),
    (3, 3, "2012-09-29"),
    (3, 4, "2014-03-16"),
    (3, 5, "2015-09-13"),
    (3, 6, "2016-12-23"),
    (3, 7, "2018-06-27"),
    (3, 8, "2019-10-14"),
    (3, 9, "2020-10-05"),
    (3, 10, "2021-10-04"),
    (3, 11, "2022-10-24"),
    (3, 12, "2023-10-02"),
];

/// Release dates of interpreter versions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InterpreterTable {
    dates: BTreeMap<PyVersion, NaiveDate>,
}

impl Default for InterpreterTable {
    fn default() -> Self {
        let dates = DEFAULT_TABLE
            .iter()
            .map(|&(major, minor, d)| (PyVersion::new(major, minor), parse_date(d).unwrap()))
            .collect();
        InterpreterTable { dates }
    }
}

impl InterpreterTable {
    pub fn new(dates: BTreeMap<PyVersion, NaiveDate>) -> Result<Self, SnapshotError> {
        let mut prev: Option<(PyVersion, NaiveDate)> = None;
        for (&v, &d) in &dates {
            if let Some((pv, pd)) = prev {
                if pv.major == v.major && d <= pd {
                    return Err(SnapshotError::Schema(format!(
                        "interpreter {v} is not dated after {pv}"
                    )));
                }
            }
            prev = Some((v, d));
        }
        Ok(InterpreterTable { dates })
    }

    pub fn from_json_str(text: &str) -> Result<Self, SnapshotError> {
        let raw: BTreeMap<String, String> =
            serde_json::from_str(text).map_err(|e| SnapshotError::Schema(e.to_string()))?;
        let mut dates = BTreeMap::new();
        for (k, d) in raw {
            let v: PyVersion = k.parse().map_err(SnapshotError::Schema)?;
            dates.insert(v, parse_date(&d)?);
        }
        Self::new(dates)
    }

    pub fn load(path: &Path) -> Result<Self, SnapshotError> {
        let text = std::fs::read_to_string(path).map_err(|source| SnapshotError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json_str(&text)
    }

    pub fn date(&self, v: PyVersion) -> Option<NaiveDate> {
        self.dates.get(&v).copied()
    }

    pub fn contains(&self, v: PyVersion) -> bool {
        self.dates.contains_key(&v)
    }

    /// All versions, newest first.
    pub fn versions_desc(&self) -> impl Iterator<Item = PyVersion> + '_ {
        self.dates.keys().rev().copied()
    }
}

const CLASSIFIER_PREFIX: &str = "Programming Language :: Python :: ";

/// Parses a `Programming Language :: Python :: X.Y` classifier. Bare major
/// versions and implementation classifiers yield `None`.
pub fn classifier_python_version(classifier: &str) -> Option<PyVersion> {
    let rest = classifier.trim().strip_prefix(CLASSIFIER_PREFIX)?;
    let first = rest.split("::").next()?.trim();
    let (major, minor) = first.split_once('.')?;
    Some(PyVersion::new(major.parse().ok()?, minor.parse().ok()?))
}

/// Interpreter to try first for a release: the highest version named by
/// its classifiers, otherwise the highest interpreter released at least
/// 180 days before the release.
pub fn initial_python_version(
    rel: &ReleaseRecord,
    table: &InterpreterTable,
) -> Result<PyVersion, SnapshotError> {
    if let Some(v) = rel
        .classifiers
        .iter()
        .filter_map(|c| classifier_python_version(c))
        .max()
    {
        return Ok(v);
    }
    let cutoff = rel
        .release_date
        .checked_sub_days(Days::new(180))
        .ok_or_else(|| SnapshotError::NoCandidate(format!("{} {}", rel.name, rel.version)))?;
    table
        .dates
        .iter()
        .filter(|(_, &d)| d <= cutoff)
        .map(|(&v, _)| v)
        .max()
        .ok_or_else(|| SnapshotError::NoCandidate(format!("{} {}", rel.name, rel.version)))
}
