use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::version::{parse_version, Version};
use super::PepError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Operator {
    Equal,
    NotEqual,
    GreaterEqual,
    LessEqual,
    Greater,
    Less,
}

impl Operator {
    pub fn as_str(self) -> &'static str {
        match self {
            Operator::Equal => "==",
            Operator::NotEqual => "!=",
            Operator::GreaterEqual => ">=",
            Operator::LessEqual => "<=",
            Operator::Greater => ">",
            Operator::Less => "<",
        }
    }
}

/// One `operator version` clause. `wildcard` marks `==1.2.*` and
/// `!=1.2.*` prefix matches.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Specifier {
    op: Operator,
    version: Version,
    wildcard: bool,
}

impl Specifier {
    pub fn new(op: Operator, version: Version) -> Self {
        Specifier {
            op,
            version,
            wildcard: false,
        }
    }

    pub fn prefix(op: Operator, version: Version) -> Self {
        debug_assert!(matches!(op, Operator::Equal | Operator::NotEqual));
        Specifier {
            op,
            version,
            wildcard: true,
        }
    }

    pub fn operator(&self) -> Operator {
        self.op
    }

    pub fn version(&self) -> &Version {
        &self.version
    }

    pub fn is_wildcard(&self) -> bool {
        self.wildcard
    }

    /// Checks the clause alone, without pre-release gating.
    pub fn contains(&self, candidate: &Version) -> bool {
        let spec = &self.version;
        match self.op {
            Operator::Equal if self.wildcard => prefix_match(spec, candidate),
            Operator::NotEqual if self.wildcard => !prefix_match(spec, candidate),
            Operator::Equal => candidate == spec,
            Operator::NotEqual => candidate != spec,
            Operator::GreaterEqual => candidate >= spec,
            Operator::LessEqual => candidate <= spec,
            Operator::Greater => {
                if candidate <= spec {
                    return false;
                }
                // `>1.0` must not admit 1.0.post1 unless the bound is itself a post release.
                !(!spec.is_postrelease()
                    && candidate.is_postrelease()
                    && candidate.cmp_release(spec) == Ordering::Equal)
            }
            Operator::Less => {
                if candidate >= spec {
                    return false;
                }
                // `<2.0` must not admit 2.0a1 unless the bound is itself a pre-release.
                !(!spec.is_prerelease()
                    && candidate.is_prerelease()
                    && candidate.cmp_release(spec) == Ordering::Equal)
            }
        }
    }
}

fn prefix_match(prefix: &Version, candidate: &Version) -> bool {
    let want = prefix.release();
    (0..want.len()).all(|i| candidate.release().get(i).copied().unwrap_or(0) == want[i])
}

impl fmt::Display for Specifier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.op.as_str(), self.version)?;
        if self.wildcard {
            f.write_str(".*")?;
        }
        Ok(())
    }
}

/// A conjunction of specifiers. The empty set matches every version.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SpecifierSet {
    specs: Vec<Specifier>,
}

impl SpecifierSet {
    pub fn empty() -> Self {
        SpecifierSet::default()
    }

    pub fn from_specs(specs: Vec<Specifier>) -> Self {
        SpecifierSet { specs }
    }

    pub fn is_empty(&self) -> bool {
        self.specs.is_empty()
    }

    pub fn len(&self) -> usize {
        self.specs.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Specifier> {
        self.specs.iter()
    }

    /// Conjunction of two sets.
    pub fn intersect(&self, other: &SpecifierSet) -> SpecifierSet {
        let mut specs = self.specs.clone();
        for s in &other.specs {
            if !specs.contains(s) {
                specs.push(s.clone());
            }
        }
        SpecifierSet { specs }
    }

    /// True when some clause names a pre-release or dev version, which
    /// opts the whole set into considering pre-releases.
    pub fn allows_prereleases(&self) -> bool {
        self.specs.iter().any(|s| s.version.is_prerelease())
    }

    pub fn matches(&self, v: &Version) -> bool {
        if v.is_prerelease() && !self.allows_prereleases() {
            return false;
        }
        self.specs.iter().all(|s| s.contains(v))
    }
}

pub fn matches(set: &SpecifierSet, v: &Version) -> bool {
    set.matches(v)
}

impl fmt::Display for SpecifierSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.specs.iter().map(Specifier::to_string).collect();
        f.write_str(&parts.join(", "))
    }
}

impl FromStr for SpecifierSet {
    type Err = PepError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_specifier_set(s)
    }
}

impl Serialize for SpecifierSet {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for SpecifierSet {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = String::deserialize(deserializer)?;
        parse_specifier_set(&raw).map_err(serde::de::Error::custom)
    }
}

/// Parses a comma-separated specifier list. Whitespace is ignored
/// everywhere. `~=V` is expanded into `>=V` plus a `==` prefix clause.
pub fn parse_specifier_set(text: &str) -> Result<SpecifierSet, PepError> {
    let compact: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    let mut specs = Vec::new();
    if compact.is_empty() {
        return Ok(SpecifierSet { specs });
    }
    for clause in compact.split(',') {
        specs.extend(parse_clause(clause, text)?);
    }
    Ok(SpecifierSet { specs })
}

fn parse_clause(clause: &str, whole: &str) -> Result<Vec<Specifier>, PepError> {
    let invalid = || PepError::InvalidSpecifier(whole.to_string());
    if clause.is_empty() || clause.starts_with("===") {
        return Err(invalid());
    }
    let (op, rest) = [
        ("~=", None),
        ("==", Some(Operator::Equal)),
        ("!=", Some(Operator::NotEqual)),
        (">=", Some(Operator::GreaterEqual)),
        ("<=", Some(Operator::LessEqual)),
        (">", Some(Operator::Greater)),
        ("<", Some(Operator::Less)),
    ]
    .iter()
    .find_map(|(tok, op)| clause.strip_prefix(tok).map(|rest| (*op, rest)))
    .ok_or_else(invalid)?;

    if let Some(prefix) = rest.strip_suffix(".*") {
        let op = op.ok_or_else(invalid)?;
        if !matches!(op, Operator::Equal | Operator::NotEqual) {
            return Err(invalid());
        }
        let version = parse_version(prefix).map_err(|_| invalid())?;
        if version.pre().is_some() || version.post().is_some() || version.dev().is_some() {
            return Err(invalid());
        }
        return Ok(vec![Specifier::prefix(op, version)]);
    }

    let version = parse_version(rest).map_err(|_| invalid())?;
    match op {
        Some(op) => Ok(vec![Specifier::new(op, version)]),
        None => {
            let release = version.release();
            if release.len() < 2 {
                return Err(invalid());
            }
            let prefix = Version::from_release(&release[..release.len() - 1]);
            Ok(vec![
                Specifier::new(Operator::GreaterEqual, version),
                Specifier::prefix(Operator::Equal, prefix),
            ])
        }
    }
}
