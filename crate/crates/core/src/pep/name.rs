use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::PepError;

/// A distribution name in canonical form: lowercase, with every run of
/// `.`, `_` and `-` collapsed into a single dash.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NormalizedName(String);

impl NormalizedName {
    pub fn new(raw: &str) -> Result<Self, PepError> {
        normalize_name(raw)
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// The spelling used for importable module names and dist-info
    /// directories (`zope-interface` -> `zope_interface`).
    pub fn as_module_name(&self) -> String {
        self.0.replace('-', "_")
    }
}

fn is_sep(c: char) -> bool {
    matches!(c, '.' | '_' | '-')
}

/// Canonicalizes a raw distribution name.
///
/// The name must start and end with an ASCII alphanumeric and may only
/// contain alphanumerics, `.`, `_` and `-` in between.
pub fn normalize_name(raw: &str) -> Result<NormalizedName, PepError> {
    let invalid = || PepError::InvalidName(raw.to_string());
    let trimmed = raw.trim();
    let first = trimmed.chars().next().ok_or_else(invalid)?;
    let last = trimmed.chars().last().ok_or_else(invalid)?;
    if !first.is_ascii_alphanumeric() || !last.is_ascii_alphanumeric() {
        return Err(invalid());
    }
    let mut out = String::with_capacity(trimmed.len());
    let mut in_sep = false;
    for c in trimmed.chars() {
        if c.is_ascii_alphanumeric() {
            out.push(c.to_ascii_lowercase());
            in_sep = false;
        } else if is_sep(c) {
            if !in_sep {
                out.push('-');
            }
            in_sep = true;
        } else {
            return Err(invalid());
        }
    }
    Ok(NormalizedName(out))
}

impl fmt::Display for NormalizedName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl FromStr for NormalizedName {
    type Err = PepError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        normalize_name(s)
    }
}

impl AsRef<str> for NormalizedName {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

impl Serialize for NormalizedName {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.0)
    }
}

impl<'de> Deserialize<'de> for NormalizedName {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = String::deserialize(deserializer)?;
        normalize_name(&raw).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lowercases() {
        assert_eq!(normalize_name("PyYAML").unwrap().as_str(), "pyyaml");
    }

    #[test]
    fn dots_become_dashes() {
        assert_eq!(
            normalize_name("zope.interface").unwrap().as_str(),
            "zope-interface"
        );
    }

    #[test]
    fn separator_runs_collapse() {
        assert_eq!(normalize_name("A__b..c").unwrap().as_str(), "a-b-c");
        assert_eq!(normalize_name("a-_.-b").unwrap().as_str(), "a-b");
    }

    #[test]
    fn rejects_bad_characters() {
        assert!(normalize_name("foo bar").is_err());
        assert!(normalize_name("foo/bar").is_err());
        assert!(normalize_name("").is_err());
        assert!(normalize_name("-foo").is_err());
        assert!(normalize_name("foo_").is_err());
    }

    #[test]
    fn module_spelling() {
        assert_eq!(
            normalize_name("zope.interface").unwrap().as_module_name(),
            "zope_interface"
        );
    }
}
