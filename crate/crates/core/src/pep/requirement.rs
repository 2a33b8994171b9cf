use std::fmt;

use serde::{Deserialize, Serialize};

use super::name::{normalize_name, NormalizedName};
use super::specifier::{parse_specifier_set, SpecifierSet};
use super::PepError;

/// A declared dependency on another distribution.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DependencyDecl {
    pub name: NormalizedName,
    pub constraint: SpecifierSet,
    pub marker: Option<String>,
}

impl DependencyDecl {
    pub fn new(name: NormalizedName, constraint: SpecifierSet) -> Self {
        DependencyDecl {
            name,
            constraint,
            marker: None,
        }
    }
}

impl fmt::Display for DependencyDecl {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name)?;
        if !self.constraint.is_empty() {
            write!(f, "{}", self.constraint.to_string().replace(' ', ""))?;
        }
        if let Some(m) = &self.marker {
            write!(f, "; {m}")?;
        }
        Ok(())
    }
}

/// A requirement line after parsing: the dependency itself plus any
/// extras, which the resolver ignores.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Requirement {
    pub decl: DependencyDecl,
    pub extras: Vec<String>,
}

/// Parses `name [extras] specifiers [; marker]`. Specifiers may be wrapped
/// in parentheses, as in `Requires-Dist` headers. URL requirements
/// (`name @ url`) are rejected.
pub fn parse_requirement(line: &str) -> Result<Requirement, PepError> {
    let invalid = || PepError::InvalidRequirement(line.to_string());
    let (body, marker) = match line.split_once(';') {
        Some((b, m)) => {
            let m = m.trim();
            (b, if m.is_empty() { None } else { Some(m.to_string()) })
        }
        None => (line, None),
    };
    let body = body.trim();
    let name_end = body
        .find(|c: char| !(c.is_ascii_alphanumeric() || matches!(c, '.' | '_' | '-')))
        .unwrap_or(body.len());
    if name_end == 0 {
        return Err(invalid());
    }
    let name = normalize_name(&body[..name_end])?;
    let mut rest = body[name_end..].trim_start();

    let mut extras = Vec::new();
    if let Some(after) = rest.strip_prefix('[') {
        let close = after.find(']').ok_or_else(invalid)?;
        extras = after[..close]
            .split(',')
            .map(|e| e.trim().to_string())
            .filter(|e| !e.is_empty())
            .collect();
        rest = after[close + 1..].trim_start();
    }

    if rest.starts_with('@') {
        return Err(PepError::UnsupportedRequirement(line.trim().to_string()));
    }
    let rest = rest.trim();
    let spec_text = match rest.strip_prefix('(') {
        Some(inner) => inner.strip_suffix(')').ok_or_else(invalid)?,
        None => rest,
    };
    let constraint = parse_specifier_set(spec_text)?;
    Ok(Requirement {
        decl: DependencyDecl {
            name,
            constraint,
            marker,
        },
        extras,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plain_and_constrained() {
        let r = parse_requirement("gym>=0.9.7").unwrap();
        assert_eq!(r.decl.name.as_str(), "gym");
        assert_eq!(r.decl.constraint.len(), 1);
        let r = parse_requirement("Flask_Cors").unwrap();
        assert_eq!(r.decl.name.as_str(), "flask-cors");
        assert!(r.decl.constraint.is_empty());
    }

    #[test]
    fn metadata_style() {
        let r = parse_requirement("numpy (>=1.0,<2) ; python_version < \"3.8\"").unwrap();
        assert_eq!(r.decl.constraint.len(), 2);
        assert_eq!(r.decl.marker.as_deref(), Some("python_version < \"3.8\""));
    }

    #[test]
    fn extras_are_kept_separately() {
        let r = parse_requirement("requests[security, socks] >= 2.0").unwrap();
        assert_eq!(r.extras, vec!["security", "socks"]);
        assert_eq!(r.decl.name.as_str(), "requests");
    }

    #[test]
    fn url_requirements_rejected() {
        assert!(matches!(
            parse_requirement("pkg @ https://example.com/pkg.whl"),
            Err(PepError::UnsupportedRequirement(_))
        ));
        assert!(parse_requirement(">=1.0").is_err());
        assert!(parse_requirement("pkg[extra").is_err());
    }

    #[test]
    fn display() {
        let r = parse_requirement("gym >= 0.9.7, < 0.23.0").unwrap();
        assert_eq!(r.decl.to_string(), "gym>=0.9.7,<0.23.0");
    }
}
