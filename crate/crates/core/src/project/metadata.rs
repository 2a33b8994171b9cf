//! Parsers for dependency declaration files.

use crate::pep::{
    parse_requirement, parse_specifier_set, parse_version, DependencyDecl, NormalizedName,
    PepError, SpecifierSet, Version,
};

/// Core metadata fields from a dist-info `METADATA` file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CoreMetadata {
    pub name: Option<String>,
    pub version: Option<String>,
    pub requires_dist: Vec<String>,
    pub requires_python: Option<String>,
    pub classifiers: Vec<String>,
}

/// Parses the RFC 822 style header block of a `METADATA` file. Parsing
/// stops at the first blank line (the long description follows it).
pub fn parse_core_metadata(text: &str) -> CoreMetadata {
    let mut meta = CoreMetadata::default();
    let mut headers: Vec<(String, String)> = Vec::new();
    for line in text.lines() {
        if line.trim().is_empty() {
            break;
        }
        if line.starts_with([' ', '\t']) {
            if let Some((_, value)) = headers.last_mut() {
                value.push(' ');
                value.push_str(line.trim());
            }
            continue;
        }
        if let Some((key, value)) = line.split_once(':') {
            headers.push((key.trim().to_ascii_lowercase(), value.trim().to_string()));
        }
    }
    for (key, value) in headers {
        match key.as_str() {
            "name" => meta.name = Some(value),
            "version" => meta.version = Some(value),
            "requires-dist" => meta.requires_dist.push(value),
            "requires-python" => meta.requires_python = Some(value),
            "classifier" => meta.classifiers.push(value),
            _ => {}
        }
    }
    meta
}

/// Splits `<name>-<version>.dist-info` into its parts. The version is the
/// longest dash-separated suffix that parses.
pub fn split_dist_info_name(dir_name: &str) -> Option<(String, Version)> {
    let stem = dir_name.strip_suffix(".dist-info")?;
    for (idx, _) in stem.match_indices('-') {
        if let Ok(v) = parse_version(&stem[idx + 1..]) {
            return Some((stem[..idx].to_string(), v));
        }
    }
    None
}

/// Result of parsing a requirements file: accepted dependencies plus
/// per-line warnings for rejected forms.
#[derive(Debug, Clone, Default)]
pub struct RequirementsFile {
    pub deps: Vec<DependencyDecl>,
    pub warnings: Vec<String>,
}

/// Parses requirements-file text: one requirement per line, `#`
/// comments, blank lines and backslash continuations. Editable installs,
/// URLs, paths, options and `-r`/`-c` includes are skipped with a warning.
pub fn parse_requirements_file(text: &str) -> RequirementsFile {
    let mut out = RequirementsFile::default();
    let mut logical = String::new();
    let mut start_line = 1;
    for (idx, raw) in text.lines().enumerate() {
        if logical.is_empty() {
            start_line = idx + 1;
        }
        if let Some(stripped) = raw.strip_suffix('\\') {
            logical.push_str(stripped);
            logical.push(' ');
            continue;
        }
        logical.push_str(raw);
        let line = std::mem::take(&mut logical);
        handle_requirement_line(&line, start_line, &mut out);
    }
    if !logical.is_empty() {
        handle_requirement_line(&logical, start_line, &mut out);
    }
    out
}

fn strip_comment(line: &str) -> &str {
    // A `#` only starts a comment at line start or after whitespace.
    let bytes = line.as_bytes();
    for (i, &b) in bytes.iter().enumerate() {
        if b == b'#' && (i == 0 || bytes[i - 1].is_ascii_whitespace()) {
            return &line[..i];
        }
    }
    line
}

fn handle_requirement_line(line: &str, lineno: usize, out: &mut RequirementsFile) {
    let line = strip_comment(line).trim();
    if line.is_empty() {
        return;
    }
    if line.starts_with('-') {
        out.warnings.push(format!(
            "requirements line {lineno}: option or include `{line}` is not supported, skipped"
        ));
        return;
    }
    if line.contains("://") || line.starts_with('.') || line.starts_with('/') {
        out.warnings.push(format!(
            "requirements line {lineno}: URL or path requirement `{line}` skipped"
        ));
        return;
    }
    match parse_requirement(line) {
        Ok(req) => {
            if !req.extras.is_empty() {
                out.warnings.push(format!(
                    "requirements line {lineno}: extras [{}] of {} ignored",
                    req.extras.join(","),
                    req.decl.name
                ));
            }
            out.deps.push(req.decl);
        }
        Err(PepError::UnsupportedRequirement(_)) => out.warnings.push(format!(
            "requirements line {lineno}: URL requirement `{line}` skipped"
        )),
        Err(e) => out
            .warnings
            .push(format!("requirements line {lineno}: {e}, skipped")),
    }
}

/// Reads `top_level.txt`: one module per line, blanks ignored.
pub fn parse_top_level(text: &str) -> Vec<String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(String::from)
        .collect()
}

/// Declarations found in a `pyproject.toml`.
#[derive(Debug, Clone, Default)]
pub struct PyprojectDecls {
    pub has_project_table: bool,
    pub name: Option<NormalizedName>,
    pub version: Option<Version>,
    pub requires_python: Option<SpecifierSet>,
    pub dependencies: Vec<DependencyDecl>,
    pub classifiers: Vec<String>,
    pub build_requires: Vec<DependencyDecl>,
    pub readme: Option<String>,
    pub warnings: Vec<String>,
}

pub fn parse_pyproject(text: &str) -> Result<PyprojectDecls, String> {
    let doc: toml::Table = text.parse().map_err(|e: toml::de::Error| e.to_string())?;
    let mut out = PyprojectDecls::default();
    let str_list = |v: Option<&toml::Value>| -> Vec<String> {
        v.and_then(toml::Value::as_array)
            .map(|a| a.iter().filter_map(|x| x.as_str().map(String::from)).collect())
            .unwrap_or_default()
    };
    let deps_from = |lines: Vec<String>, into: &mut Vec<DependencyDecl>, warnings: &mut Vec<String>| {
        for line in lines {
            match parse_requirement(&line) {
                Ok(r) => into.push(r.decl),
                Err(e) => warnings.push(format!("pyproject.toml: {e}, skipped")),
            }
        }
    };
    if let Some(build) = doc.get("build-system").and_then(toml::Value::as_table) {
        let lines = str_list(build.get("requires"));
        let mut warnings = Vec::new();
        deps_from(lines, &mut out.build_requires, &mut warnings);
        out.warnings.extend(warnings);
    }
    if let Some(project) = doc.get("project").and_then(toml::Value::as_table) {
        out.has_project_table = true;
        out.name = project
            .get("name")
            .and_then(toml::Value::as_str)
            .and_then(|n| NormalizedName::new(n).ok());
        out.version = project
            .get("version")
            .and_then(toml::Value::as_str)
            .and_then(|v| parse_version(v).ok());
        out.requires_python = project
            .get("requires-python")
            .and_then(toml::Value::as_str)
            .and_then(|s| parse_specifier_set(s).ok());
        out.classifiers = str_list(project.get("classifiers"));
        out.readme = match project.get("readme") {
            Some(toml::Value::String(s)) => Some(s.clone()),
            Some(toml::Value::Table(t)) => t.get("file").and_then(toml::Value::as_str).map(String::from),
            _ => None,
        };
        let lines = str_list(project.get("dependencies"));
        let mut warnings = Vec::new();
        deps_from(lines, &mut out.dependencies, &mut warnings);
        out.warnings.extend(warnings);
    }
    Ok(out)
}
