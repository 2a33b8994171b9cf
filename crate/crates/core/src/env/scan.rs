//! Reading an installed environment (a `site-packages` style directory).

use std::collections::BTreeSet;
use std::fs;
use std::path::{Component, Path};

use thiserror::Error;

use super::{EnvironmentModel, InstalledDist};
use crate::pep::{normalize_name, parse_requirement, parse_version};
use crate::project::{parse_core_metadata, parse_top_level, split_dist_info_name};
use crate::snapshot::PyVersion;

#[derive(Debug, Error)]
pub enum ScanError {
    #[error("site directory {0} does not exist")]
    NotFound(String),
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("unreadable metadata in {path}: {message}")]
    Metadata { path: String, message: String },
}

#[derive(Debug, Clone, Default)]
pub struct ScanOptions {
    /// Interpreter version when the path does not name one.
    pub python: Option<PyVersion>,
    /// Walk package directories to build submodule listings.
    pub submodules: bool,
}

fn python_from_path(path: &Path) -> Option<PyVersion> {
    path.components().rev().find_map(|c| match c {
        Component::Normal(s) => s.to_str()?.strip_prefix("python")?.parse().ok(),
        _ => None,
    })
}

fn io_err(path: &Path, source: std::io::Error) -> ScanError {
    ScanError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn modules_from_record(text: &str) -> Vec<String> {
    let mut out = BTreeSet::new();
    for line in text.lines() {
        let path = line.split(',').next().unwrap_or("");
        let mut parts = path.split('/');
        let first = parts.next().unwrap_or("");
        let nested = parts.next().is_some();
        if first.is_empty() || first.starts_with("..") || first.ends_with(".dist-info") || first == "__pycache__" {
            continue;
        }
        if nested {
            out.insert(first.to_string());
        } else if let Some(stem) = first.strip_suffix(".py") {
            out.insert(stem.to_string());
        } else if first.ends_with(".so") || first.ends_with(".pyd") {
            out.insert(first.split('.').next().unwrap_or(first).to_string());
        }
    }
    out.into_iter().collect()
}

fn walk_listing(dir: &Path, prefix: &str, out: &mut BTreeSet<String>) {
    let Ok(entries) = fs::read_dir(dir) else { return };
    for entry in entries.flatten() {
        let name = entry.file_name().to_string_lossy().into_owned();
        let Ok(meta) = fs::symlink_metadata(entry.path()) else { continue };
        if meta.is_dir() {
            if name == "__pycache__" || name.contains('.') || name.contains('-') {
                continue;
            }
            let dotted = format!("{prefix}.{name}");
            out.insert(dotted.clone());
            walk_listing(&entry.path(), &dotted, out);
        } else if let Some(stem) = name.strip_suffix(".py") {
            if stem != "__init__" {
                out.insert(format!("{prefix}.{stem}"));
            }
        } else if name.ends_with(".so") || name.ends_with(".pyd") {
            out.insert(format!("{prefix}.{}", name.split('.').next().unwrap_or(&name)));
        }
    }
}

/// Builds an environment from the `*.dist-info` directories in
/// `site_dir`.
pub fn scan_environment(site_dir: &Path, opts: &ScanOptions) -> Result<EnvironmentModel, ScanError> {
    if !site_dir.is_dir() {
        return Err(ScanError::NotFound(site_dir.display().to_string()));
    }
    let mut warnings = Vec::new();
    let python = match python_from_path(site_dir).or(opts.python) {
        Some(v) => v,
        None => {
            warnings.push("interpreter version not found in path; assuming 3.12".to_string());
            PyVersion::new(3, 12)
        }
    };
    let mut env = EnvironmentModel::new(python);

    let mut dirs: Vec<String> = fs::read_dir(site_dir)
        .map_err(|e| io_err(site_dir, e))?
        .flatten()
        .map(|e| e.file_name().to_string_lossy().into_owned())
        .filter(|n| n.ends_with(".dist-info"))
        .collect();
    dirs.sort();

    for dir_name in dirs {
        let dir = site_dir.join(&dir_name);
        let meta_path = dir.join("METADATA");
        let text = fs::read_to_string(&meta_path).map_err(|e| ScanError::Metadata {
            path: meta_path.display().to_string(),
            message: e.to_string(),
        })?;
        let meta = parse_core_metadata(&text);
        let from_dir = split_dist_info_name(&dir_name);
        let name = meta
            .name
            .as_deref()
            .or(from_dir.as_ref().map(|(n, _)| n.as_str()))
            .and_then(|n| normalize_name(n).ok())
            .ok_or_else(|| ScanError::Metadata {
                path: meta_path.display().to_string(),
                message: "no usable Name".into(),
            })?;
        let version = meta
            .version
            .as_deref()
            .and_then(|v| parse_version(v).ok())
            .or(from_dir.map(|(_, v)| v))
            .ok_or_else(|| ScanError::Metadata {
                path: meta_path.display().to_string(),
                message: "no usable Version".into(),
            })?;
        let mut requires_dist = Vec::new();
        for line in &meta.requires_dist {
            match parse_requirement(line) {
                Ok(r) => requires_dist.push(r.decl),
                Err(e) => warnings.push(format!("{dir_name}: {e}, skipped")),
            }
        }

        let top_level_modules = match fs::read_to_string(dir.join("top_level.txt")) {
            Ok(text) => parse_top_level(&text),
            Err(_) => {
                let inferred = match fs::read_to_string(dir.join("RECORD")) {
                    Ok(record) => modules_from_record(&record),
                    Err(_) => {
                        let module = name.as_module_name();
                        let adjacent = site_dir.join(&module).is_dir()
                            || site_dir.join(format!("{module}.py")).is_file();
                        if adjacent {
                            vec![module]
                        } else {
                            Vec::new()
                        }
                    }
                };
                warnings.push(format!(
                    "{dir_name} has no top_level.txt; inferred modules [{}]",
                    inferred.join(", ")
                ));
                inferred
            }
        };

        let submodules = opts.submodules.then(|| {
            let mut listing = BTreeSet::new();
            for top in &top_level_modules {
                let path = site_dir.join(top);
                if path.is_dir() {
                    walk_listing(&path, top, &mut listing);
                }
            }
            listing
        });

        env.insert(InstalledDist {
            name,
            version,
            top_level_modules,
            requires_dist,
            submodules,
            import_requires: Vec::new(),
        });
    }
    env.warnings = warnings;
    Ok(env)
}

/// Writes an environment as a site directory: one dist-info per
/// distribution plus a package directory per module and submodule.
pub fn write_site_dir(env: &EnvironmentModel, site_dir: &Path) -> std::io::Result<()> {
    for dist in env.installed.values() {
        let info = site_dir.join(format!("{}-{}.dist-info", dist.name.as_module_name(), dist.version));
        fs::create_dir_all(&info)?;
        let mut meta = format!("Metadata-Version: 2.1\nName: {}\nVersion: {}\n", dist.name, dist.version);
        for req in &dist.requires_dist {
            meta.push_str(&format!("Requires-Dist: {req}\n"));
        }
        fs::write(info.join("METADATA"), meta)?;
        fs::write(info.join("top_level.txt"), dist.top_level_modules.join("\n") + "\n")?;
        for module in &dist.top_level_modules {
            let pkg = site_dir.join(module);
            fs::create_dir_all(&pkg)?;
            fs::write(pkg.join("__init__.py"), "")?;
        }
        for sub in dist.submodules.iter().flatten() {
            let pkg = sub.split('.').fold(site_dir.to_path_buf(), |p, s| p.join(s));
            fs::create_dir_all(&pkg)?;
            fs::write(pkg.join("__init__.py"), "")?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(root: &Path, rel: &str, text: &str) {
        let path = root.join(rel);
        fs::create_dir_all(path.parent().unwrap()).unwrap();
        fs::write(path, text).unwrap();
    }

    #[test]
    fn empty_and_missing() {
        let dir = tempfile::tempdir().unwrap();
        let site = dir.path().join("lib/python3.8/site-packages");
        fs::create_dir_all(&site).unwrap();
        let env = scan_environment(&site, &ScanOptions::default()).unwrap();
        assert!(env.installed.is_empty());
        assert_eq!(env.python_version, PyVersion::new(3, 8));
        assert!(scan_environment(&dir.path().join("nope"), &ScanOptions::default()).is_err());
    }

    #[test]
    fn reads_dist_info() {
        let dir = tempfile::tempdir().unwrap();
        let s = dir.path();
        write(s, "gym-0.26.2.dist-info/METADATA", "Name: gym\nVersion: 0.26.2\nRequires-Dist: numpy (>=1.18.0)\n");
        write(s, "gym-0.26.2.dist-info/top_level.txt", "gym\n");
        write(s, "gym/__init__.py", "");
        write(s, "gym/wrappers/__init__.py", "");
        write(s, "gym/wrappers/record_video.py", "");
        // No top_level.txt: falls back to RECORD, then adjacent dirs.
        write(s, "six-1.16.0.dist-info/METADATA", "Name: six\nVersion: 1.16.0\n");
        write(s, "six-1.16.0.dist-info/RECORD", "six.py,sha256=x,1\nsix-1.16.0.dist-info/METADATA,,\n");
        write(s, "Yaml_Thing-1.0.dist-info/METADATA", "Name: yaml-thing\nVersion: 1.0\n");
        write(s, "yaml_thing/__init__.py", "");
        let env = scan_environment(
            s,
            &ScanOptions {
                python: Some(PyVersion::new(3, 9)),
                submodules: true,
            },
        )
        .unwrap();
        assert_eq!(env.installed.len(), 3);
        assert_eq!(env.module_index["six"].as_str(), "six");
        assert_eq!(env.module_index["yaml_thing"].as_str(), "yaml-thing");
        assert_eq!(env.warnings.len(), 2);
        let gym = &env.installed[&normalize_name("gym").unwrap()];
        let listing: Vec<_> = gym.submodules.as_ref().unwrap().iter().cloned().collect();
        assert_eq!(listing, vec!["gym.wrappers", "gym.wrappers.record_video"]);
        assert_eq!(gym.requires_dist.len(), 1);
    }

    #[test]
    fn missing_metadata_is_error() {
        let dir = tempfile::tempdir().unwrap();
        fs::create_dir_all(dir.path().join("x-1.0.dist-info")).unwrap();
        assert!(matches!(
            scan_environment(dir.path(), &ScanOptions::default()),
            Err(ScanError::Metadata { .. })
        ));
    }
}
