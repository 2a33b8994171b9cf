//! Loading a target package from disk.
//!
//! Declarations are read from the first source found, in order: a root
//! `<name>-<version>.dist-info/METADATA`, the `[project]` table of
//! `pyproject.toml`, then `requirements.txt`. A bare `setup.py` is not
//! analyzed for dependencies.

mod legacy;
pub mod metadata;
pub mod setup;
pub mod sources;

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use thiserror::Error;

use crate::issue::{IssueKind, IssueRecord};
use crate::pep::{
    normalize_name, parse_requirement, parse_specifier_set, parse_version, DependencyDecl,
    NormalizedName, SpecifierSet, Version,
};
pub use legacy::rewrite_legacy;
pub use metadata::{
    parse_core_metadata, parse_pyproject, parse_requirements_file, parse_top_level,
    split_dist_info_name, CoreMetadata, PyprojectDecls, RequirementsFile,
};
pub use setup::{analyze_setup, SetupFacts};
pub use sources::{
    collect_py_files, decode_source, local_modules_for, parse_source, FailureReason,
    ParseFailure, ParseOutcome, ParsedModule, SourceFile,
};

#[derive(Debug, Error)]
pub enum ProjectError {
    #[error("project root {0} does not exist")]
    NotFound(String),
    #[error("I/O error reading {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("no dependency declarations found under {0}")]
    MissingConfigFiles(String),
    #[error("no source code found under {0}")]
    MissingSourceCode(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DeclSource {
    DistInfo,
    Pyproject,
    Requirements,
    /// Supplied from outside the release, e.g. by a dependency-inference
    /// tool under evaluation.
    Inferred,
}

#[derive(Debug, Clone)]
pub struct ProjectModel {
    pub root: PathBuf,
    pub declared_name: Option<NormalizedName>,
    pub declared_version: Option<Version>,
    pub declared_python: Option<SpecifierSet>,
    pub declared_deps: Vec<DependencyDecl>,
    pub decl_source: Option<DeclSource>,
    pub classifiers: Vec<String>,
    pub metadata_dir_name: Option<String>,
    pub top_level_declared: Option<Vec<String>>,
    /// Declared top-level modules with no matching source entry.
    pub missing_top_levels: Vec<String>,
    /// Top-level modules provided by binary extensions only.
    pub binary_modules: Vec<String>,
    pub source_files: Vec<SourceFile>,
    pub setup_script: Option<SourceFile>,
    pub build_requires: Vec<DependencyDecl>,
    pub pyproject_readme: Option<String>,
    pub warnings: Vec<String>,
}

impl ProjectModel {
    /// A project with nothing declared and no sources.
    pub fn empty(root: &Path) -> Self {
        ProjectModel {
            root: root.to_path_buf(),
            declared_name: None,
            declared_version: None,
            declared_python: None,
            declared_deps: Vec::new(),
            decl_source: None,
            classifiers: Vec::new(),
            metadata_dir_name: None,
            top_level_declared: None,
            missing_top_levels: Vec::new(),
            binary_modules: Vec::new(),
            source_files: Vec::new(),
            setup_script: None,
            build_requires: Vec::new(),
            pyproject_readme: None,
            warnings: Vec::new(),
        }
    }

    pub fn has_declarations(&self) -> bool {
        self.decl_source.is_some()
    }

    /// Whether any importable code was located, Python or binary.
    pub fn has_source(&self) -> bool {
        !self.source_files.is_empty() || !self.binary_modules.is_empty()
    }

    /// Top-level module names the project itself provides.
    pub fn own_modules(&self) -> Vec<String> {
        let mut out: Vec<String> = match &self.top_level_declared {
            Some(t) => t.iter().filter(|m| !self.missing_top_levels.contains(m)).cloned().collect(),
            None => Vec::new(),
        };
        for f in &self.source_files {
            if let Some(first) = f.path.components().next() {
                let first = first.as_os_str().to_string_lossy();
                let first = if first == "src" {
                    match f.path.components().nth(1) {
                        Some(c) => c.as_os_str().to_string_lossy().into_owned(),
                        None => continue,
                    }
                } else {
                    first.into_owned()
                };
                out.push(first.strip_suffix(".py").unwrap_or(&first).to_string());
            }
        }
        out.extend(self.binary_modules.iter().cloned());
        out.sort();
        out.dedup();
        out
    }

    /// Parses every source file and the setup script, in parallel.
    pub fn parse_sources(mut self) -> Self {
        let root = self.root.clone();
        self.source_files.par_iter_mut().for_each(|f| parse_one(&root, f));
        if let Some(setup) = self.setup_script.as_mut() {
            parse_one(&root, setup);
        }
        self
    }

    pub fn setup_facts(&self) -> Option<SetupFacts> {
        self.setup_script.as_ref()?.module().map(analyze_setup)
    }
}

fn parse_one(root: &Path, f: &mut SourceFile) {
    if !matches!(f.parse, ParseOutcome::Pending) {
        return;
    }
    let display = f.display_path();
    f.parse = match fs::read(root.join(&f.path)) {
        Ok(bytes) => match parse_source(&bytes, &display) {
            Ok(m) => ParseOutcome::Parsed(std::sync::Arc::new(m)),
            Err(e) => ParseOutcome::Failed(e),
        },
        Err(e) => ParseOutcome::Failed(ParseFailure {
            reason: FailureReason::Encoding,
            message: format!("unreadable: {e}"),
            line: None,
        }),
    };
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> ProjectError + '_ {
    move |source| ProjectError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn read_opt(path: &Path) -> Result<Option<String>, ProjectError> {
    match fs::read(path) {
        Ok(bytes) => Ok(Some(String::from_utf8_lossy(&bytes).into_owned())),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
        Err(e) => Err(io_err(path)(e)),
    }
}

fn source_file(root: &Path, path: &Path) -> SourceFile {
    let rel = path.strip_prefix(root).unwrap_or(path).to_path_buf();
    let dir = path.parent().unwrap_or(root);
    SourceFile {
        path: rel,
        parse: ParseOutcome::Pending,
        local_modules: local_modules_for(dir),
    }
}

fn has_binary_module(dir: &Path, module: &str) -> bool {
    let Ok(entries) = fs::read_dir(dir) else { return false };
    entries.flatten().any(|e| {
        let name = e.file_name().to_string_lossy().into_owned();
        (name.ends_with(".so") || name.ends_with(".pyd"))
            && name.split('.').next() == Some(module)
    })
}

fn is_package_dir(path: &Path) -> bool {
    path.join("__init__.py").is_file()
        && !fs::symlink_metadata(path).map(|m| m.file_type().is_symlink()).unwrap_or(true)
}

/// Loads declarations and enumerates sources without judging them.
/// Absent declarations or sources are left for the caller to report.
pub fn scan_project(root: &Path) -> Result<ProjectModel, ProjectError> {
    if !root.is_dir() {
        return Err(ProjectError::NotFound(root.display().to_string()));
    }
    let mut model = ProjectModel::empty(root);

    let mut dist_infos: Vec<String> = fs::read_dir(root)
        .map_err(io_err(root))?
        .flatten()
        .filter(|e| e.path().is_dir())
        .map(|e| e.file_name().to_string_lossy().into_owned())
        .filter(|n| n.ends_with(".dist-info"))
        .collect();
    dist_infos.sort();
    if dist_infos.len() > 1 {
        model.warnings.push(format!(
            "several metadata directories found, using {}",
            dist_infos[0]
        ));
    }

    if let Some(dir_name) = dist_infos.first() {
        let dir = root.join(dir_name);
        model.metadata_dir_name = Some(dir_name.clone());
        if let Some(text) = read_opt(&dir.join("METADATA"))? {
            let meta = parse_core_metadata(&text);
            model.decl_source = Some(DeclSource::DistInfo);
            model.declared_name = meta.name.as_deref().and_then(|n| normalize_name(n).ok());
            model.declared_version = meta.version.as_deref().and_then(|v| parse_version(v).ok());
            model.declared_python = meta
                .requires_python
                .as_deref()
                .and_then(|s| parse_specifier_set(s).ok());
            model.classifiers = meta.classifiers;
            for line in &meta.requires_dist {
                match parse_requirement(line) {
                    Ok(r) => model.declared_deps.push(r.decl),
                    Err(e) => model.warnings.push(format!("METADATA: {e}, skipped")),
                }
            }
        } else {
            model.warnings.push(format!("{dir_name} has no METADATA file"));
        }
        if model.declared_name.is_none() || model.declared_version.is_none() {
            if let Some((n, v)) = split_dist_info_name(dir_name) {
                if model.declared_name.is_none() {
                    model.declared_name = normalize_name(&n).ok();
                }
                if model.declared_version.is_none() {
                    model.declared_version = Some(v);
                }
            }
        }
        match read_opt(&dir.join("top_level.txt"))? {
            Some(text) => model.top_level_declared = Some(parse_top_level(&text)),
            None => model
                .warnings
                .push(format!("{dir_name} has no top_level.txt; scanning for packages")),
        }
    }

    if let Some(text) = read_opt(&root.join("pyproject.toml"))? {
        match parse_pyproject(&text) {
            Ok(p) => {
                model.build_requires = p.build_requires;
                model.pyproject_readme = p.readme;
                model.warnings.extend(p.warnings);
                if p.has_project_table && model.decl_source.is_none() {
                    model.decl_source = Some(DeclSource::Pyproject);
                    model.declared_name = p.name;
                    model.declared_version = p.version;
                    model.declared_python = p.requires_python;
                    model.declared_deps = p.dependencies;
                    model.classifiers = p.classifiers;
                }
            }
            Err(e) => model.warnings.push(format!("pyproject.toml unreadable: {e}")),
        }
    }

    if model.decl_source.is_none() {
        if let Some(text) = read_opt(&root.join("requirements.txt"))? {
            let parsed = parse_requirements_file(&text);
            model.decl_source = Some(DeclSource::Requirements);
            model.declared_deps = parsed.deps;
            model.warnings.extend(parsed.warnings);
        }
    }

    let setup_path = root.join("setup.py");
    if setup_path.is_file() {
        model.setup_script = Some(source_file(root, &setup_path));
        if model.decl_source.is_none() {
            model
                .warnings
                .push("setup.py is the only configuration; dynamic setup scripts are not analyzed".into());
        }
    }

    enumerate_sources(&mut model);
    Ok(model)
}

fn enumerate_sources(model: &mut ProjectModel) {
    let root = model.root.clone();
    let mut files = Vec::new();
    match model.top_level_declared.clone() {
        Some(modules) => {
            for module in modules {
                let mut found = false;
                for base in [root.clone(), root.join("src")] {
                    let dir = base.join(&module);
                    let file = base.join(format!("{module}.py"));
                    if dir.is_dir() && !fs::symlink_metadata(&dir).map(|m| m.file_type().is_symlink()).unwrap_or(true) {
                        let before = files.len();
                        collect_py_files(&dir, &mut files);
                        found |= files.len() > before;
                    }
                    if file.is_file() {
                        files.push(file);
                        found = true;
                    }
                    if !found && has_binary_module(&base, &module) {
                        model.binary_modules.push(module.clone());
                        found = true;
                    }
                    if found {
                        break;
                    }
                }
                if !found {
                    model.missing_top_levels.push(module);
                }
            }
        }
        None => {
            for base in [root.clone(), root.join("src")] {
                let Ok(entries) = fs::read_dir(&base) else { continue };
                let mut entries: Vec<_> = entries.flatten().map(|e| e.path()).collect();
                entries.sort();
                for path in entries {
                    let name = path.file_name().unwrap_or_default().to_string_lossy().into_owned();
                    if path.is_dir() && is_package_dir(&path) {
                        collect_py_files(&path, &mut files);
                    } else if path.is_file() && name.ends_with(".py") && !(base == root && name == "setup.py") {
                        files.push(path);
                    }
                }
            }
        }
    }
    files.sort();
    files.dedup();
    model.source_files = files.iter().map(|f| source_file(&root, f)).collect();
}

/// Loads a project, failing when no declarations or no source exist.
pub fn load_project(root: &Path) -> Result<ProjectModel, ProjectError> {
    let model = scan_project(root)?;
    if !model.has_declarations() {
        return Err(ProjectError::MissingConfigFiles(root.display().to_string()));
    }
    if !model.has_source() {
        return Err(ProjectError::MissingSourceCode(root.display().to_string()));
    }
    Ok(model)
}

/// Compares the metadata directory name with the declared identity and
/// declared top-level modules with the source tree.
pub fn check_metadata_consistency(p: &ProjectModel) -> Vec<IssueRecord> {
    let mut issues = Vec::new();
    if let (Some(dir), Some(name), Some(version)) =
        (&p.metadata_dir_name, &p.declared_name, &p.declared_version)
    {
        let matches = split_dist_info_name(dir).is_some_and(|(n, v)| {
            normalize_name(&n).ok().as_ref() == Some(name) && &v == version
        });
        if !matches {
            issues.push(IssueRecord::at_file(
                IssueKind::MetadataInconsistency,
                dir.clone(),
                None,
                format!("metadata directory {dir} does not match declared {name} {version}"),
            ));
        }
    }
    if p.has_source() {
        if let Some(dir) = &p.metadata_dir_name {
            for module in &p.missing_top_levels {
                issues.push(IssueRecord::at_file(
                    IssueKind::MetadataInconsistency,
                    format!("{dir}/top_level.txt"),
                    None,
                    format!("declared top-level module `{module}` has no source"),
                ));
            }
        }
    }
    issues
}
