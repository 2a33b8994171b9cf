//! Configuration-issue taxonomy: fifteen kinds in three categories, each
//! tied to the check that detects it and a fatality flag.

use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum IssueCategory {
    IncompleteConfiguration,
    IncorrectConfiguration,
    IncorrectCode,
}

impl IssueCategory {
    pub fn label(self) -> &'static str {
        match self {
            IssueCategory::IncompleteConfiguration => "Incomplete Configuration",
            IssueCategory::IncorrectConfiguration => "Incorrect Configuration",
            IssueCategory::IncorrectCode => "Incorrect Code",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckKind {
    Installation,
    Dependency,
    ImportValidation,
}

impl CheckKind {
    pub fn label(self) -> &'static str {
        match self {
            CheckKind::Installation => "Installation Check",
            CheckKind::Dependency => "Dependency Check",
            CheckKind::ImportValidation => "Import Validation",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum IssueKind {
    MissingConfigFiles,
    MissingSetupRequires,
    MissingPythonVersion,
    MissingDirectImportDeps,
    SetupDependencyConflict,
    IncorrectPythonVersion,
    OtherSetupRuntimeError,
    MetadataInconsistency,
    VersionDateInconsistency,
    MissingIndirectImportModules,
    DirectImportInconsistentWithInstalled,
    OtherImportRuntimeError,
    MissingSourceCode,
    ParsingError,
    MultipleVersionControlFailure,
}

impl IssueKind {
    pub const ALL: [IssueKind; 15] = [
        IssueKind::MissingConfigFiles,
        IssueKind::MissingSetupRequires,
        IssueKind::MissingPythonVersion,
        IssueKind::MissingDirectImportDeps,
        IssueKind::SetupDependencyConflict,
        IssueKind::IncorrectPythonVersion,
        IssueKind::OtherSetupRuntimeError,
        IssueKind::MetadataInconsistency,
        IssueKind::VersionDateInconsistency,
        IssueKind::MissingIndirectImportModules,
        IssueKind::DirectImportInconsistentWithInstalled,
        IssueKind::OtherImportRuntimeError,
        IssueKind::MissingSourceCode,
        IssueKind::ParsingError,
        IssueKind::MultipleVersionControlFailure,
    ];

    pub fn category(self) -> IssueCategory {
        use IssueKind::*;
        match self {
            MissingConfigFiles | MissingSetupRequires | MissingPythonVersion
            | MissingDirectImportDeps => IssueCategory::IncompleteConfiguration,
            SetupDependencyConflict
            | IncorrectPythonVersion
            | OtherSetupRuntimeError
            | MetadataInconsistency
            | VersionDateInconsistency
            | MissingIndirectImportModules
            | DirectImportInconsistentWithInstalled
            | OtherImportRuntimeError => IssueCategory::IncorrectConfiguration,
            MissingSourceCode | ParsingError | MultipleVersionControlFailure => {
                IssueCategory::IncorrectCode
            }
        }
    }

    pub fn check(self) -> CheckKind {
        use IssueKind::*;
        match self {
            MissingConfigFiles
            | MissingSetupRequires
            | SetupDependencyConflict
            | IncorrectPythonVersion
            | OtherSetupRuntimeError => CheckKind::Installation,
            MissingPythonVersion
            | MetadataInconsistency
            | VersionDateInconsistency
            | MissingSourceCode
            | ParsingError => CheckKind::Dependency,
            MissingDirectImportDeps
            | MissingIndirectImportModules
            | DirectImportInconsistentWithInstalled
            | OtherImportRuntimeError
            | MultipleVersionControlFailure => CheckKind::ImportValidation,
        }
    }

    pub fn fatal(self) -> bool {
        use IssueKind::*;
        matches!(
            self,
            MissingConfigFiles
                | MissingSetupRequires
                | SetupDependencyConflict
                | IncorrectPythonVersion
                | OtherSetupRuntimeError
                | MissingSourceCode
                | ParsingError
        )
    }

    pub fn label(self) -> &'static str {
        use IssueKind::*;
        match self {
            MissingConfigFiles => "Missing configuration files",
            MissingSetupRequires => "Missing required libraries for setup",
            MissingPythonVersion => "Missing Python versions",
            MissingDirectImportDeps => "Missing required libraries for direct imports",
            SetupDependencyConflict => "Dependency conflicts in setup",
            IncorrectPythonVersion => "Incorrect Python versions",
            OtherSetupRuntimeError => "Other run-time errors in setup",
            MetadataInconsistency => "Inconsistent configurations with metadata",
            VersionDateInconsistency => "Inconsistent version numbers with release dates",
            MissingIndirectImportModules => "Missing required modules for indirect imports",
            DirectImportInconsistentWithInstalled => {
                "Inconsistent modules in direct imports with installed dependencies"
            }
            OtherImportRuntimeError => "Other run-time errors in imports",
            MissingSourceCode => "Missing source code",
            ParsingError => "Parsing error",
            MultipleVersionControlFailure => "Multiple version control failure",
        }
    }
}

impl fmt::Display for IssueKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// Where an issue was found: a source location or a package-level subject.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Location {
    File { path: String, line: Option<u32> },
    Package { name: String },
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Location::File { path, line: Some(l) } => write!(f, "{path}:{l}"),
            Location::File { path, line: None } => f.write_str(path),
            Location::Package { name } => f.write_str(name),
        }
    }
}

/// One detected issue. Category, check and fatality always agree with the
/// kind; construct through [`IssueRecord::new`].
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IssueRecord {
    pub kind: IssueKind,
    pub category: IssueCategory,
    pub fatal: bool,
    pub check: CheckKind,
    pub location: Location,
    pub evidence: String,
}

impl IssueRecord {
    pub fn new(kind: IssueKind, location: Location, evidence: impl Into<String>) -> Self {
        IssueRecord {
            kind,
            category: kind.category(),
            fatal: kind.fatal(),
            check: kind.check(),
            location,
            evidence: evidence.into(),
        }
    }

    pub fn at_file(kind: IssueKind, path: impl Into<String>, line: Option<u32>, evidence: impl Into<String>) -> Self {
        Self::new(
            kind,
            Location::File {
                path: path.into(),
                line,
            },
            evidence,
        )
    }

    pub fn at_package(kind: IssueKind, name: impl Into<String>, evidence: impl Into<String>) -> Self {
        Self::new(kind, Location::Package { name: name.into() }, evidence)
    }

    /// True when category, check and fatality match the kind's table row.
    pub fn is_consistent(&self) -> bool {
        self.category == self.kind.category()
            && self.check == self.kind.check()
            && self.fatal == self.kind.fatal()
    }
}
