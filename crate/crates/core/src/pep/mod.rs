//! Python packaging primitives: distribution names, versions, version
//! specifiers, environment markers and requirement lines.
//!
//! Epochs (`1!2.0`) and local version labels (`1.0+abc`) are outside the
//! supported grammar and fail with [`PepError::InvalidVersion`].

mod marker;
mod name;
mod requirement;
mod specifier;
mod version;

use thiserror::Error;

pub use marker::{evaluate_marker, Marker, MarkerOutcome};
pub use name::{normalize_name, NormalizedName};
pub use requirement::{parse_requirement, DependencyDecl, Requirement};
pub use specifier::{matches, parse_specifier_set, Operator, Specifier, SpecifierSet};
pub use version::{compare_versions, parse_version, PreKind, Version};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PepError {
    #[error("invalid distribution name `{0}`")]
    InvalidName(String),
    #[error("invalid version `{0}`")]
    InvalidVersion(String),
    #[error("invalid version specifier `{0}`")]
    InvalidSpecifier(String),
    #[error("invalid environment marker `{0}`")]
    InvalidMarker(String),
    #[error("invalid requirement `{0}`")]
    InvalidRequirement(String),
    #[error("unsupported requirement form `{0}`")]
    UnsupportedRequirement(String),
}
