#[macro_use]
mod visit;

pub mod bench;
pub mod checker;
pub mod env;
pub mod imports;
pub mod issue;
pub mod pep;
pub mod probe;
pub mod project;
pub mod report;
pub mod snapshot;
