#![allow(dead_code)]

pub mod oracle;
pub mod programs;

use std::path::PathBuf;

use confscan::checker::{check_release, CheckOptions, CheckReport, SiblingCache};
use confscan::pep::{parse_version, NormalizedName};
use confscan::probe::ProbeClient;
use confscan::snapshot::IndexSnapshot;

pub fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

pub fn corpus() -> PathBuf {
    fixtures().join("corpus")
}

pub fn bench_corpus() -> PathBuf {
    fixtures().join("bench")
}

pub fn snapshot() -> IndexSnapshot {
    IndexSnapshot::load(&fixtures().join("snapshot.json")).expect("fixture snapshot loads")
}

/// A probe that answers every import with a TypeError.
pub fn typeerror_probe() -> ProbeClient {
    let script = fixtures().join("probes/typeerror.sh");
    ProbeClient::new("sh", vec![script.display().to_string()])
}

pub fn check(release: &str, opts: &CheckOptions) -> CheckReport {
    let (name, version) = release.split_once("==").unwrap();
    check_release(
        &NormalizedName::new(name).unwrap(),
        &parse_version(version).unwrap(),
        &corpus(),
        &snapshot(),
        opts,
        &SiblingCache::new(),
    )
    .unwrap()
}
