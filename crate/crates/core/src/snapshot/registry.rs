//! Online ingestion from a registry's per-package JSON metadata endpoint
//! (`{base}/{name}/json`), with a file cache keyed by package and fetch
//! date.
//!
//! Only the latest release's `info` block carries `requires_dist` and
//! classifiers in that payload, so older releases come back with empty
//! dependency lists. Release dates are the earliest upload time among a
//! version's files; versions without files are skipped.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use super::{dependency_from_line, RecordFile, ReleaseRecord};
use crate::pep::{parse_specifier_set, parse_version, NormalizedName};

#[derive(Debug, Error)]
pub enum RegistryError {
    #[error("network error fetching {name}: {message}")]
    Network { name: String, message: String },
    #[error("package {0} not found in registry")]
    NotFound(NormalizedName),
    #[error("registry payload schema error for {name}: {message}")]
    Schema { name: String, message: String },
    #[error("cache error: {0}")]
    Cache(#[from] std::io::Error),
}

#[derive(Debug, Serialize, Deserialize)]
struct CacheEntry {
    name: String,
    fetched: String,
    releases: Vec<RecordFile>,
}

/// Blocking registry client. Safe to share across threads; cache writes
/// for one package are serialized, distinct packages proceed in parallel.
pub struct RegistryClient {
    base_url: String,
    cache_dir: Option<PathBuf>,
    ttl_days: i64,
    today: NaiveDate,
    agent: ureq::Agent,
    network_calls: AtomicUsize,
    locks: Mutex<HashMap<NormalizedName, Arc<Mutex<()>>>>,
    warnings: Mutex<Vec<String>>,
}

pub const DEFAULT_REGISTRY_URL: &str = "https://pypi.org/pypi";
pub const DEFAULT_TTL_DAYS: i64 = 7;

impl RegistryClient {
    pub fn new(base_url: impl Into<String>) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(60)))
            .build()
            .into();
        RegistryClient {
            base_url: base_url.into().trim_end_matches('/').to_string(),
            cache_dir: None,
            ttl_days: DEFAULT_TTL_DAYS,
            today: chrono::Utc::now().date_naive(),
            agent,
            network_calls: AtomicUsize::new(0),
            locks: Mutex::new(HashMap::new()),
            warnings: Mutex::new(Vec::new()),
        }
    }

    pub fn with_cache(mut self, dir: impl Into<PathBuf>, ttl_days: i64) -> Self {
        self.cache_dir = Some(dir.into());
        self.ttl_days = ttl_days;
        self
    }

    /// Overrides the date used for cache freshness and new cache entries.
    pub fn with_today(mut self, today: NaiveDate) -> Self {
        self.today = today;
        self
    }

    pub fn network_calls(&self) -> usize {
        self.network_calls.load(Ordering::SeqCst)
    }

    pub fn take_warnings(&self) -> Vec<String> {
        std::mem::take(&mut *self.warnings.lock().unwrap())
    }

    fn lock_for(&self, name: &NormalizedName) -> Arc<Mutex<()>> {
        self.locks
            .lock()
            .unwrap()
            .entry(name.clone())
            .or_default()
            .clone()
    }

    fn cache_path(&self, name: &NormalizedName) -> Option<PathBuf> {
        self.cache_dir
            .as_ref()
            .map(|d| d.join(format!("{name}.json")))
    }

    fn read_cache(&self, path: &Path, name: &NormalizedName) -> Option<Vec<ReleaseRecord>> {
        let text = fs::read_to_string(path).ok()?;
        let entry: CacheEntry = serde_json::from_str(&text).ok()?;
        let fetched = NaiveDate::parse_from_str(&entry.fetched, "%Y-%m-%d").ok()?;
        let age = (self.today - fetched).num_days();
        if age < 0 || age >= self.ttl_days {
            return None;
        }
        let mut warnings = Vec::new();
        let mut out = Vec::new();
        for rf in entry.releases {
            out.push(rf.into_record(name, &mut warnings).ok()??);
        }
        Some(out)
    }

    fn write_cache(&self, path: &Path, name: &NormalizedName, records: &[ReleaseRecord]) -> std::io::Result<()> {
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        let entry = CacheEntry {
            name: name.to_string(),
            fetched: self.today.format("%Y-%m-%d").to_string(),
            releases: records.iter().map(RecordFile::from_record).collect(),
        };
        let tmp = path.with_extension("json.tmp");
        fs::write(&tmp, serde_json::to_string_pretty(&entry).expect("cache entry serializes"))?;
        fs::rename(tmp, path)
    }

    pub fn fetch_package(&self, name: &NormalizedName) -> Result<Vec<ReleaseRecord>, RegistryError> {
        let lock = self.lock_for(name);
        let _guard = lock.lock().unwrap();
        let cache_path = self.cache_path(name);
        if let Some(path) = &cache_path {
            if let Some(records) = self.read_cache(path, name) {
                log::debug!("{name}: served from cache");
                return Ok(records);
            }
        }

        let url = format!("{}/{}/json", self.base_url, name);
        self.network_calls.fetch_add(1, Ordering::SeqCst);
        let body = match self.agent.get(&url).call() {
            Ok(mut resp) => resp.body_mut().read_to_string().map_err(|e| RegistryError::Network {
                name: name.to_string(),
                message: e.to_string(),
            })?,
            Err(ureq::Error::StatusCode(404)) => return Err(RegistryError::NotFound(name.clone())),
            Err(e) => {
                return Err(RegistryError::Network {
                    name: name.to_string(),
                    message: e.to_string(),
                })
            }
        };
        let payload: Value = serde_json::from_str(&body).map_err(|e| RegistryError::Schema {
            name: name.to_string(),
            message: e.to_string(),
        })?;
        let mut warnings = Vec::new();
        let records = parse_registry_payload(name, &payload, &mut warnings)?;
        self.warnings.lock().unwrap().extend(warnings);
        if let Some(path) = &cache_path {
            self.write_cache(path, name, &records)?;
        }
        Ok(records)
    }
}

fn schema_err(name: &NormalizedName, message: impl Into<String>) -> RegistryError {
    RegistryError::Schema {
        name: name.to_string(),
        message: message.into(),
    }
}

fn upload_date(file: &Value) -> Option<NaiveDate> {
    let stamp = file
        .get("upload_time_iso_8601")
        .or_else(|| file.get("upload_time"))?
        .as_str()?;
    NaiveDate::parse_from_str(stamp.get(..10)?, "%Y-%m-%d").ok()
}

/// Converts a registry JSON payload into release records, ascending by
/// version.
pub fn parse_registry_payload(
    name: &NormalizedName,
    payload: &Value,
    warnings: &mut Vec<String>,
) -> Result<Vec<ReleaseRecord>, RegistryError> {
    let info = payload
        .get("info")
        .and_then(Value::as_object)
        .ok_or_else(|| schema_err(name, "missing `info` object"))?;
    let releases = payload
        .get("releases")
        .and_then(Value::as_object)
        .ok_or_else(|| schema_err(name, "missing `releases` object"))?;
    let latest = info.get("version").and_then(Value::as_str).unwrap_or("");

    let mut by_version = BTreeMap::new();
    for (raw_version, files) in releases {
        let Ok(version) = parse_version(raw_version) else {
            warnings.push(format!("{name}: skipping unparseable version `{raw_version}`"));
            continue;
        };
        let files = files
            .as_array()
            .ok_or_else(|| schema_err(name, format!("files of {raw_version} are not a list")))?;
        let Some(release_date) = files.iter().filter_map(upload_date).min() else {
            warnings.push(format!("{name} {raw_version}: no uploaded files, skipped"));
            continue;
        };
        let mut rec = ReleaseRecord::new(name.clone(), version.clone(), release_date);
        rec.has_source = files
            .iter()
            .any(|f| f.get("packagetype").and_then(Value::as_str) == Some("sdist"));
        rec.requires_python = files
            .iter()
            .filter_map(|f| f.get("requires_python").and_then(Value::as_str))
            .find(|s| !s.trim().is_empty())
            .and_then(|s| parse_specifier_set(s).ok());

        if raw_version == latest {
            if rec.requires_python.is_none() {
                rec.requires_python = info
                    .get("requires_python")
                    .and_then(Value::as_str)
                    .filter(|s| !s.trim().is_empty())
                    .and_then(|s| parse_specifier_set(s).ok());
            }
            rec.classifiers = info
                .get("classifiers")
                .and_then(Value::as_array)
                .map(|a| a.iter().filter_map(Value::as_str).map(String::from).collect())
                .unwrap_or_default();
            for line in info
                .get("requires_dist")
                .and_then(Value::as_array)
                .into_iter()
                .flatten()
                .filter_map(Value::as_str)
            {
                match dependency_from_line(line) {
                    Ok(dep) => rec.requires_dist.push(dep),
                    Err(e) => warnings.push(format!("{name} {raw_version}: {e}")),
                }
            }
        }
        if by_version.insert(version.clone(), rec).is_some() {
            warnings.push(format!("{name}: duplicate spelling of version {version} ignored"));
        }
    }
    if by_version.len() > 1 {
        warnings.push(format!(
            "{name}: dependency metadata only known for the latest release {latest}"
        ));
    }
    Ok(by_version.into_values().collect())
}
