use std::collections::{BTreeSet, VecDeque};
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand, ValueEnum};

use confscan::bench::{parse_bench_entries, parse_release_id, run_bench};
use confscan::checker::{
    check_project, check_release, discover_corpus, project_label, run_corpus, CheckOptions, SiblingCache,
};
use confscan::env::{check_env_consistency, scan_environment, ScanOptions};
use confscan::pep::NormalizedName;
use confscan::probe::ProbeClient;
use confscan::project::scan_project;
use confscan::report::{render_document, ReportDocument, TableFormat};
use confscan::snapshot::{
    parse_registry_payload, IndexSnapshot, InterpreterTable, PyVersion, RegistryClient, DEFAULT_REGISTRY_URL,
    DEFAULT_TTL_DAYS,
};

#[derive(Parser)]
#[command(name = "confscan", version, about = "Find configuration issues in Python package releases")]
struct Cli {
    /// Log progress to stderr (repeat for more detail).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build an index snapshot from registry metadata.
    Ingest(IngestArgs),
    /// Check one project, one corpus release, or a whole corpus.
    Check(CheckArgs),
    /// Read an installed site directory and check its consistency.
    ScanEnv(ScanEnvArgs),
    /// Compute the pass rate of a corpus, optionally with inferred
    /// configurations.
    Bench(BenchArgs),
    /// Render a JSON report as a taxonomy table.
    Report(ReportArgs),
}

#[derive(Args)]
#[group(id = "source", required = true, multiple = false)]
struct IngestSource {
    /// Package names to fetch from the registry.
    #[arg(long, num_args = 1.., value_name = "NAME")]
    from_registry: Option<Vec<String>>,
    /// Directory of recorded registry payloads, one `<name>.json` each.
    #[arg(long, value_name = "DIR")]
    from_dir: Option<PathBuf>,
}

#[derive(Args)]
struct IngestArgs {
    #[command(flatten)]
    source: IngestSource,
    /// Snapshot file to write.
    #[arg(long, short)]
    out: PathBuf,
    #[arg(long, value_name = "DIR")]
    cache_dir: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_TTL_DAYS)]
    ttl_days: i64,
    #[arg(long, default_value = DEFAULT_REGISTRY_URL)]
    registry_url: String,
    /// Also fetch everything the named packages require.
    #[arg(long)]
    recursive: bool,
    /// Snapshot date; later releases are dropped. Defaults to today.
    #[arg(long, value_name = "YYYY-MM-DD")]
    as_of: Option<NaiveDate>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Static,
    Live,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Text,
    Markdown,
}

impl From<FormatArg> for TableFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Text => TableFormat::Text,
            FormatArg::Markdown => TableFormat::Markdown,
        }
    }
}

#[derive(Args)]
struct CommonCheckArgs {
    /// Index snapshot written by `ingest`.
    #[arg(long, value_name = "FILE")]
    snapshot: PathBuf,
    /// Interpreter release dates; the embedded table is used otherwise.
    #[arg(long, value_name = "FILE")]
    python_table: Option<PathBuf>,
    /// Write the JSON report here.
    #[arg(long, value_name = "OUT")]
    json: Option<PathBuf>,
    /// Parallel releases (default: logical cores).
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long, value_enum, default_value = "text")]
    format: FormatArg,
}

#[derive(Args)]
struct CheckArgs {
    /// Project directory.
    #[arg(long, conflicts_with = "release")]
    project: Option<PathBuf>,
    /// Release to check, as NAME==VERSION; needs --corpus.
    #[arg(long, requires = "corpus")]
    release: Option<String>,
    /// Corpus of `<name>-<version>/` directories; checks all of them
    /// unless --release is given.
    #[arg(long, value_name = "DIR")]
    corpus: Option<PathBuf>,
    #[command(flatten)]
    common: CommonCheckArgs,
    #[arg(long, value_enum, default_value = "static")]
    mode: ModeArg,
    /// Installed site directory to validate against instead of a
    /// simulated install.
    #[arg(long, value_name = "DIR")]
    site_dir: Option<PathBuf>,
    /// Interpreter that runs the probe in live mode.
    #[arg(long, default_value = "python3")]
    interpreter: PathBuf,
    /// Probe script for live mode.
    #[arg(long, value_name = "FILE")]
    probe_script: Option<PathBuf>,
    /// Per-import probe timeout in seconds.
    #[arg(long, default_value_t = 30)]
    probe_timeout: u64,
}

#[derive(Args)]
struct ScanEnvArgs {
    #[arg(long, value_name = "DIR")]
    site_dir: PathBuf,
    /// Interpreter version when the path does not name one.
    #[arg(long)]
    python: Option<PyVersion>,
    /// Also list submodules.
    #[arg(long)]
    submodules: bool,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, value_name = "DIR")]
    corpus: PathBuf,
    /// JSON list of {release, inferred_deps, inferred_python?}.
    #[arg(long, value_name = "FILE")]
    inferred: Option<PathBuf>,
    #[command(flatten)]
    common: CommonCheckArgs,
}

#[derive(Args)]
struct ReportArgs {
    #[arg(long, value_name = "IN")]
    json: PathBuf,
    #[arg(long, value_enum, default_value = "text")]
    format: FormatArg,
}

/// Usage or I/O failure; exits with 2.
struct Fatal(String);

impl<E: std::fmt::Display> From<E> for Fatal {
    fn from(e: E) -> Self {
        Fatal(e.to_string())
    }
}

type CmdResult = Result<ExitCode, Fatal>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    let result = match cli.command {
        Command::Ingest(a) => ingest(a),
        Command::Check(a) => check(a),
        Command::ScanEnv(a) => scan_env(a),
        Command::Bench(a) => bench(a),
        Command::Report(a) => report(a),
    };
    match result {
        Ok(code) => code,
        Err(Fatal(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn verdict(all_validated: bool) -> ExitCode {
    if all_validated {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn ingest(a: IngestArgs) -> CmdResult {
    let as_of = a.as_of.unwrap_or_else(|| chrono::Utc::now().date_naive());
    let mut records = Vec::new();
    let mut warnings = Vec::new();
    if let Some(dir) = &a.source.from_dir {
        let mut files: Vec<PathBuf> = fs::read_dir(dir)
            .map_err(|e| format!("{}: {e}", dir.display()))?
            .flatten()
            .map(|e| e.path())
            .filter(|p| p.extension().is_some_and(|x| x == "json"))
            .collect();
        files.sort();
        for path in files {
            let stem = path.file_stem().unwrap_or_default().to_string_lossy();
            let name = NormalizedName::new(&stem)?;
            let text = fs::read_to_string(&path).map_err(|e| format!("{}: {e}", path.display()))?;
            let value: serde_json::Value =
                serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))?;
            records.extend(parse_registry_payload(&name, &value, &mut warnings)?);
        }
    }
    if let Some(names) = &a.source.from_registry {
        let mut client = RegistryClient::new(&a.registry_url);
        if let Some(cache) = &a.cache_dir {
            client = client.with_cache(cache, a.ttl_days);
        }
        let mut queue: VecDeque<NormalizedName> =
            names.iter().map(|n| NormalizedName::new(n)).collect::<Result<_, _>>()?;
        let mut seen: BTreeSet<NormalizedName> = queue.iter().cloned().collect();
        while let Some(name) = queue.pop_front() {
            log::info!("fetching {name}");
            let fetched = client.fetch_package(&name)?;
            if a.recursive {
                for dep in fetched.iter().flat_map(|r| &r.requires_dist) {
                    if seen.insert(dep.name.clone()) {
                        queue.push_back(dep.name.clone());
                    }
                }
            }
            records.extend(fetched);
        }
        warnings.extend(client.take_warnings());
    }
    let before = records.len();
    records.retain(|r| r.release_date <= as_of);
    if records.len() < before {
        log::info!("dropped {} releases dated after {as_of}", before - records.len());
    }
    for w in &warnings {
        log::warn!("{w}");
    }
    let snapshot = IndexSnapshot::from_records(as_of, records)?;
    snapshot
        .save(&a.out)
        .map_err(|e| format!("{}: {e}", a.out.display()))?;
    println!("wrote {} packages to {}", snapshot.len(), a.out.display());
    Ok(ExitCode::SUCCESS)
}

fn load_inputs(c: &CommonCheckArgs) -> Result<(IndexSnapshot, InterpreterTable), Fatal> {
    let snapshot = IndexSnapshot::load(&c.snapshot)?;
    for w in snapshot.warnings() {
        log::warn!("{w}");
    }
    let table = match &c.python_table {
        Some(path) => InterpreterTable::load(path)?,
        None => InterpreterTable::default(),
    };
    Ok((snapshot, table))
}

fn jobs(c: &CommonCheckArgs) -> usize {
    c.jobs
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

fn emit(doc: &ReportDocument, c: &CommonCheckArgs) -> Result<(), Fatal> {
    if let Some(out) = &c.json {
        write_file(out, &doc.to_json())?;
    }
    print!("{}", render_document(doc, c.format.into()));
    Ok(())
}

fn write_file(path: &Path, text: &str) -> Result<(), Fatal> {
    fs::write(path, text).map_err(|e| Fatal(format!("{}: {e}", path.display())))
}

fn check(a: CheckArgs) -> CmdResult {
    let (snapshot, table) = load_inputs(&a.common)?;
    let probe = match a.mode {
        ModeArg::Static => None,
        ModeArg::Live => {
            let script = a
                .probe_script
                .as_ref()
                .ok_or_else(|| Fatal("--mode live needs --probe-script".into()))?;
            Some(
                ProbeClient::new(&a.interpreter, vec![script.display().to_string()])
                    .with_timeout(Duration::from_secs(a.probe_timeout)),
            )
        }
    };
    let opts = CheckOptions {
        table,
        probe,
        site_dir: a.site_dir.clone(),
    };
    let siblings = SiblingCache::new();
    let reports = match (&a.project, &a.release, &a.corpus) {
        (Some(dir), _, _) => {
            let p = scan_project(dir)?;
            let label = project_label(&p);
            vec![check_project(p, &label, &snapshot, &opts, &siblings)]
        }
        (None, Some(release), Some(corpus)) => {
            let (name, version) = parse_release_id(release).map_err(Fatal)?;
            vec![check_release(&name, &version, corpus, &snapshot, &opts, &siblings)?]
        }
        (None, None, Some(corpus)) => {
            let entries = discover_corpus(corpus)?;
            run_corpus(&entries, &snapshot, &opts, jobs(&a.common))
        }
        _ => return Err(Fatal("one of --project, --release or --corpus is required".into())),
    };
    let doc = ReportDocument::new(reports);
    emit(&doc, &a.common)?;
    Ok(verdict(doc.all_validated()))
}

fn scan_env(a: ScanEnvArgs) -> CmdResult {
    let env = scan_environment(
        &a.site_dir,
        &ScanOptions {
            python: a.python,
            submodules: a.submodules,
        },
    )?;
    let issues = check_env_consistency(&env);
    let out = serde_json::json!({ "environment": env, "issues": issues });
    println!("{}", serde_json::to_string_pretty(&out)?);
    Ok(verdict(issues.is_empty()))
}

fn bench(a: BenchArgs) -> CmdResult {
    let (snapshot, table) = load_inputs(&a.common)?;
    let inferred = match &a.inferred {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
            Some(parse_bench_entries(&text)?)
        }
        None => None,
    };
    let opts = CheckOptions {
        table,
        ..CheckOptions::default()
    };
    let doc = run_bench(&a.corpus, inferred.as_deref(), &snapshot, &opts, jobs(&a.common))?;
    emit(&doc, &a.common)?;
    Ok(verdict(doc.all_validated()))
}

fn report(a: ReportArgs) -> CmdResult {
    let text = fs::read_to_string(&a.json).map_err(|e| format!("{}: {e}", a.json.display()))?;
    let doc = ReportDocument::from_json(&text)?;
    print!("{}", render_document(&doc, a.format.into()));
    Ok(verdict(doc.all_validated()))
}
