//! Source discovery, decoding and parsing.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rustpython_parser::{ast, parse, Mode};
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FailureReason {
    Syntax,
    Encoding,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseFailure {
    pub reason: FailureReason,
    pub message: String,
    pub line: Option<u32>,
}

/// A successfully parsed module.
#[derive(Debug)]
pub struct ParsedModule {
    pub body: Vec<ast::Stmt>,
    line_starts: Vec<usize>,
    /// Parsing only succeeded after rewriting legacy (Python 2) forms.
    pub legacy: bool,
}

impl ParsedModule {
    /// 1-based line of a byte offset into the parsed text.
    pub fn line_of(&self, offset: usize) -> u32 {
        let idx = match self.line_starts.binary_search(&offset) {
            Ok(i) => i,
            Err(i) => i - 1,
        };
        idx as u32 + 1
    }
}

#[derive(Debug, Clone)]
pub enum ParseOutcome {
    Pending,
    Parsed(Arc<ParsedModule>),
    Failed(ParseFailure),
}

#[derive(Debug, Clone)]
pub struct SourceFile {
    /// Path relative to the project root, `/`-separated.
    pub path: PathBuf,
    pub parse: ParseOutcome,
    pub local_modules: BTreeSet<String>,
}

impl SourceFile {
    pub fn display_path(&self) -> String {
        self.path
            .components()
            .map(|c| c.as_os_str().to_string_lossy())
            .collect::<Vec<_>>()
            .join("/")
    }

    pub fn module(&self) -> Option<&ParsedModule> {
        match &self.parse {
            ParseOutcome::Parsed(m) => Some(m),
            _ => None,
        }
    }
}

fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_alphabetic() || c == '_')
        && chars.all(|c| c.is_alphanumeric() || c == '_')
}

/// Module names importable from `dir` without a package prefix: `*.py`
/// stems, sub-packages (directories with `__init__.py`) and binary
/// extension modules (`*.so`, `*.pyd`, named up to the first dot).
pub fn local_modules_for(dir: &Path) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    let Ok(entries) = fs::read_dir(dir) else {
        return out;
    };
    for entry in entries.flatten() {
        let name = entry.file_name().to_string_lossy().into_owned();
        let Ok(meta) = entry.metadata() else { continue };
        if meta.is_dir() {
            if entry.path().join("__init__.py").is_file() && is_identifier(&name) {
                out.insert(name);
            }
        } else if let Some(stem) = name.strip_suffix(".py") {
            if is_identifier(stem) {
                out.insert(stem.to_string());
            }
        } else if name.ends_with(".so") || name.ends_with(".pyd") {
            let stem = name.split('.').next().unwrap_or_default();
            if is_identifier(stem) {
                out.insert(stem.to_string());
            }
        }
    }
    out
}

/// Collects `*.py` files under `dir` recursively, sorted. Symlinks are
/// not followed.
pub fn collect_py_files(dir: &Path, out: &mut Vec<PathBuf>) {
    let Ok(entries) = fs::read_dir(dir) else { return };
    let mut entries: Vec<_> = entries.flatten().collect();
    entries.sort_by_key(|e| e.file_name());
    for entry in entries {
        let path = entry.path();
        let Ok(meta) = fs::symlink_metadata(&path) else { continue };
        let name = entry.file_name().to_string_lossy().into_owned();
        if meta.file_type().is_symlink() {
            continue;
        }
        if meta.is_dir() {
            if name == "__pycache__" || name.starts_with('.') {
                continue;
            }
            collect_py_files(&path, out);
        } else if name.ends_with(".py") {
            out.push(path);
        }
    }
}

fn coding_cookie(bytes: &[u8]) -> Option<String> {
    for line in bytes.split(|&b| b == b'\n').take(2) {
        let line = String::from_utf8_lossy(line);
        let trimmed = line.trim_start();
        if !trimmed.starts_with('#') {
            continue;
        }
        if let Some(pos) = trimmed.find("coding") {
            let rest = &trimmed[pos + "coding".len()..];
            if let Some(rest) = rest.strip_prefix([':', '=']) {
                let name: String = rest
                    .trim_start()
                    .chars()
                    .take_while(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'))
                    .collect();
                if !name.is_empty() {
                    return Some(name.to_ascii_lowercase().replace('_', "-"));
                }
            }
        }
    }
    None
}

// cp1252 0x80..=0x9F; `None` marks bytes the codec leaves undefined.
const CP1252_HIGH: [Option<char>; 32] = [
    Some('\u{20AC}'), None, Some('\u{201A}'), Some('\u{0192}'), Some('\u{201E}'), Some('\u{2026}'),
    Some('\u{2020}'), Some('\u{2021}'), Some('\u{02C6}'), Some('\u{2030}'), Some('\u{0160}'),
    Some('\u{2039}'), Some('\u{0152}'), None, Some('\u{017D}'), None, None, Some('\u{2018}'),
    Some('\u{2019}'), Some('\u{201C}'), Some('\u{201D}'), Some('\u{2022}'), Some('\u{2013}'),
    Some('\u{2014}'), Some('\u{02DC}'), Some('\u{2122}'), Some('\u{0161}'), Some('\u{203A}'),
    Some('\u{0153}'), None, Some('\u{017E}'), Some('\u{0178}'),
];

/// Decodes source bytes honouring a coding cookie on the first two lines.
/// Without a cookie the source must be UTF-8.
pub fn decode_source(bytes: &[u8]) -> Result<String, ParseFailure> {
    let fail = |message: String, line: Option<u32>| ParseFailure {
        reason: FailureReason::Encoding,
        message,
        line,
    };
    let bytes = bytes.strip_prefix(b"\xEF\xBB\xBF").unwrap_or(bytes);
    let line_of = |pos: usize| Some(bytes[..pos].iter().filter(|&&b| b == b'\n').count() as u32 + 1);
    let encoding = coding_cookie(bytes).unwrap_or_else(|| "utf-8".into());
    match encoding.as_str() {
        "utf-8" | "utf8" => std::str::from_utf8(bytes).map(String::from).map_err(|e| {
            fail(
                format!("invalid utf-8 byte at offset {}", e.valid_up_to()),
                line_of(e.valid_up_to()),
            )
        }),
        "ascii" | "us-ascii" => match bytes.iter().position(|b| !b.is_ascii()) {
            Some(pos) => Err(fail(format!("non-ascii byte at offset {pos}"), line_of(pos))),
            None => Ok(String::from_utf8_lossy(bytes).into_owned()),
        },
        "latin-1" | "latin1" | "iso-8859-1" | "iso8859-1" | "l1" | "cp819" => {
            Ok(bytes.iter().map(|&b| b as char).collect())
        }
        "cp1252" | "windows-1252" => {
            let mut out = String::with_capacity(bytes.len());
            for (pos, &b) in bytes.iter().enumerate() {
                match b {
                    0x80..=0x9F => match CP1252_HIGH[(b - 0x80) as usize] {
                        Some(c) => out.push(c),
                        None => {
                            return Err(fail(format!("undefined cp1252 byte at offset {pos}"), line_of(pos)))
                        }
                    },
                    _ => out.push(b as char),
                }
            }
            Ok(out)
        }
        other => Err(fail(format!("unknown encoding `{other}`"), Some(1))),
    }
}

fn line_starts(text: &str) -> Vec<usize> {
    std::iter::once(0)
        .chain(text.match_indices('\n').map(|(i, _)| i + 1))
        .collect()
}

fn try_parse(text: &str, path: &str) -> Result<Vec<ast::Stmt>, (String, usize)> {
    match parse(text, Mode::Module, path) {
        Ok(ast::Mod::Module(m)) => Ok(m.body),
        Ok(_) => Err(("unexpected parse mode".into(), 0)),
        Err(e) => Err((e.error.to_string(), e.offset.to_usize())),
    }
}

/// Parses source bytes: modern grammar first, then once more after the
/// legacy rewrite if that changes anything.
pub fn parse_source(bytes: &[u8], path: &str) -> Result<ParsedModule, ParseFailure> {
    let text = decode_source(bytes)?;
    match try_parse(&text, path) {
        Ok(body) => Ok(ParsedModule {
            body,
            line_starts: line_starts(&text),
            legacy: false,
        }),
        Err((message, offset)) => {
            let rewritten = super::legacy::rewrite_legacy(&text);
            if rewritten != text {
                if let Ok(body) = try_parse(&rewritten, path) {
                    return Ok(ParsedModule {
                        body,
                        line_starts: line_starts(&rewritten),
                        legacy: true,
                    });
                }
            }
            let starts = line_starts(&text);
            let line = match starts.binary_search(&offset) {
                Ok(i) => i + 1,
                Err(i) => i,
            };
            Err(ParseFailure {
                reason: FailureReason::Syntax,
                message,
                line: Some(line as u32),
            })
        }
    }
}
