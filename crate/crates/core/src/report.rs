//! Report documents: JSON serialization, pass rate, and the taxonomy table
//! rendered as text or markdown.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};
use serde_json::value::RawValue;
use thiserror::Error;

use crate::checker::CheckReport;
use crate::issue::IssueKind;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("malformed report: {0}")]
    Json(#[from] serde_json::Error),
    #[error("report schema version {0} is newer than supported version {SCHEMA_VERSION}")]
    UnsupportedSchema(u64),
    #[error("report has no schema_version")]
    MissingSchema,
    #[error("pass rate needs at least one release")]
    EmptyCorpus,
}

/// Validated releases over all releases, kept as the exact ratio.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PassRate {
    pub validated: usize,
    pub total: usize,
}

impl PassRate {
    pub fn new(validated: usize, total: usize) -> Result<Self, ReportError> {
        if total == 0 {
            return Err(ReportError::EmptyCorpus);
        }
        assert!(validated <= total);
        Ok(PassRate { validated, total })
    }

    pub fn as_f64(self) -> f64 {
        self.validated as f64 / self.total as f64
    }

    /// Rounded half-up to thousandths.
    pub fn thousandths(self) -> u64 {
        let (v, t) = (self.validated as u64, self.total as u64);
        (2000 * v + t) / (2 * t)
    }
}

impl fmt::Display for PassRate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let m = self.thousandths();
        write!(f, "{}.{:03}", m / 1000, m % 1000)
    }
}

pub fn compute_pass_rate(reports: &[CheckReport]) -> Result<PassRate, ReportError> {
    PassRate::new(reports.iter().filter(|r| r.validated).count(), reports.len())
}

/// Releases affected by each kind, every kind present.
pub fn issue_histogram(reports: &[CheckReport]) -> BTreeMap<IssueKind, usize> {
    IssueKind::ALL
        .iter()
        .map(|&k| (k, reports.iter().filter(|r| r.has_kind(k)).count()))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "BenchWire", into = "BenchWire")]
pub struct BenchSummary {
    pub pass_rate: PassRate,
    pub histogram: BTreeMap<IssueKind, usize>,
}

impl BenchSummary {
    pub fn of(reports: &[CheckReport]) -> Result<Self, ReportError> {
        Ok(BenchSummary {
            pass_rate: compute_pass_rate(reports)?,
            histogram: issue_histogram(reports),
        })
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BenchWire {
    entries: usize,
    validated: usize,
    pass_rate: Box<RawValue>,
    histogram: BTreeMap<IssueKind, usize>,
}

impl From<BenchSummary> for BenchWire {
    fn from(s: BenchSummary) -> Self {
        BenchWire {
            entries: s.pass_rate.total,
            validated: s.pass_rate.validated,
            pass_rate: RawValue::from_string(s.pass_rate.to_string()).expect("decimal is valid JSON"),
            histogram: s.histogram,
        }
    }
}

impl TryFrom<BenchWire> for BenchSummary {
    type Error = String;

    fn try_from(w: BenchWire) -> Result<Self, String> {
        if w.validated > w.entries {
            return Err(format!("{} validated out of {} entries", w.validated, w.entries));
        }
        let rate = PassRate::new(w.validated, w.entries).map_err(|e| e.to_string())?;
        if w.pass_rate.get() != rate.to_string() {
            return Err(format!("pass_rate {} disagrees with {}/{}", w.pass_rate.get(), w.validated, w.entries));
        }
        Ok(BenchSummary {
            pass_rate: rate,
            histogram: w.histogram,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportDocument {
    pub schema_version: u32,
    pub reports: Vec<CheckReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bench: Option<BenchSummary>,
}

impl ReportDocument {
    pub fn new(reports: Vec<CheckReport>) -> Self {
        ReportDocument {
            schema_version: SCHEMA_VERSION,
            reports,
            bench: None,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, ReportError> {
        let value: serde_json::Value = serde_json::from_str(text)?;
        let version = value
            .get("schema_version")
            .and_then(serde_json::Value::as_u64)
            .ok_or(ReportError::MissingSchema)?;
        if version > SCHEMA_VERSION as u64 {
            return Err(ReportError::UnsupportedSchema(version));
        }
        Ok(serde_json::from_str(text)?)
    }

    pub fn all_validated(&self) -> bool {
        self.reports.iter().all(|r| r.validated)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableFormat {
    Text,
    Markdown,
}

/// One row per issue kind: category, check, fatal flag and the number of
/// releases carrying it.
pub fn render_taxonomy_table(reports: &[CheckReport], format: TableFormat) -> String {
    let counts = issue_histogram(reports);
    let header = ["Category", "Issue", "Kind", "Check", "Fatal", "Releases"];
    let rows: Vec<[String; 6]> = IssueKind::ALL
        .iter()
        .map(|&k| {
            [
                k.category().label().to_string(),
                k.label().to_string(),
                k.to_string(),
                k.check().label().to_string(),
                if k.fatal() { "yes" } else { "no" }.to_string(),
                counts[&k].to_string(),
            ]
        })
        .collect();

    let mut out = String::new();
    match format {
        TableFormat::Markdown => {
            let _ = writeln!(out, "| {} |", header.join(" | "));
            let _ = writeln!(out, "|{}", "---|".repeat(header.len()));
            for row in &rows {
                let _ = writeln!(out, "| {} |", row.join(" | "));
            }
        }
        TableFormat::Text => {
            let mut widths = header.map(str::len);
            for row in &rows {
                for (w, cell) in widths.iter_mut().zip(row) {
                    *w = (*w).max(cell.chars().count());
                }
            }
            let line = |cells: &[&str]| {
                let padded: Vec<String> = cells
                    .iter()
                    .zip(widths)
                    .map(|(c, w)| format!("{c:<w$}"))
                    .collect();
                padded.join("  ").trim_end().to_string()
            };
            let _ = writeln!(out, "{}", line(&header));
            for row in &rows {
                let cells: Vec<&str> = row.iter().map(String::as_str).collect();
                let _ = writeln!(out, "{}", line(&cells));
            }
        }
    }
    out
}

/// Per-release summary lines followed by the taxonomy table.
pub fn render_document(doc: &ReportDocument, format: TableFormat) -> String {
    let mut out = String::new();
    for r in &doc.reports {
        let verdict = if r.validated { "validated" } else { "issues" };
        let py = r.chosen_python.map(|p| p.to_string()).unwrap_or_else(|| "-".into());
        match format {
            TableFormat::Markdown => {
                let _ = writeln!(out, "- `{}`: {verdict}, {}, python {py}, {} mode", r.release, r.final_status, r.mode);
            }
            TableFormat::Text => {
                let _ = writeln!(out, "{}  {verdict}  {}  python {py}  {} mode", r.release, r.final_status, r.mode);
            }
        }
        for i in &r.issues {
            let _ = writeln!(out, "    {} at {}: {}", i.kind, i.location, i.evidence);
        }
    }
    if !doc.reports.is_empty() {
        out.push('\n');
    }
    out.push_str(&render_taxonomy_table(&doc.reports, format));
    if let Some(b) = &doc.bench {
        let _ = writeln!(
            out,
            "\npass rate: {} ({} of {} validated)",
            b.pass_rate, b.pass_rate.validated, b.pass_rate.total
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rounding() {
        let cases = [(13, 20, "0.650"), (0, 7, "0.000"), (7, 7, "1.000"), (1, 3, "0.333"), (2, 3, "0.667"), (1, 8, "0.125"), (1, 16, "0.063")];
        for (v, t, want) in cases {
            assert_eq!(PassRate::new(v, t).unwrap().to_string(), want, "{v}/{t}");
        }
        assert!(matches!(PassRate::new(0, 0), Err(ReportError::EmptyCorpus)));
    }

    #[test]
    fn bench_summary_wire() {
        let s = BenchSummary {
            pass_rate: PassRate::new(13, 20).unwrap(),
            histogram: [(IssueKind::ParsingError, 2)].into(),
        };
        let json = serde_json::to_string(&s).unwrap();
        assert_eq!(json, r#"{"entries":20,"validated":13,"pass_rate":0.650,"histogram":{"ParsingError":2}}"#);
        let back: BenchSummary = serde_json::from_str(&json).unwrap();
        assert_eq!(back, s);
        assert!(serde_json::from_str::<BenchSummary>(&json.replace("0.650", "0.7")).is_err());
    }

    #[test]
    fn schema_gate() {
        let doc = ReportDocument::new(Vec::new());
        let json = doc.to_json();
        assert_eq!(ReportDocument::from_json(&json).unwrap(), doc);
        let newer = json.replace("\"schema_version\": 1", "\"schema_version\": 2");
        assert!(matches!(ReportDocument::from_json(&newer), Err(ReportError::UnsupportedSchema(2))));
    }

    #[test]
    fn empty_table_counts_zero() {
        let text = render_taxonomy_table(&[], TableFormat::Markdown);
        assert_eq!(text.lines().count(), 17);
        assert!(text.lines().skip(2).all(|l| l.ends_with("| 0 |")));
    }
}
