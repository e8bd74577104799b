//! Explanation tables and per-explanation diagnostics: label proportions
//! inside the subset and how feature importances move once it is removed.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{evaluate_predicate, Dataset, DatasetError, SubsetSelection};
use crate::forest::{DareForest, ForestError, ForestParams};
use crate::lattice::Explanation;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("unknown output format `{0}` (expected csv, json or markdown)")]
    UnknownFormat(String),
    #[error("malformed table: {0}")]
    Malformed(String),
    #[error(transparent)]
    Forest(#[from] ForestError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
    #[default]
    Markdown,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
            Format::Markdown => "md",
        }
    }
}

impl FromStr for Format {
    type Err = ReportError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            "markdown" | "md" => Ok(Format::Markdown),
            _ => Err(ReportError::UnknownFormat(s.to_string())),
        }
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Format::Csv => "csv",
            Format::Json => "json",
            Format::Markdown => "markdown",
        })
    }
}

/// Positive-label rate of one group inside a subset. `rate` is `None` when
/// the group has no rows there.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupProportion {
    pub rows: usize,
    pub positives: usize,
    pub rate: Option<f64>,
}

impl GroupProportion {
    fn new(rows: usize, positives: usize) -> Self {
        Self {
            rows,
            positives,
            rate: (rows > 0).then(|| positives as f64 / rows as f64),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabelProportions {
    pub protected: GroupProportion,
    pub privileged: GroupProportion,
}

pub fn label_proportions(train: &Dataset, sel: &SubsetSelection) -> LabelProportions {
    let mut rows = [0usize; 2];
    let mut pos = [0usize; 2];
    for (r, id) in train.row_ids().iter().enumerate() {
        if sel.member_ids.binary_search(id).is_ok() {
            let g = train.sensitive()[r] as usize;
            rows[g] += 1;
            pos[g] += train.labels()[r] as usize;
        }
    }
    LabelProportions {
        protected: GroupProportion::new(rows[0], pos[0]),
        privileged: GroupProportion::new(rows[1], pos[1]),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "percent", rename_all = "snake_case")]
pub enum Deviation {
    Percent(f64),
    /// Unused before, used after.
    New,
    /// Unused before and after.
    Unused,
}

impl Deviation {
    pub fn of(before: f64, after: f64) -> Self {
        if before > 0.0 {
            Deviation::Percent(100.0 * (after - before) / before)
        } else if after > 0.0 {
            Deviation::New
        } else {
            Deviation::Unused
        }
    }
}

impl fmt::Display for Deviation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Deviation::Percent(p) => write!(f, "{}%", signed_pct(*p)),
            Deviation::New => f.write_str("new"),
            Deviation::Unused => f.write_str("unused"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceDeviation {
    pub attribute: String,
    pub before: f64,
    pub after: f64,
    pub deviation: Deviation,
}

impl fmt::Display for ImportanceDeviation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.attribute, self.deviation)
    }
}

/// Importances before and after removing `sel`, by unlearning on a private
/// copy of `forest` or, with `retrain`, by fitting anew with `params`.
pub fn importance_deviation(
    forest: &DareForest,
    train: &Dataset,
    sel: &SubsetSelection,
    params: &ForestParams,
    retrain: bool,
) -> Result<Vec<ImportanceDeviation>, ReportError> {
    let before = forest.feature_importances();
    let after = if retrain {
        DareForest::fit(&train.without_rows(&sel.member_ids)?, params)?.feature_importances()
    } else {
        let mut copy = forest.snapshot().restore();
        copy.delete(&sel.member_ids)?;
        copy.feature_importances()
    };
    Ok(before
        .into_iter()
        .map(|(attribute, b)| {
            let a = after.get(&attribute).copied().unwrap_or(0.0);
            ImportanceDeviation {
                attribute,
                before: b,
                after: a,
                deviation: Deviation::of(b, a),
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplanationDiagnostics {
    pub rank: usize,
    pub pattern: String,
    pub label_proportions: LabelProportions,
    pub importances: Vec<ImportanceDeviation>,
    pub flags: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticReport {
    pub sensitive_attribute: String,
    pub explanations: Vec<ExplanationDiagnostics>,
}

pub fn diagnose(
    explanations: &[Explanation],
    forest: &DareForest,
    train: &Dataset,
    params: &ForestParams,
    retrain: bool,
) -> Result<DiagnosticReport, ReportError> {
    let sensitive = train.schema().sensitive_attribute.clone();
    let rows = explanations
        .par_iter()
        .map(|e| {
            let sel = evaluate_predicate(&e.predicate, train)?;
            let props = label_proportions(train, &sel);
            let importances = importance_deviation(forest, train, &sel, params, retrain)?;
            let mut flags = Vec::new();
            if let (Some(p), Some(q)) = (props.protected.rate, props.privileged.rate) {
                if p < q {
                    flags.push("protected group has a lower positive rate inside the subset".to_string());
                }
            }
            if let Some(s) = importances.iter().find(|d| d.attribute == sensitive) {
                if s.after < s.before {
                    flags.push("sensitive-attribute importance dropped".to_string());
                } else if s.after > s.before {
                    flags.push("sensitive-attribute importance rose".to_string());
                }
            }
            Ok(ExplanationDiagnostics {
                rank: e.rank,
                pattern: e.predicate.to_string(),
                label_proportions: props,
                importances,
                flags,
            })
        })
        .collect::<Result<Vec<_>, ReportError>>()?;
    Ok(DiagnosticReport {
        sensitive_attribute: sensitive,
        explanations: rows,
    })
}

/// Two decimals, never `-0.00`.
pub fn signed_pct(v: f64) -> String {
    let s = format!("{v:.2}");
    if s == "-0.00" {
        "0.00".to_string()
    } else {
        s
    }
}

fn round2(v: f64) -> f64 {
    signed_pct(v).parse().expect("formatted float parses")
}

/// One table row, percentages already rounded to two decimals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub index: usize,
    pub pattern: String,
    pub support_pct: f64,
    pub parity_reduction_pct: f64,
    pub accuracy_reduction_pct: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verified_parity_reduction_pct: Option<f64>,
}

pub const HEADER: [&str; 5] = ["Index", "Pattern", "Support %", "Parity Reduction %", "Accuracy Reduction %"];
const VERIFIED_HEADER: &str = "Retrain Parity Reduction %";

pub fn table_rows(explanations: &[Explanation]) -> Vec<TableRow> {
    explanations
        .iter()
        .map(|e| TableRow {
            index: e.rank,
            pattern: e.predicate.to_string(),
            support_pct: round2(100.0 * e.support),
            parity_reduction_pct: round2(e.bias_reduction),
            accuracy_reduction_pct: round2(e.accuracy_reduction),
            verified_parity_reduction_pct: e.verification.as_ref().and_then(|v| v.bias_reduction).map(round2),
        })
        .collect()
}

fn cells(row: &TableRow, verified: bool) -> Vec<String> {
    let mut out = vec![
        row.index.to_string(),
        row.pattern.clone(),
        format!("{}%", signed_pct(row.support_pct)),
        format!("{}%", signed_pct(row.parity_reduction_pct)),
        format!("{}%", signed_pct(row.accuracy_reduction_pct)),
    ];
    if verified {
        out.push(match row.verified_parity_reduction_pct {
            Some(v) => format!("{}%", signed_pct(v)),
            None => "undefined".to_string(),
        });
    }
    out
}

#[derive(Serialize, Deserialize)]
struct JsonDocument {
    explanations: Vec<TableRow>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    diagnostics: Option<DiagnosticReport>,
}

/// Renders the explanation table. JSON embeds the diagnostics, Markdown
/// appends them as a section, CSV carries the table only.
pub fn render_tables(
    explanations: &[Explanation],
    diagnostics: Option<&DiagnosticReport>,
    format: Format,
) -> Result<String, ReportError> {
    let rows = table_rows(explanations);
    let verified = explanations.iter().any(|e| e.verification.is_some());
    let mut header: Vec<&str> = HEADER.to_vec();
    if verified {
        header.push(VERIFIED_HEADER);
    }
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(&header)?;
            for r in &rows {
                w.write_record(cells(r, verified))?;
            }
            let bytes = w.into_inner().map_err(|e| ReportError::Malformed(e.to_string()))?;
            Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
        }
        Format::Json => {
            let doc = JsonDocument {
                explanations: rows,
                diagnostics: diagnostics.cloned(),
            };
            Ok(serde_json::to_string_pretty(&doc)? + "\n")
        }
        Format::Markdown => {
            let mut out = format!("| {} |\n", header.join(" | "));
            out += &format!("|{}\n", "---|".repeat(header.len()));
            for r in &rows {
                let line: Vec<String> = cells(r, verified).into_iter().map(|c| c.replace('|', "\\|")).collect();
                out += &format!("| {} |\n", line.join(" | "));
            }
            if let Some(d) = diagnostics.filter(|d| !d.explanations.is_empty()) {
                out += "\n## Diagnostics\n";
                for e in &d.explanations {
                    let rate = |g: &GroupProportion| g.rate.map_or("undefined".to_string(), |r| format!("{r:.4}"));
                    out += &format!(
                        "\n### {}. {}\n\nPositive-label rate: protected {} ({}/{}), privileged {} ({}/{})\n\n",
                        e.rank,
                        e.pattern.replace('|', "\\|"),
                        rate(&e.label_proportions.protected),
                        e.label_proportions.protected.positives,
                        e.label_proportions.protected.rows,
                        rate(&e.label_proportions.privileged),
                        e.label_proportions.privileged.positives,
                        e.label_proportions.privileged.rows,
                    );
                    let moves: Vec<String> = e.importances.iter().map(ToString::to_string).collect();
                    out += &format!("Importance deviation: {}\n", moves.join(", "));
                    for flag in &e.flags {
                        out += &format!("\n- {flag}\n");
                    }
                }
            }
            Ok(out)
        }
    }
}

fn parse_pct(cell: &str) -> Result<Option<f64>, ReportError> {
    if cell == "undefined" {
        return Ok(None);
    }
    let v = cell
        .strip_suffix('%')
        .ok_or_else(|| ReportError::Malformed(format!("expected a percentage, got `{cell}`")))?;
    v.parse()
        .map(Some)
        .map_err(|_| ReportError::Malformed(format!("bad number `{v}`")))
}

fn row_from_cells(cells: &[String]) -> Result<TableRow, ReportError> {
    if cells.len() < 5 {
        return Err(ReportError::Malformed(format!("expected at least 5 cells, got {}", cells.len())));
    }
    let required = |i: usize| parse_pct(&cells[i])?.ok_or_else(|| ReportError::Malformed("undefined cell".into()));
    Ok(TableRow {
        index: cells[0]
            .parse()
            .map_err(|_| ReportError::Malformed(format!("bad index `{}`", cells[0])))?,
        pattern: cells[1].clone(),
        support_pct: required(2)?,
        parity_reduction_pct: required(3)?,
        accuracy_reduction_pct: required(4)?,
        verified_parity_reduction_pct: match cells.get(5) {
            Some(c) => parse_pct(c)?,
            None => None,
        },
    })
}

/// Reads back a table written by [`render_tables`].
pub fn parse_table(text: &str, format: Format) -> Result<Vec<TableRow>, ReportError> {
    match format {
        Format::Json => Ok(serde_json::from_str::<JsonDocument>(text)?.explanations),
        Format::Csv => {
            let mut r = csv::Reader::from_reader(text.as_bytes());
            r.records()
                .map(|rec| row_from_cells(&rec?.iter().map(str::to_string).collect::<Vec<_>>()))
                .collect()
        }
        Format::Markdown => text
            .lines()
            .take_while(|l| l.starts_with('|'))
            .skip(2)
            .map(|line| {
                let inner = line.trim().trim_start_matches('|').trim_end_matches('|');
                let mut cells = Vec::new();
                let mut cur = String::new();
                let mut chars = inner.chars().peekable();
                while let Some(c) = chars.next() {
                    match c {
                        '\\' if chars.peek() == Some(&'|') => {
                            cur.push('|');
                            chars.next();
                        }
                        '|' => cells.push(std::mem::take(&mut cur).trim().to_string()),
                        _ => cur.push(c),
                    }
                }
                cells.push(cur.trim().to_string());
                row_from_cells(&cells)
            })
            .collect(),
    }
}
