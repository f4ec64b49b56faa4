//! Report types, summary statistics and deterministic emission.
//!
//! JSON reports have sorted keys and every float printed with exactly six
//! decimals, so identical runs produce identical bytes. CSV reports have one
//! row per [`ReportRow`] with the columns listed in [`CSV_COLUMNS`].

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{HarnessError, ReportFormat};
use crate::baselines::BaselineScores;
use crate::belief::Variant;
use crate::stats::{correlate, dispersion, CorrelationResult, DispersionResult};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariantDelta {
    pub before: f64,
    pub after: f64,
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselinePair {
    pub no_context: BaselineScores,
    pub with_context: BaselineScores,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub record_id: String,
    pub repetition: usize,
    pub gold_utility: Option<f64>,
    /// The model already knew the answer without context; the row is kept
    /// but excluded from correlations.
    pub skipped_known: bool,
    pub degraded: bool,
    pub hard: Option<VariantDelta>,
    pub soft: Option<VariantDelta>,
    pub baselines: Option<BaselinePair>,
    pub generation_cache_hits: u32,
    pub elapsed_ms: Option<f64>,
}

/// Per-row utility metrics. Lexical baselines are `after − before`;
/// uncertainty baselines are `before − after`, so positive always means the
/// context helped.
pub const METRICS: [&str; 7] = [
    "delta_seper_hard",
    "delta_seper_soft",
    "delta_exact_match",
    "delta_rouge_l",
    "reduction_predictive_entropy",
    "reduction_semantic_entropy",
    "reduction_perplexity",
];

impl ReportRow {
    pub fn variant(&self, variant: Variant) -> Option<&VariantDelta> {
        match variant {
            Variant::Hard => self.hard.as_ref(),
            Variant::Soft => self.soft.as_ref(),
        }
    }

    pub fn metric(&self, name: &str) -> Option<f64> {
        let b = self.baselines.as_ref();
        match name {
            "delta_seper_hard" => self.hard.as_ref().map(|v| v.delta),
            "delta_seper_soft" => self.soft.as_ref().map(|v| v.delta),
            "delta_exact_match" => b.map(|b| b.with_context.exact_match - b.no_context.exact_match),
            "delta_rouge_l" => b.map(|b| b.with_context.rouge_l - b.no_context.rouge_l),
            "reduction_predictive_entropy" => {
                b.map(|b| b.no_context.predictive_entropy - b.with_context.predictive_entropy)
            }
            "reduction_semantic_entropy" => {
                b.map(|b| b.no_context.semantic_entropy - b.with_context.semantic_entropy)
            }
            "reduction_perplexity" => b.and_then(|b| {
                Some(b.no_context.mean_perplexity? - b.with_context.mean_perplexity?)
            }),
            _ => None,
        }
    }

    /// No-context SePer used for the already-known filter: the first
    /// available variant, hard before soft.
    pub fn no_context_seper(&self) -> Option<f64> {
        self.hard.as_ref().or(self.soft.as_ref()).map(|v| v.before)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunFailure {
    pub record_id: String,
    pub repetition: usize,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationEntry {
    pub n: usize,
    pub result: Option<CorrelationResult>,
    pub note: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ReportSummary {
    pub rows: usize,
    pub failures: usize,
    pub skipped_known: usize,
    /// Pearson correlation of each metric against `gold_utility`.
    pub correlations: BTreeMap<String, CorrelationEntry>,
    /// Spread across repetitions of each metric's per-repetition mean.
    pub dispersion: BTreeMap<String, DispersionResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportSettings {
    pub generation_model: String,
    pub entailment_model: String,
    pub n_samples: usize,
    pub temperature: f64,
    pub max_tokens: u32,
    pub seed: Option<u64>,
    pub tau: f64,
    pub weight_mode: String,
    pub pair_mode: String,
    pub aggregation: String,
    pub soft_kernel: String,
    pub variants: Vec<String>,
    pub baselines: bool,
    pub repetitions: usize,
    pub skip_known: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: u32,
    pub settings: ReportSettings,
    pub rows: Vec<ReportRow>,
    pub failures: Vec<RunFailure>,
    pub summary: ReportSummary,
}

/// Recomputes correlations and dispersion from rows. `skip_known` re-flags
/// rows whose no-context SePer reaches the threshold.
pub fn summarize(
    rows: &mut [ReportRow],
    failures: usize,
    skip_known: Option<f64>,
) -> ReportSummary {
    for row in rows.iter_mut() {
        row.skipped_known = match (skip_known, row.no_context_seper()) {
            (Some(t), Some(s)) => s >= t,
            _ => false,
        };
    }
    let mut correlations = BTreeMap::new();
    let mut spread = BTreeMap::new();
    for name in METRICS {
        let pairs: Vec<(f64, f64)> = rows
            .iter()
            .filter(|r| !r.skipped_known)
            .filter_map(|r| Some((r.metric(name)?, r.gold_utility?)))
            .collect();
        let has_metric = rows.iter().any(|r| r.metric(name).is_some());
        if has_metric {
            let (x, y): (Vec<f64>, Vec<f64>) = pairs.iter().copied().unzip();
            let entry = match correlate(&x, &y) {
                Ok(result) => CorrelationEntry {
                    n: x.len(),
                    result: Some(result),
                    note: None,
                },
                Err(e) => CorrelationEntry {
                    n: x.len(),
                    result: None,
                    note: Some(e.to_string()),
                },
            };
            correlations.insert(name.to_string(), entry);
        }

        let mut per_rep: BTreeMap<usize, (f64, usize)> = BTreeMap::new();
        for row in rows.iter() {
            if let Some(v) = row.metric(name) {
                let slot = per_rep.entry(row.repetition).or_default();
                slot.0 += v;
                slot.1 += 1;
            }
        }
        let means: Vec<f64> = per_rep.values().map(|(s, c)| s / *c as f64).collect();
        if let Ok(d) = dispersion(&means) {
            spread.insert(name.to_string(), d);
        }
    }
    ReportSummary {
        rows: rows.len(),
        failures,
        skipped_known: rows.iter().filter(|r| r.skipped_known).count(),
        correlations,
        dispersion: spread,
    }
}

fn format_float(v: f64) -> String {
    let s = format!("{v:.6}");
    if s == "-0.000000" {
        "0.000000".into()
    } else {
        s
    }
}

fn write_canonical(out: &mut String, value: &Value, indent: usize) {
    let pad = |n: usize| "  ".repeat(n);
    match value {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => match (n.as_u64(), n.as_i64(), n.as_f64()) {
            (Some(u), _, _) => write!(out, "{u}").unwrap(),
            (_, Some(i), _) => write!(out, "{i}").unwrap(),
            (_, _, Some(f)) if f.is_finite() => out.push_str(&format_float(f)),
            _ => out.push_str("null"),
        },
        Value::String(s) => out.push_str(&serde_json::to_string(s).expect("string serializes")),
        Value::Array(items) if items.is_empty() => out.push_str("[]"),
        Value::Array(items) => {
            out.push_str("[\n");
            for (i, item) in items.iter().enumerate() {
                out.push_str(&pad(indent + 1));
                write_canonical(out, item, indent + 1);
                out.push_str(if i + 1 < items.len() { ",\n" } else { "\n" });
            }
            out.push_str(&pad(indent));
            out.push(']');
        }
        Value::Object(map) if map.is_empty() => out.push_str("{}"),
        Value::Object(map) => {
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            out.push_str("{\n");
            for (i, key) in keys.iter().enumerate() {
                out.push_str(&pad(indent + 1));
                out.push_str(&serde_json::to_string(key).expect("key serializes"));
                out.push_str(": ");
                write_canonical(out, &map[*key], indent + 1);
                out.push_str(if i + 1 < keys.len() { ",\n" } else { "\n" });
            }
            out.push_str(&pad(indent));
            out.push('}');
        }
    }
}

/// Canonical JSON text: sorted keys, two-space indent, floats at six
/// decimals, non-finite floats as `null`.
pub fn report_to_json(report: &Report) -> Result<String, HarnessError> {
    let value = serde_json::to_value(report).map_err(|e| HarnessError::Report(e.to_string()))?;
    let mut out = String::new();
    write_canonical(&mut out, &value, 0);
    out.push('\n');
    Ok(out)
}

pub const CSV_COLUMNS: [&str; 25] = [
    "record_id",
    "repetition",
    "gold_utility",
    "skipped_known",
    "degraded",
    "seper_hard_before",
    "seper_hard_after",
    "delta_seper_hard",
    "seper_soft_before",
    "seper_soft_after",
    "delta_seper_soft",
    "exact_match_before",
    "exact_match_after",
    "rouge_l_before",
    "rouge_l_after",
    "predictive_entropy_before",
    "predictive_entropy_after",
    "semantic_entropy_before",
    "semantic_entropy_after",
    "perplexity_before",
    "perplexity_after",
    "generation_cache_hits",
    "elapsed_ms",
    "status",
    "error",
];

fn opt(v: Option<f64>) -> String {
    v.map(format_float).unwrap_or_default()
}

fn csv_row(row: &ReportRow) -> Vec<String> {
    let b = row.baselines.as_ref();
    let pick = |f: fn(&BaselineScores) -> Option<f64>| {
        (
            opt(b.and_then(|b| f(&b.no_context))),
            opt(b.and_then(|b| f(&b.with_context))),
        )
    };
    let (em0, em1) = pick(|s| Some(s.exact_match));
    let (rl0, rl1) = pick(|s| Some(s.rouge_l));
    let (pe0, pe1) = pick(|s| Some(s.predictive_entropy));
    let (se0, se1) = pick(|s| Some(s.semantic_entropy));
    let (pp0, pp1) = pick(|s| s.mean_perplexity);
    vec![
        row.record_id.clone(),
        row.repetition.to_string(),
        opt(row.gold_utility),
        row.skipped_known.to_string(),
        row.degraded.to_string(),
        opt(row.hard.as_ref().map(|v| v.before)),
        opt(row.hard.as_ref().map(|v| v.after)),
        opt(row.hard.as_ref().map(|v| v.delta)),
        opt(row.soft.as_ref().map(|v| v.before)),
        opt(row.soft.as_ref().map(|v| v.after)),
        opt(row.soft.as_ref().map(|v| v.delta)),
        em0,
        em1,
        rl0,
        rl1,
        pe0,
        pe1,
        se0,
        se1,
        pp0,
        pp1,
        row.generation_cache_hits.to_string(),
        opt(row.elapsed_ms),
        "ok".into(),
        String::new(),
    ]
}

fn failure_row(f: &RunFailure) -> Vec<String> {
    let mut cells = vec![String::new(); CSV_COLUMNS.len()];
    cells[0] = f.record_id.clone();
    cells[1] = f.repetition.to_string();
    cells[23] = "failed".into();
    cells[24] = f.error.clone();
    cells
}

pub fn report_to_csv(report: &Report) -> Result<String, HarnessError> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| HarnessError::Report(e.to_string());
    writer.write_record(CSV_COLUMNS).map_err(csv_err)?;
    for row in &report.rows {
        writer.write_record(csv_row(row)).map_err(csv_err)?;
    }
    for failure in &report.failures {
        writer.write_record(failure_row(failure)).map_err(csv_err)?;
    }
    let bytes = writer
        .into_inner()
        .map_err(|e| HarnessError::Report(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| HarnessError::Report(e.to_string()))
}

pub fn render_report(report: &Report, format: ReportFormat) -> Result<String, HarnessError> {
    match format {
        ReportFormat::Json => report_to_json(report),
        ReportFormat::Csv => report_to_csv(report),
    }
}

pub fn emit_report(report: &Report, format: ReportFormat, path: &Path) -> Result<(), HarnessError> {
    let text = render_report(report, format)?;
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|source| HarnessError::Io {
            path: parent.to_path_buf(),
            source,
        })?;
    }
    std::fs::write(path, text).map_err(|source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Reads a JSON report written by [`emit_report`].
pub fn load_report(path: &Path) -> Result<Report, HarnessError> {
    let text = std::fs::read_to_string(path).map_err(|source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_str(&text)
        .map_err(|e| HarnessError::Report(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn settings() -> ReportSettings {
        ReportSettings {
            generation_model: "g".into(),
            entailment_model: "e".into(),
            n_samples: 10,
            temperature: 1.0,
            max_tokens: 512,
            seed: Some(1),
            tau: 0.5,
            weight_mode: "length_normalized".into(),
            pair_mode: "question_prefixed".into(),
            aggregation: "mean".into(),
            soft_kernel: "per_response".into(),
            variants: vec!["hard".into()],
            baselines: false,
            repetitions: 1,
            skip_known: None,
        }
    }

    fn row(id: &str, before: f64, after: f64, gold: Option<f64>) -> ReportRow {
        ReportRow {
            record_id: id.into(),
            repetition: 0,
            gold_utility: gold,
            skipped_known: false,
            degraded: false,
            hard: Some(VariantDelta {
                before,
                after,
                delta: after - before,
            }),
            soft: None,
            baselines: None,
            generation_cache_hits: 0,
            elapsed_ms: None,
        }
    }

    fn report(rows: Vec<ReportRow>) -> Report {
        Report {
            schema_version: REPORT_SCHEMA_VERSION,
            settings: settings(),
            rows,
            failures: vec![],
            summary: ReportSummary::default(),
        }
    }

    #[test]
    fn canonical_json_formats_floats() {
        let v: Value = serde_json::json!({"b": 1.0, "a": [0.1234567, -0.0], "c": 3, "d": null});
        let mut out = String::new();
        write_canonical(&mut out, &v, 0);
        assert_eq!(
            out,
            "{\n  \"a\": [\n    0.123457,\n    0.000000\n  ],\n  \"b\": 1.000000,\n  \"c\": 3,\n  \"d\": null\n}"
        );
    }

    #[test]
    fn json_is_reproducible_and_loadable() {
        let r = report(vec![row("a", 0.0, 1.0, Some(1.0))]);
        let first = report_to_json(&r).unwrap();
        assert_eq!(first, report_to_json(&r).unwrap());
        let back: Report = serde_json::from_str(&first).unwrap();
        assert_eq!(back.rows[0].hard.as_ref().unwrap().delta, 1.0);
    }

    #[test]
    fn csv_shapes() {
        let empty = report_to_csv(&report(vec![])).unwrap();
        assert_eq!(empty.lines().count(), 1);
        assert_eq!(empty.lines().next().unwrap(), CSV_COLUMNS.join(","));
        let one = report_to_csv(&report(vec![row("a", 0.0, 1.0, None)])).unwrap();
        assert_eq!(one.lines().count(), 2);
        assert!(one
            .lines()
            .nth(1)
            .unwrap()
            .starts_with("a,0,,false,false,0.000000,1.000000,1.000000,"));
    }

    #[test]
    fn skip_known_excluded_from_correlation() {
        let mut rows = vec![
            row("a", 0.0, 1.0, Some(1.0)),
            row("b", 0.0, 0.0, Some(0.0)),
            row("c", 0.1, 0.6, Some(0.5)),
            row("d", 1.0, 1.0, Some(1.0)),
        ];
        let s = summarize(&mut rows, 0, Some(0.999));
        assert_eq!(s.skipped_known, 1);
        assert!(rows[3].skipped_known);
        assert_eq!(s.correlations["delta_seper_hard"].n, 3);
        let s = summarize(&mut rows, 0, None);
        assert_eq!(s.skipped_known, 0);
        assert_eq!(s.correlations["delta_seper_hard"].n, 4);
    }

    #[test]
    fn too_few_points_noted() {
        let mut rows = vec![row("a", 0.0, 1.0, Some(1.0)), row("b", 0.0, 0.0, Some(0.0))];
        let s = summarize(&mut rows, 0, None);
        let entry = &s.correlations["delta_seper_hard"];
        assert!(entry.result.is_none());
        assert!(entry.note.is_some());
    }
}
