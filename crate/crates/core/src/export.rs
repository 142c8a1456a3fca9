//! Augmented batch output: input columns followed by ranked goals.

use std::io::Write;

use serde::Serialize;

use crate::engine::{ClassificationResult, TopN};
use crate::ingest::Batch;

#[derive(Debug, thiserror::Error)]
pub enum ExportError {
    #[error("{0} results for {1} records")]
    LengthMismatch(usize, usize),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Output format for classified batches.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ResultFormat {
    #[default]
    Csv,
    /// One JSON object per line.
    JsonLines,
}

impl std::str::FromStr for ResultFormat {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(ResultFormat::Csv),
            "jsonlike" | "jsonl" | "json" => Ok(ResultFormat::JsonLines),
            other => Err(format!("unknown output format `{other}` (expected csv or jsonlike)")),
        }
    }
}

/// Shortest decimal that round-trips the score.
pub fn format_score(score: f64) -> String {
    format!("{score}")
}

/// Column names appended after the input columns.
pub fn result_columns(top_n: TopN, with_provenance: bool) -> Vec<String> {
    let n = top_n.get();
    let mut cols = Vec::with_capacity(3 * n + 4);
    if with_provenance {
        cols.push("source_file".to_string());
        cols.push("source_row".to_string());
    }
    cols.extend((1..=n).map(|i| format!("sdg_top_{i}")));
    cols.extend((1..=n).map(|i| format!("sdg_score_{i}")));
    cols.extend((1..=n).map(|i| format!("sdg_matched_subqueries_{i}")));
    cols.push("sdg_no_recognition".to_string());
    cols.push("sdg_library_version".to_string());
    cols
}

/// Writes every record with its ranked goals as CSV.
///
/// `source_file` and `source_row` columns are added only when the batch
/// combines several files.
pub fn write_results_csv<W: Write>(
    batch: &Batch,
    results: &[ClassificationResult],
    top_n: TopN,
    out: W,
) -> Result<(), ExportError> {
    if results.len() != batch.records.len() {
        return Err(ExportError::LengthMismatch(results.len(), batch.records.len()));
    }
    let multi = batch.sources.len() > 1;
    let n = top_n.get();
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    let mut header = batch.output_header();
    header.extend(result_columns(top_n, multi));
    w.write_record(&header)?;
    for (record, result) in batch.records.iter().zip(results) {
        let mut row = batch.output_cells(record);
        if multi {
            row.push(batch.sources[record.source].name.clone());
            row.push((record.source_row + 1).to_string());
        }
        let slot = |i: usize| result.ranked.get(i);
        row.extend((0..n).map(|i| slot(i).map(|r| r.sdg.to_string()).unwrap_or_default()));
        row.extend((0..n).map(|i| slot(i).map(|r| format_score(r.score)).unwrap_or_default()));
        row.extend((0..n).map(|i| slot(i).map(|r| r.matched_subqueries.join(";")).unwrap_or_default()));
        row.push(result.no_recognition.to_string());
        row.push(result.library_version.clone());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct JsonRow<'a> {
    row_index: usize,
    source_file: &'a str,
    source_row: usize,
    classifiable: bool,
    result: &'a ClassificationResult,
}

/// Writes one JSON object per record.
pub fn write_results_jsonl<W: Write>(
    batch: &Batch,
    results: &[ClassificationResult],
    mut out: W,
) -> Result<(), ExportError> {
    if results.len() != batch.records.len() {
        return Err(ExportError::LengthMismatch(results.len(), batch.records.len()));
    }
    for (record, result) in batch.records.iter().zip(results) {
        let row = JsonRow {
            row_index: record.index,
            source_file: &batch.sources[record.source].name,
            source_row: record.source_row + 1,
            classifiable: record.is_classifiable(),
            result,
        };
        serde_json::to_writer(&mut out, &row)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_results<W: Write>(
    format: ResultFormat,
    batch: &Batch,
    results: &[ClassificationResult],
    top_n: TopN,
    out: W,
) -> Result<(), ExportError> {
    match format {
        ResultFormat::Csv => write_results_csv(batch, results, top_n, out),
        ResultFormat::JsonLines => write_results_jsonl(batch, results, out),
    }
}

/// Reads back the `result` objects of a JSON lines export.
pub fn read_results_jsonl(text: &str) -> Result<Vec<ClassificationResult>, serde_json::Error> {
    #[derive(serde::Deserialize)]
    struct Row {
        result: ClassificationResult,
    }
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str::<Row>(l).map(|r| r.result))
        .collect()
}
