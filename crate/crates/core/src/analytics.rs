//! Corpus summaries and accuracy@k evaluation against ground truth.

use std::collections::HashMap;

use serde::Serialize;

use crate::engine::{ClassificationResult, TopN};
use crate::ingest::Batch;
use crate::sdg::{SdgId, SDG_COUNT};

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum AnalyticsError {
    #[error("no results to summarize")]
    Empty,
    #[error("ground truth references row {0}, which is not in the results")]
    UnknownRow(usize),
    #[error("ground truth references `{column}` = `{value}`, which matches no record")]
    UnknownKey { column: String, value: String },
    #[error("row {row} was ranked to depth {top_n}, below the requested k={k}")]
    Truncated { row: usize, top_n: usize, k: usize },
    #[error("ground truth file: {0}")]
    Truth(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SdgFrequency {
    pub sdg: SdgId,
    /// Papers with this goal at rank `i + 1`.
    pub at_rank: Vec<usize>,
    /// Papers with this goal within the top `i + 1`.
    pub within_top: Vec<usize>,
}

/// Per-goal frequency distribution over a classified corpus.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CorpusSummary {
    pub depth: usize,
    pub total_papers: usize,
    pub no_recognition: usize,
    pub sdgs: Vec<SdgFrequency>,
}

impl CorpusSummary {
    pub fn get(&self, sdg: SdgId) -> &SdgFrequency {
        &self.sdgs[sdg.index()]
    }

    /// Counts of each goal within the top `k`, the series a chart draws.
    pub fn series(&self, k: usize) -> Vec<(SdgId, usize)> {
        self.sdgs.iter().map(|f| (f.sdg, f.within_top[k - 1])).collect()
    }
}

/// Counts goal occurrences per rank position up to the shallowest
/// `top_n` among `results`.
pub fn summarize(results: &[ClassificationResult]) -> Result<CorpusSummary, AnalyticsError> {
    let depth = results
        .iter()
        .map(|r| r.top_n.get())
        .min()
        .ok_or(AnalyticsError::Empty)?;
    summarize_at(results, TopN::new(depth as i64).expect("depth comes from a TopN"))
}

/// Like [`summarize`] but truncating every result to `k` first.
pub fn summarize_at(results: &[ClassificationResult], k: TopN) -> Result<CorpusSummary, AnalyticsError> {
    if results.is_empty() {
        return Err(AnalyticsError::Empty);
    }
    let depth = k.get();
    if let Some((row, r)) = results.iter().enumerate().find(|(_, r)| r.top_n < k) {
        return Err(AnalyticsError::Truncated {
            row,
            top_n: r.top_n.get(),
            k: depth,
        });
    }
    let mut at_rank = vec![vec![0usize; depth]; SDG_COUNT];
    let mut no_recognition = 0;
    for r in results {
        if r.no_recognition {
            no_recognition += 1;
        }
        for (pos, ranked) in r.ranked.iter().take(depth).enumerate() {
            at_rank[ranked.sdg.index()][pos] += 1;
        }
    }
    let sdgs = SdgId::all()
        .map(|sdg| {
            let counts = at_rank[sdg.index()].clone();
            let within_top = counts
                .iter()
                .scan(0, |acc, c| {
                    *acc += c;
                    Some(*acc)
                })
                .collect();
            SdgFrequency {
                sdg,
                at_rank: counts,
                within_top,
            }
        })
        .collect();
    Ok(CorpusSummary {
        depth,
        total_papers: results.len(),
        no_recognition,
        sdgs,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EvalRow {
    pub label: String,
    pub sdg: Option<SdgId>,
    pub total: usize,
    /// Papers whose true goal is within the top `i + 1`.
    pub correct: Vec<usize>,
    pub no_recognition: usize,
}

impl EvalRow {
    /// Percentage correct within the top `k`.
    pub fn accuracy(&self, k: usize) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            100.0 * self.correct[k - 1] as f64 / self.total as f64
        }
    }
}

/// Accuracy@k per true goal plus an overall row.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EvalTable {
    pub k_max: usize,
    pub rows: Vec<EvalRow>,
    pub overall: EvalRow,
}

impl EvalTable {
    /// The accuracy columns reported: k = 1, 2 and `k_max`.
    pub fn accuracy_levels(&self) -> Vec<usize> {
        let mut ks = vec![1, 2.min(self.k_max), self.k_max];
        ks.dedup();
        ks
    }

    pub fn row(&self, sdg: SdgId) -> Option<&EvalRow> {
        self.rows.iter().find(|r| r.sdg == Some(sdg))
    }
}

/// Scores `results` against ground-truth labels.
///
/// A paper counts as correct at k when its true goal is within the top k
/// of its ranked list. Results must have been ranked at least `k_max`
/// deep; correct@k for smaller k is read off the same list.
pub fn evaluate(
    results: &[ClassificationResult],
    truth: &[(usize, SdgId)],
    k_max: TopN,
) -> Result<EvalTable, AnalyticsError> {
    let k_max = k_max.get();
    let mut rows: Vec<Option<EvalRow>> = vec![None; SDG_COUNT];
    for &(row, sdg) in truth {
        let result = results.get(row).ok_or(AnalyticsError::UnknownRow(row))?;
        if result.top_n.get() < k_max {
            return Err(AnalyticsError::Truncated {
                row,
                top_n: result.top_n.get(),
                k: k_max,
            });
        }
        let entry = rows[sdg.index()].get_or_insert_with(|| EvalRow {
            label: format!("SDG {sdg}"),
            sdg: Some(sdg),
            total: 0,
            correct: vec![0; k_max],
            no_recognition: 0,
        });
        entry.total += 1;
        if result.no_recognition {
            entry.no_recognition += 1;
        }
        if let Some(rank) = result.rank_of(sdg) {
            for c in entry.correct.iter_mut().skip(rank - 1) {
                *c += 1;
            }
        }
    }
    let rows: Vec<EvalRow> = rows.into_iter().flatten().collect();
    let mut overall = EvalRow {
        label: "Overall".into(),
        sdg: None,
        total: 0,
        correct: vec![0; k_max],
        no_recognition: 0,
    };
    for r in &rows {
        overall.total += r.total;
        overall.no_recognition += r.no_recognition;
        for (o, c) in overall.correct.iter_mut().zip(&r.correct) {
            *o += c;
        }
    }
    Ok(EvalTable { k_max, rows, overall })
}

/// Formats a percentage with at most two decimals: `64`, `68.67`.
pub fn format_percent(p: f64) -> String {
    let s = format!("{p:.2}");
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

fn csv_line(fields: &[String]) -> String {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(fields).expect("in-memory write");
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ExportFormat {
    #[default]
    Csv,
    /// Pretty-printed JSON.
    Structured,
}

/// `sdg_id,rank1_count,top2_count,...,topN_count`, one row per goal.
pub fn summary_csv(summary: &CorpusSummary) -> Result<String, AnalyticsError> {
    if summary.total_papers == 0 {
        return Err(AnalyticsError::Empty);
    }
    let mut header = vec!["sdg_id".to_string(), "rank1_count".to_string()];
    header.extend((2..=summary.depth).map(|k| format!("top{k}_count")));
    let mut out = csv_line(&header);
    for f in &summary.sdgs {
        let mut row = vec![f.sdg.to_string()];
        row.extend(f.within_top.iter().map(ToString::to_string));
        out.push_str(&csv_line(&row));
    }
    Ok(out)
}

/// Evaluation table in the column layout of a Top-N accuracy report.
pub fn eval_csv(table: &EvalTable) -> Result<String, AnalyticsError> {
    if table.overall.total == 0 {
        return Err(AnalyticsError::Empty);
    }
    let levels = table.accuracy_levels();
    let mut header = vec!["SDG".to_string(), "Total Papers".to_string()];
    header.extend((1..=table.k_max).map(|k| format!("Correct @ Top-{k}")));
    header.push("No Recognition".into());
    header.extend(levels.iter().map(|k| format!("Accuracy @ Top-{k} (%)")));
    let mut out = csv_line(&header);
    for r in table.rows.iter().chain(std::iter::once(&table.overall)) {
        let mut row = vec![r.label.clone(), r.total.to_string()];
        row.extend(r.correct.iter().map(ToString::to_string));
        row.push(r.no_recognition.to_string());
        row.extend(levels.iter().map(|&k| format_percent(r.accuracy(k))));
        out.push_str(&csv_line(&row));
    }
    Ok(out)
}

pub fn export_summary(summary: &CorpusSummary, format: ExportFormat) -> Result<String, AnalyticsError> {
    match format {
        ExportFormat::Csv => summary_csv(summary),
        ExportFormat::Structured => {
            if summary.total_papers == 0 {
                return Err(AnalyticsError::Empty);
            }
            Ok(serde_json::to_string_pretty(summary).expect("serializable") + "\n")
        }
    }
}

pub fn export_eval(table: &EvalTable, format: ExportFormat) -> Result<String, AnalyticsError> {
    match format {
        ExportFormat::Csv => eval_csv(table),
        ExportFormat::Structured => {
            if table.overall.total == 0 {
                return Err(AnalyticsError::Empty);
            }
            Ok(serde_json::to_string_pretty(table).expect("serializable") + "\n")
        }
    }
}

/// Parses a ground-truth CSV against `batch`.
///
/// The header is either `row_index,sdg_id` (0-based batch rows) or
/// `<column>,sdg_id` where `<column>` names an input column whose value
/// identifies the record, such as `DOI` or `EID`.
pub fn parse_truth(text: &str, batch: &Batch) -> Result<Vec<(usize, SdgId)>, AnalyticsError> {
    let text = text.strip_prefix('\u{feff}').unwrap_or(text);
    let mut reader = csv::ReaderBuilder::new().from_reader(text.as_bytes());
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| AnalyticsError::Truth(e.to_string()))?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    let sdg_col = header
        .iter()
        .position(|h| h.eq_ignore_ascii_case("sdg_id") || h.eq_ignore_ascii_case("sdg"))
        .ok_or_else(|| AnalyticsError::Truth(format!("no sdg_id column in {header:?}")))?;
    let key_col = (0..header.len())
        .find(|&i| i != sdg_col)
        .ok_or_else(|| AnalyticsError::Truth("no row key column".into()))?;
    let key_name = header[key_col].clone();
    let by_row_index = key_name.eq_ignore_ascii_case("row_index");

    let mut lookup: HashMap<&str, usize> = HashMap::new();
    if !by_row_index {
        for r in &batch.records {
            let header = &batch.sources[r.source].header;
            if let Some(i) = header.iter().position(|h| h == &key_name) {
                lookup.entry(r.cells()[i].as_str()).or_insert(r.index);
            }
        }
        if lookup.is_empty() {
            return Err(AnalyticsError::Truth(format!(
                "key column `{key_name}` is not an input column"
            )));
        }
    }

    let mut out = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| AnalyticsError::Truth(e.to_string()))?;
        let key = rec.get(key_col).unwrap_or("").trim();
        let sdg_raw = rec.get(sdg_col).unwrap_or("");
        let sdg: SdgId = sdg_raw
            .parse()
            .map_err(|_| AnalyticsError::Truth(format!("line {}: invalid sdg `{sdg_raw}`", i + 2)))?;
        let row = if by_row_index {
            let row: usize = key
                .parse()
                .map_err(|_| AnalyticsError::Truth(format!("line {}: invalid row_index `{key}`", i + 2)))?;
            if row >= batch.records.len() {
                return Err(AnalyticsError::UnknownRow(row));
            }
            row
        } else {
            *lookup.get(key).ok_or_else(|| AnalyticsError::UnknownKey {
                column: key_name.clone(),
                value: key.to_string(),
            })?
        };
        out.push((row, sdg));
    }
    Ok(out)
}
