//! Importer for Scopus-syntax SDG query datasets such as the Elsevier
//! 2023 SDG mapping queries.
//!
//! The upstream column layout is discovered from the header row. Scopus
//! constructs the native grammar cannot express are either rewritten
//! (field scopes are flattened, `{...}` becomes a quoted phrase,
//! proximity operators optionally become `AND`) or the row is rejected.
//! Every rejection is named in the [`ImportReport`].

use std::collections::{BTreeMap, HashSet};
use std::path::{Path, PathBuf};
use std::sync::LazyLock;

use regex::Regex;
use serde::Serialize;
use sha2::{Digest, Sha256};

use super::{QueryLibrary, SubQuery};
use crate::query::{parse_query, tokenize_query, LexemeKind};
use crate::sdg::{SdgId, SDG_COUNT};
use crate::text;

#[derive(Debug, Clone, Default)]
pub struct ImportOptions {
    /// Replace `W/n` and `PRE/n` with `AND` instead of rejecting the row.
    pub rewrite_proximity_as_and: bool,
    pub name: Option<String>,
    pub version: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Disposition {
    Rejected,
    RewrittenAsAnd,
    Rewritten,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConstructRecord {
    /// 1-based data row number in the source file.
    pub row: usize,
    pub subquery_id: String,
    pub construct: String,
    pub disposition: Disposition,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RejectedRow {
    pub row: usize,
    pub subquery_id: Option<String>,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DetectedColumns {
    pub sdg: String,
    pub query: String,
    pub id: Option<String>,
    pub label: Option<String>,
    pub header: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ImportReport {
    pub source: String,
    pub columns: DetectedColumns,
    pub rows_read: usize,
    pub imported: usize,
    /// Sub-queries per goal, index 0 is SDG 1.
    pub per_sdg: Vec<usize>,
    pub operator_usage: BTreeMap<String, usize>,
    pub constructs: Vec<ConstructRecord>,
    pub rejected: Vec<RejectedRow>,
    pub warnings: Vec<String>,
}

#[derive(Debug, thiserror::Error)]
pub enum ImportError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: malformed delimited data: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("{path}: unrecognized schema, no {missing} column among header {header:?}")]
    UnrecognizedSchema {
        path: PathBuf,
        missing: &'static str,
        header: Vec<String>,
    },
}

/// A Scopus query rewritten into the native syntax.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Conversion {
    pub query: String,
    pub constructs: Vec<(String, Disposition)>,
    /// Reasons the query cannot be represented; empty on success.
    pub problems: Vec<String>,
}

impl Conversion {
    pub fn is_ok(&self) -> bool {
        self.problems.is_empty()
    }
}

static FIELD_SCOPE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"\b(TITLE-ABS-KEY|TITLE-ABS|TITLE|ABS|KEY|AUTHKEY|INDEXTERMS)\s*\(").unwrap());
static FIELD_RESTRICTION: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(
        r"\b(SRCTITLE|EXACTSRCTITLE|DOCTYPE|SUBJAREA|AFFILCOUNTRY|AFFILORG|AFFILCITY|AFFIL|AUTHOR-NAME|AUTH|AU-ID|LANGUAGE|PUBSTAGE|SRCTYPE|LIMIT-TO|EXCLUDE|REF|FUND-SPONSOR|ISSN|DOI)\s*\(",
    )
    .unwrap()
});
static PUBYEAR: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\bPUBYEAR\s*(>|<|=|AFT\b|BEF\b|IS\b)").unwrap());
static PROXIMITY: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?i)(?:^|\s)((?:W|PRE)/\d+)(?:\s|$)").unwrap());
static BRACES: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\{([^{}]*)\}").unwrap());
static SINGLE_WILDCARD: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\w\?|\?\w").unwrap());

/// Rewrites one Scopus-syntax query into the native grammar.
///
/// Every construct found is listed with its disposition, whether or not
/// the conversion succeeds.
pub fn convert_scopus_query(raw: &str, opts: &ImportOptions) -> Conversion {
    let mut constructs = Vec::new();
    let mut reasons = Vec::new();
    let mut q = raw.replace(['\t', '\r', '\n'], " ");

    for m in FIELD_RESTRICTION.captures_iter(&q) {
        reasons.push(format!("field restriction {}(...)", &m[1]));
    }
    if PUBYEAR.is_match(&q) {
        reasons.push("PUBYEAR restriction".to_string());
    }
    if SINGLE_WILDCARD.is_match(&q) {
        reasons.push("single-character wildcard `?`".to_string());
    }

    if BRACES.is_match(&q) {
        constructs.push(("exact phrase {...}".to_string(), Disposition::Rewritten));
        q = BRACES.replace_all(&q, "\"$1\"").into_owned();
    }
    let scopes: Vec<String> = FIELD_SCOPE.captures_iter(&q).map(|c| c[1].to_string()).collect();
    for s in scopes {
        constructs.push((format!("field scope {s}(...)"), Disposition::Rewritten));
    }
    q = FIELD_SCOPE.replace_all(&q, "(").into_owned();

    let proximity: Vec<String> = PROXIMITY.captures_iter(&q).map(|c| c[1].to_uppercase()).collect();
    if !proximity.is_empty() {
        let disposition = if opts.rewrite_proximity_as_and {
            Disposition::RewrittenAsAnd
        } else {
            Disposition::Rejected
        };
        for p in &proximity {
            constructs.push((format!("proximity {p}"), disposition));
        }
        if opts.rewrite_proximity_as_and {
            // matches can share whitespace, so repeat until stable
            loop {
                let next = PROXIMITY.replace_all(&q, " AND ").into_owned();
                if next == q {
                    break;
                }
                q = next;
            }
        } else {
            reasons.push(format!("proximity operator {}", proximity.join(", ")));
        }
    }

    let q = q.split_whitespace().collect::<Vec<_>>().join(" ");
    if reasons.is_empty() {
        if let Err(e) = parse_query(&q) {
            reasons.push(format!("query does not parse: {e}"));
        }
    }
    Conversion {
        query: q,
        constructs,
        problems: reasons,
    }
}

fn header_words(h: &str) -> Vec<String> {
    text::tokenize(&h.replace('_', " "))
}

fn has_any(words: &[String], wanted: &[&str]) -> bool {
    words.iter().any(|w| wanted.contains(&w.as_str()))
}

fn detect(header: &[String], path: &Path) -> Result<DetectedColumns, ImportError> {
    let words: Vec<Vec<String>> = header.iter().map(|h| header_words(h)).collect();
    let idish = ["id", "name", "label", "number", "no", "count", "identifier"];
    let query = words
        .iter()
        .position(|w| has_any(w, &["query", "queries", "string", "search"]) && !has_any(w, &idish))
        .ok_or_else(|| ImportError::UnrecognizedSchema {
            path: path.to_path_buf(),
            missing: "query",
            header: header.to_vec(),
        })?;
    let sdg = words
        .iter()
        .enumerate()
        .position(|(i, w)| i != query && (has_any(w, &["sdg", "goal"]) || w.iter().any(|x| x.starts_with("sdg"))))
        .ok_or_else(|| ImportError::UnrecognizedSchema {
            path: path.to_path_buf(),
            missing: "SDG",
            header: header.to_vec(),
        })?;
    let free = |i: usize| i != query && i != sdg;
    let id = words
        .iter()
        .enumerate()
        .position(|(i, w)| free(i) && has_any(w, &["id", "identifier", "code", "number", "no"]));
    let label = words.iter().enumerate().position(|(i, w)| {
        free(i)
            && Some(i) != id
            && has_any(
                w,
                &[
                    "label",
                    "name",
                    "target",
                    "aspect",
                    "description",
                    "title",
                    "topic",
                    "theme",
                ],
            )
    });
    Ok(DetectedColumns {
        sdg: header[sdg].clone(),
        query: header[query].clone(),
        id: id.map(|i| header[i].clone()),
        label: label.map(|i| header[i].clone()),
        header: header.to_vec(),
    })
}

fn delimiter_for(path: &Path, first_line: &str) -> u8 {
    match path
        .extension()
        .and_then(|e| e.to_str())
        .map(str::to_ascii_lowercase)
        .as_deref()
    {
        Some("csv") => b',',
        Some("tsv") | Some("tab") => b'\t',
        _ if first_line.contains('\t') => b'\t',
        _ => b',',
    }
}

fn operator_usage(query: &str, usage: &mut BTreeMap<String, usize>) {
    let Ok(lexemes) = tokenize_query(query) else { return };
    for lx in lexemes {
        let key = match &lx.kind {
            LexemeKind::And => "AND",
            LexemeKind::Or => "OR",
            LexemeKind::Not => "NOT",
            LexemeKind::LParen => "group",
            LexemeKind::Quoted(c) if c.split_whitespace().count() > 1 => "phrase",
            LexemeKind::Quoted(c) if c.ends_with('*') => "wildcard",
            LexemeKind::Word(w) if w.ends_with('*') => "wildcard",
            _ => continue,
        };
        *usage.entry(key.to_string()).or_default() += 1;
    }
}

/// Reads a delimited query dataset and converts it into a library plus a
/// conversion report.
pub fn import_elsevier(source: &Path, opts: &ImportOptions) -> Result<(QueryLibrary, ImportReport), ImportError> {
    let bytes = std::fs::read(source).map_err(|e| ImportError::Io {
        path: source.to_path_buf(),
        source: e,
    })?;
    let text = String::from_utf8_lossy(&bytes);
    let text = text.strip_prefix('\u{feff}').unwrap_or(&text);
    let delimiter = delimiter_for(source, text.lines().next().unwrap_or(""));
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .flexible(true)
        .from_reader(text.as_bytes());
    let csv_err = |e| ImportError::Csv {
        path: source.to_path_buf(),
        source: e,
    };
    let header: Vec<String> = reader
        .headers()
        .map_err(csv_err)?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    if header.iter().all(|h| h.is_empty()) {
        return Err(ImportError::UnrecognizedSchema {
            path: source.to_path_buf(),
            missing: "header",
            header,
        });
    }
    let columns = detect(&header, source)?;
    log::info!(
        "import {}: header {:?}; sdg=`{}` query=`{}` id={:?} label={:?}",
        source.display(),
        columns.header,
        columns.sdg,
        columns.query,
        columns.id,
        columns.label
    );
    let col = |name: &str| header.iter().position(|h| h == name);
    let (sdg_col, query_col) = (col(&columns.sdg).unwrap(), col(&columns.query).unwrap());
    let id_col = columns.id.as_deref().and_then(col);
    let label_col = columns.label.as_deref().and_then(col);

    let mut rows_read = 0;
    let mut subqueries = Vec::new();
    let mut ids = HashSet::new();
    let mut per_sdg_seq = [0usize; SDG_COUNT];
    let mut rejected = Vec::new();
    let mut constructs = Vec::new();
    let mut usage = BTreeMap::new();

    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(csv_err)?;
        let row = i + 1;
        rows_read += 1;
        let cell = |c: Option<usize>| c.and_then(|c| record.get(c)).map(str::trim).unwrap_or("");
        let given_id = Some(cell(id_col)).filter(|s| !s.is_empty()).map(str::to_string);

        let sdg = match cell(Some(sdg_col)).parse::<SdgId>() {
            Ok(s) => s,
            Err(_) => {
                rejected.push(RejectedRow {
                    row,
                    subquery_id: given_id,
                    reason: format!("invalid SDG value `{}`", cell(Some(sdg_col))),
                });
                continue;
            }
        };
        let id = given_id.unwrap_or_else(|| {
            let n = per_sdg_seq[sdg.index()] + 1;
            format!("SDG{:02}-{n:03}", sdg.get())
        });
        per_sdg_seq[sdg.index()] += 1;

        let raw = cell(Some(query_col));
        if raw.is_empty() {
            rejected.push(RejectedRow {
                row,
                subquery_id: Some(id),
                reason: "empty query".into(),
            });
            continue;
        }
        let converted = convert_scopus_query(raw, opts);
        let accepted = converted.is_ok() && ids.insert(id.clone());
        if converted.is_ok() && !accepted {
            rejected.push(RejectedRow {
                row,
                subquery_id: Some(id),
                reason: "duplicate subquery-id".into(),
            });
            continue;
        }
        for (construct, disposition) in &converted.constructs {
            constructs.push(ConstructRecord {
                row,
                subquery_id: id.clone(),
                construct: construct.clone(),
                disposition: if accepted { *disposition } else { Disposition::Rejected },
            });
        }
        if !accepted {
            for problem in converted.problems.iter().filter(|p| !p.starts_with("proximity")) {
                constructs.push(ConstructRecord {
                    row,
                    subquery_id: id.clone(),
                    construct: problem.clone(),
                    disposition: Disposition::Rejected,
                });
            }
            rejected.push(RejectedRow {
                row,
                subquery_id: Some(id),
                reason: converted.problems.join("; "),
            });
            continue;
        }
        let ast = parse_query(&converted.query).expect("converted queries parse");
        operator_usage(&converted.query, &mut usage);
        for (construct, _) in &converted.constructs {
            if construct.starts_with("proximity") {
                *usage.entry("proximity".into()).or_default() += 1;
            } else if construct.starts_with("field scope") {
                *usage.entry("field_scope".into()).or_default() += 1;
            }
        }
        subqueries.push(SubQuery {
            id,
            sdg,
            label: cell(label_col).replace(['\t', '\r', '\n'], " "),
            raw: converted.query,
            ast,
        });
    }

    let name = opts.name.clone().unwrap_or_else(|| {
        source
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "elsevier".into())
    });
    let version = opts
        .version
        .clone()
        .unwrap_or_else(|| format!("sha256-{}", &hex::encode(Sha256::digest(&bytes))[..12]));
    let library = QueryLibrary::new(name, version, subqueries).expect("ids deduplicated above");
    let warnings = library.warnings().iter().map(ToString::to_string).collect();
    let report = ImportReport {
        source: source.display().to_string(),
        columns,
        rows_read,
        imported: library.len(),
        per_sdg: library.totals().to_vec(),
        operator_usage: usage,
        constructs,
        rejected,
        warnings,
    };
    for w in &report.warnings {
        log::warn!("import {}: {w}", source.display());
    }
    Ok((library, report))
}
