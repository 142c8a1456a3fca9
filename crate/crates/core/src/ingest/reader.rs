use std::path::Path;

use serde::Serialize;

use super::{detect_columns, ColumnMapping, IngestError, MappingRequest, PaperRecord, Role};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum InputFormat {
    Csv,
    Tsv,
}

impl InputFormat {
    /// `.tsv`, `.tab` and `.txt` (Web of Science exports) are tab
    /// separated, `.csv` is comma separated, anything else is sniffed from
    /// the first line.
    pub fn detect(name: &str, first_line: &str) -> Self {
        let ext = Path::new(name)
            .extension()
            .and_then(|e| e.to_str())
            .map(str::to_ascii_lowercase);
        match ext.as_deref() {
            Some("csv") => InputFormat::Csv,
            Some("tsv" | "tab" | "txt") => InputFormat::Tsv,
            _ if first_line.contains('\t') => InputFormat::Tsv,
            _ => InputFormat::Csv,
        }
    }
}

impl std::str::FromStr for InputFormat {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(InputFormat::Csv),
            "tsv" => Ok(InputFormat::Tsv),
            other => Err(format!("unknown input format `{other}` (expected csv or tsv)")),
        }
    }
}

/// A parsed delimited file, before any column mapping.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Table {
    pub name: String,
    pub format: InputFormat,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

/// Parses CSV (RFC 4180 quoting) or TSV bytes. A UTF-8 byte order mark
/// is ignored and invalid UTF-8 is replaced rather than rejected.
pub fn read_table(name: &str, bytes: &[u8], format: Option<InputFormat>) -> Result<Table, IngestError> {
    let text = String::from_utf8_lossy(bytes);
    let text = text.strip_prefix('\u{feff}').unwrap_or(&text);
    let format = format.unwrap_or_else(|| InputFormat::detect(name, text.lines().next().unwrap_or("")));
    let mut builder = csv::ReaderBuilder::new();
    builder.has_headers(true).flexible(false);
    match format {
        InputFormat::Csv => builder.delimiter(b','),
        InputFormat::Tsv => builder.delimiter(b'\t').quoting(false),
    };
    let mut reader = builder.from_reader(text.as_bytes());
    let malformed = |e: csv::Error| {
        let row = e.position().map(|p| p.record() as usize).unwrap_or(0);
        IngestError::Malformed {
            file: name.to_string(),
            row,
            message: e.to_string(),
        }
    };
    let header: Vec<String> = reader
        .headers()
        .map_err(malformed)?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    if header.is_empty() || header.iter().all(String::is_empty) {
        return Err(IngestError::HeaderMissing { file: name.to_string() });
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(malformed)?;
        rows.push(record.iter().map(str::to_string).collect());
    }
    Ok(Table {
        name: name.to_string(),
        format,
        header,
        rows,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SourceTable {
    pub name: String,
    pub header: Vec<String>,
    pub rows: usize,
    pub mapping: ColumnMapping,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct Diagnostics {
    pub rows: usize,
    pub unclassifiable: usize,
    pub warnings: Vec<String>,
}

/// Records from one or more files, concatenated in input order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Batch {
    pub sources: Vec<SourceTable>,
    pub records: Vec<PaperRecord>,
    /// Mapping proposed for the union of all headers.
    pub mapping: ColumnMapping,
    pub diagnostics: Diagnostics,
}

/// Column names of all tables in first-seen order, without duplicates.
pub(crate) fn union_header(tables: &[SourceTable]) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for t in tables {
        for h in &t.header {
            if !out.contains(h) {
                out.push(h.clone());
            }
        }
    }
    out
}

impl Batch {
    /// Maps columns and builds records.
    ///
    /// With [`MappingRequest::Auto`] a role whose detected column is absent
    /// from one file is left unbound for that file. Manually mapped
    /// columns must exist in every file.
    pub fn from_tables(tables: Vec<Table>, request: &MappingRequest) -> Result<Batch, IngestError> {
        let mut sources = Vec::with_capacity(tables.len());
        let mut records = Vec::new();
        let mut diagnostics = Diagnostics::default();

        let headers: Vec<SourceTable> = tables
            .iter()
            .map(|t| SourceTable {
                name: t.name.clone(),
                header: t.header.clone(),
                rows: t.rows.len(),
                mapping: ColumnMapping::default(),
            })
            .collect();
        let union = union_header(&headers);
        let proposed = request.resolve(&union).map_err(|message| IngestError::Mapping {
            file: tables.first().map(|t| t.name.clone()).unwrap_or_default(),
            message,
        })?;

        for (source, table) in tables.into_iter().enumerate() {
            for (i, h) in table.header.iter().enumerate() {
                if table.header[..i].contains(h) {
                    diagnostics
                        .warnings
                        .push(format!("{}: duplicate column `{h}`, first occurrence used", table.name));
                }
            }
            let mut mapping = proposed.clone();
            for role in Role::ALL {
                let Some(b) = proposed.get(role) else { continue };
                if !table.header.contains(&b.column) {
                    if matches!(request, MappingRequest::Manual(m) if m.contains_key(&role)) {
                        return Err(IngestError::Mapping {
                            file: table.name.clone(),
                            message: format!("mapped column `{}` for {role} is absent", b.column),
                        });
                    }
                    diagnostics.warnings.push(format!(
                        "{}: no `{}` column, {role} left unmapped",
                        table.name, b.column
                    ));
                    mapping.set(role, None);
                }
            }
            let idx = |role: Role| {
                mapping
                    .column(role)
                    .and_then(|c| table.header.iter().position(|h| h == c))
            };
            let role_idx: Vec<Option<usize>> = Role::ALL.into_iter().map(idx).collect();
            let row_count = table.rows.len();

            for (row_no, cells) in table.rows.into_iter().enumerate() {
                let get = |slot: usize| {
                    role_idx[slot]
                        .and_then(|i| cells.get(i))
                        .filter(|v| !v.trim().is_empty())
                        .cloned()
                };
                let passthrough = table
                    .header
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| !role_idx.contains(&Some(*i)))
                    .map(|(i, h)| (h.clone(), cells.get(i).cloned().unwrap_or_default()))
                    .collect();
                let record = PaperRecord {
                    index: records.len(),
                    source,
                    source_row: row_no,
                    title: get(0),
                    abstract_text: get(1),
                    author_keywords: get(2),
                    index_keywords: get(3),
                    passthrough,
                    cells,
                };
                if !record.is_classifiable() {
                    diagnostics.unclassifiable += 1;
                    diagnostics.warnings.push(format!(
                        "{} row {}: no title, abstract or keywords; unclassifiable",
                        table.name,
                        row_no + 1
                    ));
                }
                records.push(record);
            }
            sources.push(SourceTable {
                name: table.name,
                header: table.header,
                rows: row_count,
                mapping,
            });
        }
        diagnostics.rows = records.len();
        Ok(Batch {
            sources,
            records,
            mapping: proposed,
            diagnostics,
        })
    }

    /// Header of the combined output: the shared header when every file
    /// has the same one, otherwise the union of column names.
    pub fn output_header(&self) -> Vec<String> {
        match self.sources.split_first() {
            Some((first, rest)) if rest.iter().all(|s| s.header == first.header) => first.header.clone(),
            _ => union_header(&self.sources),
        }
    }

    /// The record's cells laid out against [`Self::output_header`].
    pub fn output_cells(&self, record: &PaperRecord) -> Vec<String> {
        let header = &self.sources[record.source].header;
        if self.sources.iter().all(|s| &s.header == header) {
            return record.cells.clone();
        }
        self.output_header()
            .iter()
            .map(|col| {
                header
                    .iter()
                    .position(|h| h == col)
                    .and_then(|i| record.cells.get(i))
                    .cloned()
                    .unwrap_or_default()
            })
            .collect()
    }

    /// Proposed mapping for a header without building records.
    pub fn propose(header: &[String]) -> ColumnMapping {
        detect_columns(header)
    }
}

/// Reads and maps one or more files from disk.
pub fn read_batch(
    paths: &[impl AsRef<Path>],
    format: Option<InputFormat>,
    request: &MappingRequest,
) -> Result<Batch, IngestError> {
    let mut tables = Vec::with_capacity(paths.len());
    for path in paths {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|source| IngestError::Io {
            file: path.display().to_string(),
            source,
        })?;
        let name = path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| path.display().to_string());
        tables.push(read_table(&name, &bytes, format)?);
    }
    Batch::from_tables(tables, request)
}
