//! Bibliographic exports: reading, column mapping and consolidation.

mod columns;
mod reader;

use serde::Serialize;

pub use columns::{detect_columns, Binding, ColumnMapping, MappingRequest, Provenance, Role};
pub use reader::{read_batch, read_table, Batch, Diagnostics, InputFormat, SourceTable, Table};

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("cannot read {file}: {source}")]
    Io {
        file: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{file}: header row missing")]
    HeaderMissing { file: String },
    #[error("{file}: row {row}: {message}")]
    Malformed { file: String, row: usize, message: String },
    #[error("{file}: {message}")]
    Mapping { file: String, message: String },
}

/// One data row of a bibliographic export.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PaperRecord {
    /// 0-based position across the whole batch.
    pub index: usize,
    /// Which input file the row came from.
    pub source: usize,
    /// 0-based data row within that file.
    pub source_row: usize,
    pub title: Option<String>,
    #[serde(rename = "abstract")]
    pub abstract_text: Option<String>,
    pub author_keywords: Option<String>,
    pub index_keywords: Option<String>,
    /// Columns not bound to a role, in header order.
    pub passthrough: Vec<(String, String)>,
    #[serde(skip)]
    pub(crate) cells: Vec<String>,
}

impl PaperRecord {
    pub fn field(&self, role: Role) -> Option<&str> {
        match role {
            Role::Title => self.title.as_deref(),
            Role::Abstract => self.abstract_text.as_deref(),
            Role::AuthorKeywords => self.author_keywords.as_deref(),
            Role::IndexKeywords => self.index_keywords.as_deref(),
        }
    }

    /// At least one metadata field has content.
    pub fn is_classifiable(&self) -> bool {
        Role::ALL
            .into_iter()
            .any(|r| self.field(r).is_some_and(|v| !v.trim().is_empty()))
    }

    /// Raw cells in the column order of the source file.
    pub fn cells(&self) -> &[String] {
        &self.cells
    }

    /// A record built directly from the four fields, as the single-paper
    /// form submits them.
    pub fn from_fields(
        title: Option<String>,
        abstract_text: Option<String>,
        author_keywords: Option<String>,
        index_keywords: Option<String>,
    ) -> Self {
        PaperRecord {
            index: 0,
            source: 0,
            source_row: 0,
            title,
            abstract_text,
            author_keywords,
            index_keywords,
            passthrough: Vec::new(),
            cells: Vec::new(),
        }
    }
}

/// Joins title, abstract, author keywords and index keywords with single
/// spaces, skipping empty fields.
///
/// A phrase can therefore match across the boundary between two fields.
pub fn consolidate(record: &PaperRecord) -> String {
    let mut out = String::new();
    for role in Role::ALL {
        if let Some(v) = record.field(role).filter(|v| !v.trim().is_empty()) {
            if !out.is_empty() {
                out.push(' ');
            }
            out.push_str(v);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text::normalize;

    fn rec(t: Option<&str>, a: Option<&str>, ak: Option<&str>, ik: Option<&str>) -> PaperRecord {
        let s = |x: Option<&str>| x.map(str::to_string);
        PaperRecord::from_fields(s(t), s(a), s(ak), s(ik))
    }

    #[test]
    fn consolidation_order_and_skips() {
        assert_eq!(consolidate(&rec(Some("A"), Some("B"), None, None)), "A B");
        assert_eq!(consolidate(&rec(None, None, None, None)), "");
        assert_eq!(
            consolidate(&rec(Some("T"), Some(""), Some("k1"), Some("k2"))),
            "T k1 k2"
        );
        assert!(!rec(Some("  "), None, None, None).is_classifiable());
    }

    #[test]
    fn keyword_separators_survive_until_normalization() {
        let text = consolidate(&rec(None, None, Some("poverty; welfare"), None));
        assert!(text.contains("poverty; welfare"));
        assert_eq!(normalize(&text).tokens(), ["poverty", "welfare"]);
    }
}
