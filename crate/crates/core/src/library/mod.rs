//! SDG query libraries: loading, importing and compiling.

mod compile;
mod elsevier;
mod native;

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::query::{ParseError, QueryAst};
use crate::sdg::{SdgId, SDG_COUNT};

pub use compile::{AtomId, AtomSet, CompiledExpr, CompiledLibrary, CompiledSubQuery, PatternIndex};
pub use elsevier::{
    convert_scopus_query, import_elsevier, ConstructRecord, Conversion, DetectedColumns, Disposition, ImportError,
    ImportOptions, ImportReport, RejectedRow,
};
pub use native::{load_library, parse_native, NATIVE_HEADER};

/// One Boolean sub-query belonging to a goal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubQuery {
    pub id: String,
    pub sdg: SdgId,
    pub label: String,
    pub raw: String,
    pub ast: QueryAst,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LibraryWarning {
    EmptySdg { sdg: SdgId },
}

impl std::fmt::Display for LibraryWarning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            LibraryWarning::EmptySdg { sdg } => write!(f, "SDG {sdg} has no sub-queries"),
        }
    }
}

/// A problem with one row of a query file.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RowError {
    #[error("line {line}: malformed row: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("line {line}: sdg-id out of range: `{value}`")]
    SdgOutOfRange { line: usize, value: String },
    #[error("line {line}: duplicate subquery-id `{id}`")]
    DuplicateId { line: usize, id: String },
    #[error("line {line}: subquery `{id}`: {error}")]
    Query { line: usize, id: String, error: ParseError },
}

#[derive(Debug, thiserror::Error)]
pub enum LibraryError {
    #[error("cannot read query library {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("query library {name}: missing header row `{expected}`")]
    MissingHeader { name: String, expected: String },
    #[error("query library {name}: {} invalid row(s):\n{}", .errors.len(), format_rows(.errors))]
    Rows { name: String, errors: Vec<RowError> },
}

fn format_rows(errors: &[RowError]) -> String {
    errors.iter().map(|e| format!("  {e}")).collect::<Vec<_>>().join("\n")
}

/// All sub-queries of all seventeen goals.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueryLibrary {
    name: String,
    version: String,
    by_sdg: Vec<Vec<SubQuery>>,
}

impl QueryLibrary {
    /// Builds a library, rejecting duplicate sub-query ids.
    pub fn new(
        name: impl Into<String>,
        version: impl Into<String>,
        subqueries: impl IntoIterator<Item = SubQuery>,
    ) -> Result<Self, String> {
        let mut by_sdg = vec![Vec::new(); SDG_COUNT];
        let mut seen = HashSet::new();
        for sq in subqueries {
            if !seen.insert(sq.id.clone()) {
                return Err(format!("duplicate subquery-id `{}`", sq.id));
            }
            by_sdg[sq.sdg.index()].push(sq);
        }
        Ok(QueryLibrary {
            name: name.into(),
            version: version.into(),
            by_sdg,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn version(&self) -> &str {
        &self.version
    }

    /// `name@version`, echoed into classification output.
    pub fn provenance(&self) -> String {
        format!("{}@{}", self.name, self.version)
    }

    pub fn subqueries_for(&self, sdg: SdgId) -> &[SubQuery] {
        &self.by_sdg[sdg.index()]
    }

    /// Number of sub-queries defined for `sdg`.
    pub fn total(&self, sdg: SdgId) -> usize {
        self.by_sdg[sdg.index()].len()
    }

    pub fn totals(&self) -> [usize; SDG_COUNT] {
        std::array::from_fn(|i| self.by_sdg[i].len())
    }

    /// All sub-queries, goal by goal, each goal in file order.
    pub fn iter(&self) -> impl Iterator<Item = &SubQuery> {
        self.by_sdg.iter().flatten()
    }

    pub fn len(&self) -> usize {
        self.by_sdg.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, id: &str) -> Option<&SubQuery> {
        self.iter().find(|sq| sq.id == id)
    }

    pub fn warnings(&self) -> Vec<LibraryWarning> {
        SdgId::all()
            .filter(|s| self.total(*s) == 0)
            .map(|sdg| LibraryWarning::EmptySdg { sdg })
            .collect()
    }

    /// Serializes to the native TSV format.
    pub fn to_native_tsv(&self) -> String {
        native::write_native(self)
    }

    pub fn write_native(&self, path: &Path) -> std::io::Result<()> {
        std::fs::write(path, self.to_native_tsv())
    }
}
