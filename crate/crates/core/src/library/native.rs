//! Native query file: UTF-8 TSV, LF line endings, one sub-query per row.
//!
//! ```text
//! # name: demo
//! # version: 2024-01
//! sdg_id	subquery_id	label	query
//! 1	SDG01-001	poverty eradication	poverty AND (alleviat* OR eradicat*)
//! ```
//!
//! Lines starting with `#` are comments. `# name:` and `# version:`
//! comments set the library metadata; without them the name is the file
//! stem and the version is derived from a hash of the file contents.

// The example above needs real tabs.
#![allow(clippy::tabs_in_doc_comments)]

use std::collections::HashSet;
use std::path::Path;

use sha2::{Digest, Sha256};

use super::{LibraryError, QueryLibrary, RowError, SubQuery};
use crate::query::parse_query;
use crate::sdg::SdgId;

pub const NATIVE_HEADER: &str = "sdg_id\tsubquery_id\tlabel\tquery";

pub fn load_library(path: &Path) -> Result<QueryLibrary, LibraryError> {
    let bytes = std::fs::read(path).map_err(|source| LibraryError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let text = String::from_utf8_lossy(&bytes);
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "library".to_string());
    parse_native(&text, &stem)
}

fn content_version(text: &str) -> String {
    let digest = Sha256::digest(text.as_bytes());
    format!("sha256-{}", &hex::encode(digest)[..12])
}

/// Parses native TSV text; every failing row is reported, not just the first.
pub fn parse_native(text: &str, default_name: &str) -> Result<QueryLibrary, LibraryError> {
    let text = text.strip_prefix('\u{feff}').unwrap_or(text);
    let mut name = None;
    let mut version = None;
    let mut header_seen = false;
    let mut errors = Vec::new();
    let mut subqueries = Vec::new();
    let mut ids = HashSet::new();

    for (i, line) in text.split('\n').enumerate() {
        let line_no = i + 1;
        let line = line.strip_suffix('\r').unwrap_or(line);
        if let Some(comment) = line.strip_prefix('#') {
            let comment = comment.trim();
            if let Some(v) = comment.strip_prefix("name:") {
                name.get_or_insert_with(|| v.trim().to_string());
            } else if let Some(v) = comment.strip_prefix("version:") {
                version.get_or_insert_with(|| v.trim().to_string());
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        if !header_seen {
            if line != NATIVE_HEADER {
                return Err(LibraryError::MissingHeader {
                    name: default_name.to_string(),
                    expected: NATIVE_HEADER.replace('\t', "<TAB>"),
                });
            }
            header_seen = true;
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 4 {
            errors.push(RowError::Malformed {
                line: line_no,
                reason: format!("expected 4 tab-separated fields, found {}", fields.len()),
            });
            continue;
        }
        let (sdg_raw, id, label, raw) = (fields[0].trim(), fields[1].trim(), fields[2], fields[3]);
        let sdg = match sdg_raw.parse::<i64>() {
            Ok(n) => match SdgId::try_from(n) {
                Ok(s) => s,
                Err(_) => {
                    errors.push(RowError::SdgOutOfRange {
                        line: line_no,
                        value: sdg_raw.to_string(),
                    });
                    continue;
                }
            },
            Err(_) => {
                errors.push(RowError::Malformed {
                    line: line_no,
                    reason: format!("sdg_id `{sdg_raw}` is not an integer"),
                });
                continue;
            }
        };
        if id.is_empty() {
            errors.push(RowError::Malformed {
                line: line_no,
                reason: "empty subquery_id".into(),
            });
            continue;
        }
        if !ids.insert(id.to_string()) {
            errors.push(RowError::DuplicateId {
                line: line_no,
                id: id.to_string(),
            });
            continue;
        }
        match parse_query(raw) {
            Ok(ast) => subqueries.push(SubQuery {
                id: id.to_string(),
                sdg,
                label: label.to_string(),
                raw: raw.to_string(),
                ast,
            }),
            Err(error) => errors.push(RowError::Query {
                line: line_no,
                id: id.to_string(),
                error,
            }),
        }
    }

    if !header_seen {
        return Err(LibraryError::MissingHeader {
            name: default_name.to_string(),
            expected: NATIVE_HEADER.replace('\t', "<TAB>"),
        });
    }
    let name = name.unwrap_or_else(|| default_name.to_string());
    if !errors.is_empty() {
        return Err(LibraryError::Rows { name, errors });
    }
    let version = version.unwrap_or_else(|| content_version(text));
    let lib = QueryLibrary::new(name, version, subqueries).expect("ids checked above");
    for w in lib.warnings() {
        log::warn!("{}: {w}", lib.name());
    }
    Ok(lib)
}

fn one_line(s: &str) -> String {
    s.replace(['\t', '\r', '\n'], " ")
}

pub(super) fn write_native(lib: &QueryLibrary) -> String {
    let mut out = String::new();
    out.push_str(&format!("# name: {}\n", one_line(lib.name())));
    out.push_str(&format!("# version: {}\n", one_line(lib.version())));
    out.push_str(NATIVE_HEADER);
    out.push('\n');
    for sq in lib.iter() {
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\n",
            sq.sdg,
            one_line(&sq.id),
            one_line(&sq.label),
            one_line(&sq.raw)
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::query::ParseError;

    fn tsv(rows: &[&str]) -> String {
        let mut s = format!("{NATIVE_HEADER}\n");
        for r in rows {
            s.push_str(r);
            s.push('\n');
        }
        s
    }

    #[test]
    fn counts_per_sdg() {
        let lib = parse_native(
            &tsv(&[
                "1\ta\tpoverty\tpoverty",
                "1\tb\t\tslum*",
                "4\tc\teducation\tschool AND teach*",
            ]),
            "t",
        )
        .unwrap();
        let sdg = |n| SdgId::new(n).unwrap();
        assert_eq!(lib.total(sdg(1)), 2);
        assert_eq!(lib.total(sdg(4)), 1);
        assert_eq!(lib.total(sdg(2)), 0);
        assert_eq!(lib.warnings().len(), 15);
        assert_eq!(lib.name(), "t");
        assert!(lib.version().starts_with("sha256-"));
    }

    #[test]
    fn comments_metadata_and_crlf() {
        let text = "# name: demo\r\n# version: v1\r\n# a comment\r\nsdg_id\tsubquery_id\tlabel\tquery\r\n\r\n2\tx\t\thunger\r\n";
        let lib = parse_native(text, "file").unwrap();
        assert_eq!(lib.provenance(), "demo@v1");
        assert_eq!(lib.len(), 1);
        assert_eq!(lib.get("x").unwrap().raw, "hunger");
    }

    #[test]
    fn every_bad_row_is_reported() {
        let err = parse_native(
            &tsv(&[
                "18\ta\t\tpoverty",
                "1\tb\t\tpover*ty",
                "1\tc\t\tx",
                "1\tc\t\ty",
                "1\tonly-three\tfields",
            ]),
            "t",
        )
        .unwrap_err();
        let LibraryError::Rows { errors, .. } = err else {
            panic!("expected row errors")
        };
        assert_eq!(errors.len(), 4);
        assert!(matches!(&errors[0], RowError::SdgOutOfRange { value, .. } if value == "18"));
        assert!(matches!(&errors[1], RowError::Query { id, error: ParseError { offset: 5, .. }, .. } if id == "b"));
        assert!(matches!(&errors[2], RowError::DuplicateId { id, line: 5 } if id == "c"));
        assert!(matches!(&errors[3], RowError::Malformed { .. }));
        assert!(format!(
            "{}",
            LibraryError::Rows {
                name: "t".into(),
                errors
            }
        )
        .contains("sdg-id out of range"));
    }

    #[test]
    fn header_is_required() {
        assert!(matches!(
            parse_native("1\ta\t\tx\n", "t"),
            Err(LibraryError::MissingHeader { .. })
        ));
        assert!(matches!(parse_native("", "t"), Err(LibraryError::MissingHeader { .. })));
    }

    #[test]
    fn write_then_parse_is_identity() {
        let lib = parse_native(
            &tsv(&[
                "4\tq1\tschools\t\"primary school*\" AND teacher",
                "1\tq0\t\tpoverty OR poor",
            ]),
            "t",
        )
        .unwrap();
        let text = lib.to_native_tsv();
        assert!(text.contains("\n4\tq1\tschools\t\"primary school*\" AND teacher\n"));
        assert_eq!(parse_native(&text, "other").unwrap(), lib);
    }

    #[test]
    fn missing_file_is_an_io_error() {
        let err = load_library(Path::new("/definitely/not/here.tsv")).unwrap_err();
        assert!(matches!(err, LibraryError::Io { .. }));
    }
}
