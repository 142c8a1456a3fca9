//! Header heuristics binding input columns to the four metadata roles.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Title,
    Abstract,
    AuthorKeywords,
    IndexKeywords,
}

impl Role {
    /// Roles in consolidation order.
    pub const ALL: [Role; 4] = [Role::Title, Role::Abstract, Role::AuthorKeywords, Role::IndexKeywords];

    pub fn key(self) -> &'static str {
        match self {
            Role::Title => "title",
            Role::Abstract => "abstract",
            Role::AuthorKeywords => "author_keywords",
            Role::IndexKeywords => "index_keywords",
        }
    }

    fn slot(self) -> usize {
        self as usize
    }

    fn exact_names(self) -> &'static [&'static str] {
        match self {
            Role::Title => &["title"],
            Role::Abstract => &["abstract"],
            Role::AuthorKeywords => &["author keywords", "author_keywords", "authkeywords"],
            Role::IndexKeywords => &["index keywords", "index_keywords", "indexterms", "keywords plus"],
        }
    }

    // Web of Science field tags
    fn wos_tag(self) -> &'static str {
        match self {
            Role::Title => "TI",
            Role::Abstract => "AB",
            Role::AuthorKeywords => "DE",
            Role::IndexKeywords => "ID",
        }
    }

    fn keyword(self) -> &'static str {
        match self {
            Role::Title => "title",
            Role::Abstract => "abstract",
            Role::AuthorKeywords => "author keyword",
            Role::IndexKeywords => "index keyword",
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

impl FromStr for Role {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let k = s.trim().to_ascii_lowercase().replace([' ', '-'], "_");
        Role::ALL
            .into_iter()
            .find(|r| r.key() == k)
            .ok_or_else(|| format!("unknown role `{s}` (expected title, abstract, author_keywords, index_keywords)"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Provenance {
    Auto,
    Manual,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Binding {
    pub column: String,
    pub provenance: Provenance,
}

/// Source column (or none) for each metadata role.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ColumnMapping {
    slots: [Option<Binding>; 4],
}

impl ColumnMapping {
    pub fn get(&self, role: Role) -> Option<&Binding> {
        self.slots[role.slot()].as_ref()
    }

    pub fn column(&self, role: Role) -> Option<&str> {
        self.get(role).map(|b| b.column.as_str())
    }

    pub fn set(&mut self, role: Role, binding: Option<Binding>) {
        self.slots[role.slot()] = binding;
    }

    pub fn iter(&self) -> impl Iterator<Item = (Role, Option<&Binding>)> {
        Role::ALL.into_iter().map(move |r| (r, self.get(r)))
    }

    pub fn is_empty(&self) -> bool {
        self.slots.iter().all(Option::is_none)
    }

    /// Checks that mapped columns exist and no column serves two roles.
    pub fn validate(&self, header: &[String]) -> Result<(), String> {
        let mut seen: Vec<&str> = Vec::new();
        for (role, binding) in self.iter() {
            let Some(b) = binding else { continue };
            if !header.iter().any(|h| h == &b.column) {
                return Err(format!("column `{}` mapped to {role} is not in the header", b.column));
            }
            if seen.contains(&b.column.as_str()) {
                return Err(format!("column `{}` is mapped to more than one role", b.column));
            }
            seen.push(&b.column);
        }
        Ok(())
    }
}

impl Serialize for ColumnMapping {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let map: BTreeMap<&str, Option<&Binding>> = self.iter().map(|(r, b)| (r.key(), b)).collect();
        map.serialize(s)
    }
}

/// Binds roles to columns by header name alone.
///
/// Exact role names win over substring matches; within a tier the first
/// column in header order wins. Title substring matching skips columns
/// that also mention "source" or "conference" so Scopus's `Source title`
/// is never taken for the paper title.
pub fn detect_columns(header: &[String]) -> ColumnMapping {
    let lower: Vec<String> = header.iter().map(|h| h.trim().to_lowercase()).collect();
    let wos = header.iter().any(|h| h.trim() == "TI") && header.iter().any(|h| h.trim() == "AB");
    let mut mapping = ColumnMapping::default();
    let mut used = vec![false; header.len()];
    let bind = |mapping: &mut ColumnMapping, role: Role, i: usize, used: &mut Vec<bool>| {
        used[i] = true;
        mapping.set(
            role,
            Some(Binding {
                column: header[i].clone(),
                provenance: Provenance::Auto,
            }),
        );
    };

    for role in Role::ALL {
        let hit = (0..header.len()).find(|&i| {
            !used[i] && (role.exact_names().contains(&lower[i].as_str()) || (wos && header[i].trim() == role.wos_tag()))
        });
        if let Some(i) = hit {
            bind(&mut mapping, role, i, &mut used);
        }
    }
    for role in Role::ALL {
        if mapping.get(role).is_some() {
            continue;
        }
        let hit = (0..header.len()).find(|&i| {
            let h = lower[i].replace('_', " ");
            !used[i]
                && h.contains(role.keyword())
                && !(role == Role::Title && (h.contains("source") || h.contains("conference")))
        });
        if let Some(i) = hit {
            bind(&mut mapping, role, i, &mut used);
        }
    }
    mapping
}

/// How the caller wants columns bound.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub enum MappingRequest {
    #[default]
    Auto,
    /// Explicit bindings; roles absent from the map are auto-detected,
    /// roles mapped to `None` stay unbound.
    Manual(BTreeMap<Role, Option<String>>),
}

impl MappingRequest {
    /// Parses `title=Title,abstract=Abstract,index_keywords=none`.
    pub fn parse(spec: &str) -> Result<Self, String> {
        let mut map = BTreeMap::new();
        for part in spec.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (role, column) = part
                .split_once('=')
                .ok_or_else(|| format!("mapping entry `{part}` is not role=column"))?;
            let role: Role = role.parse()?;
            let column = column.trim();
            let value = if column.is_empty() || column.eq_ignore_ascii_case("none") {
                None
            } else {
                Some(column.to_string())
            };
            if map.insert(role, value).is_some() {
                return Err(format!("role {role} mapped twice"));
            }
        }
        Ok(MappingRequest::Manual(map))
    }

    /// The mapping this request yields for `header`.
    pub fn resolve(&self, header: &[String]) -> Result<ColumnMapping, String> {
        let mut mapping = detect_columns(header);
        if let MappingRequest::Manual(manual) = self {
            for (role, column) in manual {
                mapping.set(
                    *role,
                    column.clone().map(|column| Binding {
                        column,
                        provenance: Provenance::Manual,
                    }),
                );
            }
            // an auto binding may now collide with a manual one
            for role in Role::ALL {
                let auto = matches!(mapping.get(role), Some(b) if b.provenance == Provenance::Auto);
                if auto {
                    let col = mapping.column(role).map(str::to_string);
                    let clash = Role::ALL.into_iter().any(|r| {
                        r != role && matches!(mapping.get(r), Some(b) if b.provenance == Provenance::Manual && Some(&b.column) == col.as_ref())
                    });
                    if clash {
                        mapping.set(role, None);
                    }
                }
            }
        }
        mapping.validate(header)?;
        Ok(mapping)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn h(cols: &[&str]) -> Vec<String> {
        cols.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn scopus_header_maps_all_four() {
        let m = detect_columns(&h(&["Title", "Abstract", "Author Keywords", "Index Keywords"]));
        for role in Role::ALL {
            assert_eq!(m.get(role).unwrap().provenance, Provenance::Auto);
        }
        assert_eq!(m.column(Role::AuthorKeywords), Some("Author Keywords"));
    }

    #[test]
    fn exact_title_beats_source_title() {
        let m = detect_columns(&h(&["Source title", "Title", "Abstract"]));
        assert_eq!(m.column(Role::Title), Some("Title"));
        let m = detect_columns(&h(&["Source title", "Conference title", "Abstract"]));
        assert_eq!(m.column(Role::Title), None);
        let m = detect_columns(&h(&["Source Title", "Article Title"]));
        assert_eq!(m.column(Role::Title), Some("Article Title"));
    }

    #[test]
    fn nothing_recognizable() {
        assert!(detect_columns(&h(&["DOI", "Year"])).is_empty());
    }

    #[test]
    fn substring_match_is_case_insensitive() {
        let m = detect_columns(&h(&["EID", "PAPER ABSTRACT TEXT", "author_keywords_list"]));
        assert_eq!(m.column(Role::Abstract), Some("PAPER ABSTRACT TEXT"));
        assert_eq!(m.column(Role::AuthorKeywords), Some("author_keywords_list"));
    }

    #[test]
    fn web_of_science_tags() {
        let m = detect_columns(&h(&["PT", "AU", "TI", "SO", "DE", "ID", "AB", "UT"]));
        assert_eq!(m.column(Role::Title), Some("TI"));
        assert_eq!(m.column(Role::Abstract), Some("AB"));
        assert_eq!(m.column(Role::AuthorKeywords), Some("DE"));
        assert_eq!(m.column(Role::IndexKeywords), Some("ID"));
        // a plain ID column is not keywords outside a WoS export
        assert!(detect_columns(&h(&["ID", "Title"]))
            .column(Role::IndexKeywords)
            .is_none());
    }

    #[test]
    fn duplicate_headers_bind_first() {
        let m = detect_columns(&h(&["Abstract", "Abstract"]));
        assert_eq!(m.column(Role::Abstract), Some("Abstract"));
    }

    #[test]
    fn manual_mapping_overrides_and_validates() {
        let header = h(&["Title", "Abstract", "Summary"]);
        let req = MappingRequest::parse("abstract=Summary").unwrap();
        let m = req.resolve(&header).unwrap();
        assert_eq!(m.column(Role::Abstract), Some("Summary"));
        assert_eq!(m.get(Role::Abstract).unwrap().provenance, Provenance::Manual);
        assert_eq!(m.column(Role::Title), Some("Title"));

        let req = MappingRequest::parse("abstract=Title").unwrap();
        let m = req.resolve(&header).unwrap();
        assert_eq!(m.column(Role::Title), None);

        assert!(MappingRequest::parse("abstract=Missing")
            .unwrap()
            .resolve(&header)
            .is_err());
        assert!(MappingRequest::parse("title=Title,abstract=Title")
            .unwrap()
            .resolve(&header)
            .is_err());
        assert!(MappingRequest::parse("colour=Title").is_err());
        assert!(MappingRequest::parse("title").is_err());
        let none = MappingRequest::parse("title=none").unwrap().resolve(&header).unwrap();
        assert_eq!(none.column(Role::Title), None);
    }

    #[test]
    fn serializes_by_role_key() {
        let m = detect_columns(&h(&["Title"]));
        let v = serde_json::to_value(&m).unwrap();
        assert_eq!(v["title"]["column"], "Title");
        assert_eq!(v["title"]["provenance"], "AUTO");
        assert!(v["abstract"].is_null());
    }
}
