use std::fmt;

use serde::{Deserialize, Serialize};

/// One word of a phrase, matched exactly or as a token prefix.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PhraseWord {
    pub text: String,
    pub prefix: bool,
}

/// Expression tree for one Boolean sub-query.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum QueryAst {
    Term(String),
    /// Stem of a trailing-wildcard word, without the `*`.
    Prefix(String),
    /// Two or more words matched at consecutive positions.
    Phrase(Vec<PhraseWord>),
    And(Vec<QueryAst>),
    Or(Vec<QueryAst>),
    Not(Box<QueryAst>),
}

/// A leaf of a query: the unit the matcher tests against a document.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Atom {
    Term(String),
    Prefix(String),
    Phrase(Vec<PhraseWord>),
}

impl QueryAst {
    /// Leaf atoms in left-to-right order, duplicates removed.
    pub fn atoms(&self) -> Vec<Atom> {
        let mut out = Vec::new();
        self.visit_leaves(&mut |atom| {
            if !out.contains(&atom) {
                out.push(atom);
            }
        });
        out
    }

    pub(crate) fn visit_leaves(&self, f: &mut impl FnMut(Atom)) {
        match self {
            QueryAst::Term(w) => f(Atom::Term(w.clone())),
            QueryAst::Prefix(p) => f(Atom::Prefix(p.clone())),
            QueryAst::Phrase(ws) => f(Atom::Phrase(ws.clone())),
            QueryAst::And(cs) | QueryAst::Or(cs) => cs.iter().for_each(|c| c.visit_leaves(f)),
            QueryAst::Not(c) => c.visit_leaves(f),
        }
    }

    /// True when the tree contains a NOT node anywhere.
    pub fn has_negation(&self) -> bool {
        match self {
            QueryAst::Not(_) => true,
            QueryAst::And(cs) | QueryAst::Or(cs) => cs.iter().any(QueryAst::has_negation),
            _ => false,
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            QueryAst::And(cs) | QueryAst::Or(cs) => 1 + cs.iter().map(QueryAst::depth).max().unwrap_or(0),
            QueryAst::Not(c) => 1 + c.depth(),
            _ => 1,
        }
    }

    /// Checks the structural invariants a parsed tree always satisfies.
    pub fn is_well_formed(&self) -> bool {
        fn word_ok(w: &str) -> bool {
            !w.is_empty() && w.chars().all(|c| c.is_alphanumeric() && !c.is_uppercase())
        }
        match self {
            QueryAst::Term(w) | QueryAst::Prefix(w) => word_ok(w),
            QueryAst::Phrase(ws) => ws.len() >= 2 && ws.iter().all(|w| word_ok(&w.text)),
            QueryAst::And(cs) | QueryAst::Or(cs) => cs.len() >= 2 && cs.iter().all(QueryAst::is_well_formed),
            QueryAst::Not(c) => c.is_well_formed(),
        }
    }
}

impl From<Atom> for QueryAst {
    fn from(atom: Atom) -> Self {
        match atom {
            Atom::Term(w) => QueryAst::Term(w),
            Atom::Prefix(p) => QueryAst::Prefix(p),
            Atom::Phrase(ws) => QueryAst::Phrase(ws),
        }
    }
}

fn is_keyword(w: &str) -> bool {
    matches!(w, "and" | "or" | "not")
}

impl fmt::Display for PhraseWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text)?;
        if self.prefix {
            f.write_str("*")?;
        }
        Ok(())
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Atom::Term(w) if is_keyword(w) => write!(f, "\"{w}\""),
            Atom::Term(w) => f.write_str(w),
            Atom::Prefix(p) => write!(f, "{p}*"),
            Atom::Phrase(ws) => {
                f.write_str("\"")?;
                for (i, w) in ws.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" ")?;
                    }
                    write!(f, "{w}")?;
                }
                f.write_str("\"")
            }
        }
    }
}

/// Prints in the query syntax; the output parses back to an equal tree.
impl fmt::Display for QueryAst {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn child(f: &mut fmt::Formatter<'_>, c: &QueryAst) -> fmt::Result {
            match c {
                QueryAst::And(_) | QueryAst::Or(_) => write!(f, "({c})"),
                _ => write!(f, "{c}"),
            }
        }
        match self {
            QueryAst::Term(w) => write!(f, "{}", Atom::Term(w.clone())),
            QueryAst::Prefix(p) => write!(f, "{p}*"),
            QueryAst::Phrase(ws) => write!(f, "{}", Atom::Phrase(ws.clone())),
            QueryAst::And(cs) | QueryAst::Or(cs) => {
                let op = if matches!(self, QueryAst::And(_)) {
                    " AND "
                } else {
                    " OR "
                };
                for (i, c) in cs.iter().enumerate() {
                    if i > 0 {
                        f.write_str(op)?;
                    }
                    child(f, c)?;
                }
                Ok(())
            }
            QueryAst::Not(c) => {
                f.write_str("NOT ")?;
                child(f, c)
            }
        }
    }
}
