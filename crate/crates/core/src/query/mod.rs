//! The Boolean sub-query language: lexer, parser and expression tree.

mod ast;
mod lexer;
mod parser;

use std::fmt;

pub use ast::{Atom, PhraseWord, QueryAst};
pub use lexer::{tokenize_query, Lexeme, LexemeKind};
pub use parser::parse_query;

/// Why a query string failed to lex or parse.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub struct ParseError {
    /// Byte offset into the query string.
    pub offset: usize,
    pub message: String,
    pub lexeme: String,
}

impl ParseError {
    pub(crate) fn new(offset: usize, message: impl Into<String>, lexeme: impl Into<String>) -> Self {
        ParseError {
            offset,
            message: message.into(),
            lexeme: lexeme.into(),
        }
    }

    pub(crate) fn at(lx: &Lexeme, message: impl Into<String>) -> Self {
        ParseError::new(lx.offset, message, lx.text.clone())
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} at byte {}", self.message, self.offset)?;
        if !self.lexeme.is_empty() {
            write!(f, " near `{}`", self.lexeme)?;
        }
        Ok(())
    }
}

/// Index of an atom within one query's deduplicated atom list.
pub type LocalAtomId = usize;

/// Every leaf of `ast` with a stable id; repeated leaves share one entry.
pub fn ast_terms(ast: &QueryAst) -> Vec<(LocalAtomId, Atom)> {
    ast.atoms().into_iter().enumerate().collect()
}
