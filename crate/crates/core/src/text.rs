//! Document normalization and atom matching.
//!
//! Preprocessing is intentionally light: lowercase, every non-alphanumeric
//! character becomes a separator, no stopwords, no stemming. Accented
//! letters are folded to their base letter when a compatibility
//! decomposition exists.

use std::collections::HashMap;

use unicode_normalization::char::is_combining_mark;
use unicode_normalization::UnicodeNormalization;

use crate::query::{Atom, PhraseWord};

/// A lowercased token sequence with a positional index.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct NormalizedDoc {
    tokens: Vec<String>,
    positions: HashMap<String, Vec<u32>>,
    source_len: usize,
}

impl NormalizedDoc {
    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    /// Positions of `token` in increasing order, empty when absent.
    pub fn positions(&self, token: &str) -> &[u32] {
        self.positions.get(token).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Distinct tokens of the document, in no particular order.
    pub fn vocabulary(&self) -> impl Iterator<Item = &str> {
        self.positions.keys().map(String::as_str)
    }

    /// Character length of the text this document was built from.
    pub fn source_len(&self) -> usize {
        self.source_len
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

/// Normalizes raw text into a [`NormalizedDoc`].
pub fn normalize(text: &str) -> NormalizedDoc {
    let tokens = tokenize(text);
    let mut positions: HashMap<String, Vec<u32>> = HashMap::with_capacity(tokens.len());
    for (i, tok) in tokens.iter().enumerate() {
        match positions.get_mut(tok.as_str()) {
            Some(list) => list.push(i as u32),
            None => {
                positions.insert(tok.clone(), vec![i as u32]);
            }
        }
    }
    NormalizedDoc {
        tokens,
        positions,
        source_len: text.chars().count(),
    }
}

/// The token list [`normalize`] would produce, without building the index.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    let mut current = String::new();
    for c in text.chars() {
        if c.is_ascii() {
            if c.is_ascii_alphanumeric() {
                current.push(c.to_ascii_lowercase());
            } else {
                flush(&mut current, &mut tokens);
            }
        } else {
            fold_char(c, &mut current, &mut tokens);
        }
    }
    flush(&mut current, &mut tokens);
    tokens
}

fn flush(current: &mut String, tokens: &mut Vec<String>) {
    if !current.is_empty() {
        tokens.push(std::mem::take(current));
    }
}

// decompose, drop marks, lowercase, decompose again
fn fold_char(c: char, current: &mut String, tokens: &mut Vec<String>) {
    for d in std::iter::once(c).nfkd().filter(|d| !is_combining_mark(*d)) {
        for l in d.to_lowercase() {
            for e in std::iter::once(l).nfkd().filter(|e| !is_combining_mark(*e)) {
                if is_token_char(e) {
                    current.push(e);
                } else {
                    flush(current, tokens);
                }
            }
        }
    }
}

// Chars that survive normalization unchanged.
fn is_token_char(c: char) -> bool {
    if !c.is_alphanumeric() || c.is_uppercase() {
        return false;
    }
    let mut lower = c.to_lowercase();
    lower.next() == Some(c) && lower.next().is_none()
}

fn word_matches(word: &PhraseWord, token: &str) -> bool {
    if word.prefix {
        token.starts_with(word.text.as_str())
    } else {
        token == word.text
    }
}

/// True when `atom` occurs in `doc`.
///
/// Terms match a whole token, prefixes match the start of a token, and
/// phrases match word-by-word at consecutive positions.
pub fn match_atom(doc: &NormalizedDoc, atom: &Atom) -> bool {
    match atom {
        Atom::Term(w) => doc.positions.contains_key(w.as_str()),
        Atom::Prefix(p) => doc.positions.keys().any(|t| t.starts_with(p.as_str())),
        Atom::Phrase(words) => {
            let Some((first, rest)) = words.split_first() else {
                return false;
            };
            let n = doc.tokens.len();
            if words.len() > n {
                return false;
            }
            let check = |start: usize| {
                start + words.len() <= n
                    && rest
                        .iter()
                        .enumerate()
                        .all(|(j, w)| word_matches(w, &doc.tokens[start + 1 + j]))
            };
            if first.prefix {
                (0..n).any(|i| word_matches(first, &doc.tokens[i]) && check(i))
            } else {
                doc.positions(&first.text).iter().any(|&i| check(i as usize))
            }
        }
    }
}
