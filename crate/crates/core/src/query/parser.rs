//! Recursive descent parser.
//!
//! ```text
//! query := or
//! or    := and (OR and)*
//! and   := not (AND not)*
//! not   := NOT not | atom
//! atom  := '(' query ')' | QUOTED | WORD
//! ```

use super::lexer::{tokenize_query, Lexeme, LexemeKind};
use super::{ParseError, PhraseWord, QueryAst};
use crate::text;

const MAX_DEPTH: usize = 200;

/// Parses a raw query string into a validated expression tree.
pub fn parse_query(raw: &str) -> Result<QueryAst, ParseError> {
    let lexemes = tokenize_query(raw)?;
    if lexemes.is_empty() {
        return Err(ParseError::new(0, "empty query", ""));
    }
    let mut p = Parser {
        lexemes: &lexemes,
        pos: 0,
        depth: 0,
    };
    let ast = p.or()?;
    if let Some(lx) = p.peek() {
        let msg = match lx.kind {
            LexemeKind::RParen => "unbalanced parenthesis: unmatched ')'",
            LexemeKind::Word(_) | LexemeKind::Quoted(_) | LexemeKind::LParen | LexemeKind::Not => {
                "missing operator between terms"
            }
            _ => "unexpected operator",
        };
        return Err(ParseError::at(lx, msg));
    }
    Ok(ast)
}

struct Parser<'a> {
    lexemes: &'a [Lexeme],
    pos: usize,
    depth: usize,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&'a Lexeme> {
        self.lexemes.get(self.pos)
    }

    fn bump(&mut self) -> Option<&'a Lexeme> {
        let lx = self.lexemes.get(self.pos);
        self.pos += 1;
        lx
    }

    fn eat(&mut self, kind: &LexemeKind) -> bool {
        if self.peek().is_some_and(|lx| &lx.kind == kind) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn enter(&mut self) -> Result<(), ParseError> {
        self.depth += 1;
        if self.depth > MAX_DEPTH {
            let lx = &self.lexemes[self.pos.min(self.lexemes.len() - 1)];
            return Err(ParseError::at(lx, "query nested too deeply"));
        }
        Ok(())
    }

    fn or(&mut self) -> Result<QueryAst, ParseError> {
        let first = self.and()?;
        let mut children = vec![first];
        while self.eat(&LexemeKind::Or) {
            children.push(self.and()?);
        }
        Ok(collapse(children, QueryAst::Or))
    }

    fn and(&mut self) -> Result<QueryAst, ParseError> {
        let first = self.not()?;
        let mut children = vec![first];
        while self.eat(&LexemeKind::And) {
            children.push(self.not()?);
        }
        Ok(collapse(children, QueryAst::And))
    }

    fn not(&mut self) -> Result<QueryAst, ParseError> {
        if self.eat(&LexemeKind::Not) {
            self.enter()?;
            let inner = self.not()?;
            self.depth -= 1;
            return Ok(QueryAst::Not(Box::new(inner)));
        }
        self.atom()
    }

    fn atom(&mut self) -> Result<QueryAst, ParseError> {
        let Some(lx) = self.bump() else {
            let last = self.lexemes.last().expect("non-empty lexeme list");
            return Err(ParseError::at(
                last,
                "dangling operator: query ends where a term was expected",
            ));
        };
        match &lx.kind {
            LexemeKind::LParen => {
                self.enter()?;
                let inner = self.or()?;
                self.depth -= 1;
                match self.peek() {
                    Some(next) if next.kind == LexemeKind::RParen => self.pos += 1,
                    Some(next) => return Err(ParseError::at(next, "missing operator between terms")),
                    None => return Err(ParseError::at(lx, "unbalanced parenthesis: '(' is never closed")),
                }
                Ok(inner)
            }
            LexemeKind::Word(w) => leaf(convert_word(w, lx.offset)?, lx),
            LexemeKind::Quoted(content) => {
                let mut words = Vec::new();
                let base = lx.offset + 1;
                let mut cursor = 0;
                for part in content.split_whitespace() {
                    let at = cursor + content[cursor..].find(part).unwrap_or(0);
                    cursor = at + part.len();
                    words.extend(convert_word(part, base + at)?);
                }
                leaf(words, lx)
            }
            LexemeKind::RParen => Err(ParseError::at(lx, "unbalanced parenthesis: unexpected ')'")),
            LexemeKind::And | LexemeKind::Or => Err(ParseError::at(
                lx,
                "dangling operator: expected a term before this operator",
            )),
            LexemeKind::Not => unreachable!("NOT handled by the caller"),
        }
    }
}

fn collapse(mut children: Vec<QueryAst>, make: fn(Vec<QueryAst>) -> QueryAst) -> QueryAst {
    if children.len() == 1 {
        children.pop().expect("one child")
    } else {
        make(children)
    }
}

fn leaf(mut words: Vec<PhraseWord>, lx: &Lexeme) -> Result<QueryAst, ParseError> {
    match words.len() {
        0 => Err(ParseError::at(lx, "empty phrase")),
        1 => {
            let w = words.pop().expect("one word");
            Ok(if w.prefix {
                QueryAst::Prefix(w.text)
            } else {
                QueryAst::Term(w.text)
            })
        }
        _ => Ok(QueryAst::Phrase(words)),
    }
}

/// Turns one whitespace-free source word into normalized phrase words.
///
/// Words are normalized exactly like document text, so `low-income`
/// becomes the two-word sequence `low income`. A trailing `*` marks the
/// last resulting word as a prefix.
fn convert_word(raw: &str, offset: usize) -> Result<Vec<PhraseWord>, ParseError> {
    let (stem, prefix) = match raw.find('*') {
        Some(i) if i + 1 == raw.len() => (&raw[..i], true),
        Some(i) => {
            return Err(ParseError::new(
                offset + i,
                "wildcard '*' is only allowed at the end of a word",
                raw,
            ))
        }
        None => (raw, false),
    };
    let tokens = text::tokenize(stem);
    if tokens.is_empty() {
        let msg = if prefix {
            "wildcard needs a stem of letters or digits"
        } else {
            "word contains no letters or digits"
        };
        return Err(ParseError::new(offset, msg, raw));
    }
    let last = tokens.len() - 1;
    Ok(tokens
        .into_iter()
        .enumerate()
        .map(|(i, text)| PhraseWord {
            text,
            prefix: prefix && i == last,
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn term(w: &str) -> QueryAst {
        QueryAst::Term(w.into())
    }

    fn pw(t: &str, prefix: bool) -> PhraseWord {
        PhraseWord { text: t.into(), prefix }
    }

    #[test]
    fn nested_example() {
        let ast = parse_query("poverty AND (\"social protection\" OR inequalit*)").unwrap();
        assert_eq!(
            ast,
            QueryAst::And(vec![
                term("poverty"),
                QueryAst::Or(vec![
                    QueryAst::Phrase(vec![pw("social", false), pw("protection", false)]),
                    QueryAst::Prefix("inequalit".into()),
                ]),
            ])
        );
    }

    #[test]
    fn wildcard_and_single_word_quotes() {
        assert_eq!(parse_query("sustainab*").unwrap(), QueryAst::Prefix("sustainab".into()));
        assert_eq!(parse_query("\"Poverty\"").unwrap(), term("poverty"));
        assert_eq!(parse_query("\"slum*\"").unwrap(), QueryAst::Prefix("slum".into()));
        assert_eq!(parse_query("\"and\"").unwrap(), term("and"));
        assert_eq!(
            parse_query("\"girl* educat*\"").unwrap(),
            QueryAst::Phrase(vec![pw("girl", true), pw("educat", true)])
        );
    }

    #[test]
    fn precedence_and_associativity() {
        assert_eq!(
            parse_query("a OR b AND c").unwrap(),
            QueryAst::Or(vec![term("a"), QueryAst::And(vec![term("b"), term("c")])])
        );
        assert_eq!(
            parse_query("a AND b AND c").unwrap(),
            QueryAst::And(vec![term("a"), term("b"), term("c")])
        );
        assert_eq!(
            parse_query("a AND NOT b").unwrap(),
            QueryAst::And(vec![term("a"), QueryAst::Not(Box::new(term("b")))])
        );
        assert_eq!(
            parse_query("NOT a OR b").unwrap(),
            QueryAst::Or(vec![QueryAst::Not(Box::new(term("a"))), term("b")])
        );
    }

    #[test]
    fn hyphenated_words_become_phrases() {
        assert_eq!(
            parse_query("low-income").unwrap(),
            QueryAst::Phrase(vec![pw("low", false), pw("income", false)])
        );
        assert_eq!(
            parse_query("\"middle low-income countr*\"").unwrap(),
            QueryAst::Phrase(vec![
                pw("middle", false),
                pw("low", false),
                pw("income", false),
                pw("countr", true)
            ])
        );
    }

    #[test]
    fn errors() {
        let e = parse_query("pover*ty").unwrap_err();
        assert_eq!(e.offset, 5);
        assert!(e.message.contains("wildcard"));
        assert!(parse_query("   ").unwrap_err().message.contains("empty"));
        assert!(parse_query("a AND").unwrap_err().message.contains("dangling"));
        assert!(parse_query("OR a").unwrap_err().message.contains("dangling"));
        assert!(parse_query("(a OR b").unwrap_err().message.contains("parenthesis"));
        assert!(parse_query("a OR b)").unwrap_err().message.contains("parenthesis"));
        assert!(parse_query("a b").unwrap_err().message.contains("missing operator"));
        assert!(parse_query("a AND or").is_err());
        assert!(parse_query("*").unwrap_err().message.contains("stem"));
        assert!(parse_query("a AND \"\"").unwrap_err().message.contains("empty phrase"));
        assert!(parse_query("&&").is_err());
        assert!(parse_query("a AND NOT").is_err());
    }

    #[test]
    fn deep_nesting_is_an_error_not_a_crash() {
        let deep = format!("{}a{}", "(".repeat(5000), ")".repeat(5000));
        assert!(parse_query(&deep).unwrap_err().message.contains("deeply"));
        let nots = format!("{}a", "NOT ".repeat(5000));
        assert!(parse_query(&nots).is_err());
    }

    #[test]
    fn case_is_normalized() {
        assert_eq!(
            parse_query("Poverty AND X").unwrap(),
            parse_query("poverty and x").unwrap()
        );
    }

    proptest! {
        #[test]
        fn parser_is_total(s in "\\PC{0,40}") {
            match parse_query(&s) {
                Ok(ast) => prop_assert!(ast.is_well_formed()),
                Err(e) => prop_assert!(e.offset <= s.len()),
            }
        }

        #[test]
        fn parser_is_total_on_query_like_input(s in "([ab* ()\"]|AND|OR|NOT| ){0,30}") {
            let _ = parse_query(&s);
        }

        #[test]
        fn precedence_matches_explicit_grouping(a in "[a-m]{1,5}", b in "[n-z]{1,5}", c in "[0-9]{1,3}") {
            prop_assume!(!["and", "or", "not"].contains(&a.as_str()) && !["and", "or", "not"].contains(&b.as_str()));
            prop_assert_eq!(
                parse_query(&format!("{a} OR {b} AND {c}")).unwrap(),
                parse_query(&format!("{a} OR ({b} AND {c})")).unwrap()
            );
        }
    }
}
