use super::ParseError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LexemeKind {
    LParen,
    RParen,
    And,
    Or,
    Not,
    /// Content between double quotes, quotes removed.
    Quoted(String),
    Word(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lexeme {
    pub kind: LexemeKind,
    /// Byte offset of the lexeme's first character.
    pub offset: usize,
    /// Source text of the lexeme, including quotes.
    pub text: String,
}

fn is_word_char(c: char) -> bool {
    !(c.is_whitespace() || c == '(' || c == ')' || c == '"')
}

/// Splits a raw query string into lexemes.
///
/// `AND`, `OR` and `NOT` are recognized in any letter case; everything
/// else that is not whitespace, a parenthesis or a quoted string is a word.
pub fn tokenize_query(raw: &str) -> Result<Vec<Lexeme>, ParseError> {
    let mut out = Vec::new();
    let mut iter = raw.char_indices().peekable();
    while let Some(&(start, c)) = iter.peek() {
        if c.is_whitespace() {
            iter.next();
            continue;
        }
        let lexeme = match c {
            '(' | ')' => {
                iter.next();
                Lexeme {
                    kind: if c == '(' {
                        LexemeKind::LParen
                    } else {
                        LexemeKind::RParen
                    },
                    offset: start,
                    text: c.to_string(),
                }
            }
            '"' => {
                iter.next();
                let mut end = None;
                for (i, ch) in iter.by_ref() {
                    if ch == '"' {
                        end = Some(i);
                        break;
                    }
                }
                let Some(end) = end else {
                    return Err(ParseError::new(start, "unbalanced quote", "\""));
                };
                Lexeme {
                    kind: LexemeKind::Quoted(raw[start + 1..end].to_string()),
                    offset: start,
                    text: raw[start..=end].to_string(),
                }
            }
            _ => {
                let mut end = raw.len();
                while let Some(&(i, ch)) = iter.peek() {
                    if !is_word_char(ch) {
                        end = i;
                        break;
                    }
                    iter.next();
                }
                let text = &raw[start..end];
                let kind = if text.eq_ignore_ascii_case("and") {
                    LexemeKind::And
                } else if text.eq_ignore_ascii_case("or") {
                    LexemeKind::Or
                } else if text.eq_ignore_ascii_case("not") {
                    LexemeKind::Not
                } else {
                    LexemeKind::Word(text.to_string())
                };
                Lexeme {
                    kind,
                    offset: start,
                    text: text.to_string(),
                }
            }
        };
        out.push(lexeme);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(s: &str) -> Vec<LexemeKind> {
        tokenize_query(s).unwrap().into_iter().map(|l| l.kind).collect()
    }

    #[test]
    fn words_and_operators() {
        use LexemeKind::*;
        assert_eq!(
            kinds("poverty AND slum*"),
            [Word("poverty".into()), And, Word("slum*".into())]
        );
        assert_eq!(
            kinds("a or b aNd NoT c"),
            [Word("a".into()), Or, Word("b".into()), And, Not, Word("c".into())]
        );
    }

    #[test]
    fn quoted_strings_and_parens() {
        use LexemeKind::*;
        assert_eq!(kinds("\"social protection\""), [Quoted("social protection".into())]);
        assert_eq!(
            kinds("(a OR\"b c\")"),
            [LParen, Word("a".into()), Or, Quoted("b c".into()), RParen]
        );
    }

    #[test]
    fn unbalanced_quote_points_at_opening_quote() {
        let err = tokenize_query("poverty AND \"unterminated").unwrap_err();
        assert_eq!(err.offset, 12);
        assert_eq!(err.lexeme, "\"");
    }

    #[test]
    fn offsets_are_byte_offsets() {
        let lx = tokenize_query("é AND x").unwrap();
        assert_eq!(lx[1].offset, 3);
        assert_eq!(lx[2].offset, 7);
    }
}
