//! Reference implementations and generators for testing the classifier.
//!
//! Everything here is deliberately naive: queries are interpreted straight
//! off the syntax tree by scanning the token list, with no atom table,
//! trie or phrase index, and ranking compares scores with plain integer
//! arithmetic. It is the yardstick the optimized engine is held to.

use rand::seq::SliceRandom;
use rand::Rng;

use sdgmap_core::library::{parse_native, QueryLibrary};
use sdgmap_core::query::PhraseWord;
use sdgmap_core::QueryAst;

fn word_matches(w: &PhraseWord, token: &str) -> bool {
    if w.prefix {
        token.starts_with(&w.text)
    } else {
        token == w.text
    }
}

/// Truth value of `ast` over `tokens`, by brute force.
pub fn eval(ast: &QueryAst, tokens: &[String]) -> bool {
    match ast {
        QueryAst::Term(t) => tokens.iter().any(|x| x == t),
        QueryAst::Prefix(p) => tokens.iter().any(|x| x.starts_with(p.as_str())),
        QueryAst::Phrase(words) => {
            tokens.len() >= words.len()
                && (0..=tokens.len() - words.len())
                    .any(|i| words.iter().zip(&tokens[i..]).all(|(w, t)| word_matches(w, t)))
        }
        QueryAst::And(xs) => xs.iter().all(|x| eval(x, tokens)),
        QueryAst::Or(xs) => xs.iter().any(|x| eval(x, tokens)),
        QueryAst::Not(x) => !eval(x, tokens),
    }
}

/// One goal as the reference ranks it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NaiveRanked {
    pub sdg: u8,
    pub matched: u64,
    pub total: u64,
    pub ids: Vec<String>,
}

/// Full ranking of every goal with a positive score, best first.
pub fn rank(lib: &QueryLibrary, tokens: &[String]) -> Vec<NaiveRanked> {
    let mut out = Vec::new();
    for sdg in 1..=17u8 {
        let id = sdg.try_into().unwrap();
        let subs = lib.subqueries_for(id);
        let ids: Vec<String> = subs
            .iter()
            .filter(|s| eval(&s.ast, tokens))
            .map(|s| s.id.clone())
            .collect();
        if !ids.is_empty() {
            out.push(NaiveRanked {
                sdg,
                matched: ids.len() as u64,
                total: subs.len() as u64,
                ids,
            });
        }
    }
    // a/b > c/d  <=>  a*d > c*b
    out.sort_by(|x, y| {
        (y.matched * x.total)
            .cmp(&(x.matched * y.total))
            .then(y.matched.cmp(&x.matched))
            .then(x.sdg.cmp(&y.sdg))
    });
    out
}

/// Lowercase ASCII words over a small alphabet, so prefixes collide often.
/// None of them is a query keyword.
pub fn vocabulary<R: Rng>(rng: &mut R, size: usize) -> Vec<String> {
    let mut words = Vec::with_capacity(size);
    while words.len() < size {
        let len = rng.gen_range(1..=4);
        let w: String = (0..len).map(|_| *b"abce".choose(rng).unwrap() as char).collect();
        if !words.contains(&w) {
            words.push(w);
        }
    }
    words
}

fn leaf<R: Rng>(rng: &mut R, vocab: &[String]) -> String {
    let word = |rng: &mut R| {
        let w = vocab.choose(rng).unwrap();
        if rng.gen_bool(0.25) {
            let cut = rng.gen_range(1..=w.len());
            format!("{}*", &w[..cut])
        } else {
            w.clone()
        }
    };
    if rng.gen_bool(0.2) {
        let n = rng.gen_range(2..=3);
        let words: Vec<String> = (0..n).map(|_| word(rng)).collect();
        format!("\"{}\"", words.join(" "))
    } else {
        word(rng)
    }
}

/// Random query text in the library syntax.
pub fn random_query<R: Rng>(rng: &mut R, vocab: &[String], depth: u32) -> String {
    if depth == 0 || rng.gen_bool(0.35) {
        return leaf(rng, vocab);
    }
    match rng.gen_range(0..4) {
        0 => format!("NOT {}", wrap(random_query(rng, vocab, depth - 1))),
        k => {
            let op = if k == 1 { " OR " } else { " AND " };
            let n = rng.gen_range(2..=3);
            let parts: Vec<String> = (0..n).map(|_| wrap(random_query(rng, vocab, depth - 1))).collect();
            parts.join(op)
        }
    }
}

fn wrap(q: String) -> String {
    format!("({q})")
}

/// Native-format library text with `n` sub-queries spread over random goals.
pub fn random_library_tsv<R: Rng>(rng: &mut R, vocab: &[String], n: usize) -> String {
    let mut out = String::from("sdg_id\tsubquery_id\tlabel\tquery\n");
    for i in 0..n {
        let sdg = rng.gen_range(1..=17);
        let q = random_query(rng, vocab, 3);
        out.push_str(&format!("{sdg}\tq{i}\tgenerated\t{q}\n"));
    }
    out
}

pub fn random_library<R: Rng>(rng: &mut R, vocab: &[String], n: usize) -> QueryLibrary {
    parse_native(&random_library_tsv(rng, vocab, n), "random").expect("generated queries parse")
}

/// Random document tokens drawn from `vocab`.
pub fn random_tokens<R: Rng>(rng: &mut R, vocab: &[String], max_len: usize) -> Vec<String> {
    let len = rng.gen_range(0..=max_len);
    (0..len).map(|_| vocab.choose(rng).unwrap().clone()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use sdgmap_core::parse_query;

    fn toks(s: &str) -> Vec<String> {
        s.split_whitespace().map(String::from).collect()
    }

    #[test]
    fn hand_checked_cases() {
        let t = toks("extreme poverty in rural areas");
        assert!(eval(&parse_query("poverty AND rural").unwrap(), &t));
        assert!(eval(&parse_query("\"extreme pov*\"").unwrap(), &t));
        assert!(!eval(&parse_query("\"poverty extreme\"").unwrap(), &t));
        assert!(eval(&parse_query("NOT urban").unwrap(), &t));
        assert!(!eval(&parse_query("pov").unwrap(), &t));
        assert!(eval(&parse_query("are*").unwrap(), &t));
    }

    #[test]
    fn rank_uses_exact_ratio() {
        let lib = parse_native(
            "sdg_id\tsubquery_id\tlabel\tquery\n\
             1\ta\t\tx\n1\tb\t\tx\n1\tc\t\tzz\n\
             2\td\t\tx\n2\te\t\tzz\n\
             3\tf\t\tx\n",
            "t",
        )
        .unwrap();
        let r = rank(&lib, &toks("x"));
        let order: Vec<u8> = r.iter().map(|g| g.sdg).collect();
        // 1/1 > 2/3 > 1/2
        assert_eq!(order, [3, 1, 2]);
    }
}
