//! Matching, scoring and ranking.
//!
//! A goal's score is the fraction of its sub-queries the document
//! satisfies. Scores are kept as exact ratios; ranking compares them by
//! cross-multiplication and only output converts them to floats.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::library::{AtomSet, CompiledExpr, CompiledLibrary};
use crate::sdg::{SdgId, SDG_COUNT};
use crate::text::{normalize, NormalizedDoc};

/// Default number of goals returned per paper.
pub const DEFAULT_TOP_N: u8 = 3;

/// Exact `matched / total` ratio. A goal without sub-queries scores 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Score {
    pub matched: u32,
    pub total: u32,
}

impl Score {
    pub fn new(matched: u32, total: u32) -> Self {
        assert!(matched <= total, "matched {matched} exceeds total {total}");
        Score { matched, total }
    }

    pub fn is_zero(&self) -> bool {
        self.matched == 0
    }

    pub fn value(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.matched as f64 / self.total as f64
        }
    }

    fn ratio(&self) -> (u64, u64) {
        if self.total == 0 {
            (0, 1)
        } else {
            (self.matched as u64, self.total as u64)
        }
    }
}

impl Ord for Score {
    fn cmp(&self, other: &Self) -> Ordering {
        let (a, b) = self.ratio();
        let (c, d) = other.ratio();
        (a * d).cmp(&(c * b))
    }
}

impl PartialOrd for Score {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Score {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.matched, self.total)
    }
}

/// Per-goal match statistics for one document.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SdgMatch {
    pub sdg: SdgId,
    pub total: u32,
    /// Ids of the satisfied sub-queries, in library order.
    pub matched_subqueries: Vec<String>,
}

impl SdgMatch {
    pub fn matched(&self) -> u32 {
        self.matched_subqueries.len() as u32
    }

    pub fn score(&self) -> Score {
        Score::new(self.matched(), self.total)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MatchReport {
    pub library_version: String,
    /// One entry per goal, SDG 1 first.
    pub sdgs: Vec<SdgMatch>,
}

impl MatchReport {
    pub fn get(&self, sdg: SdgId) -> &SdgMatch {
        &self.sdgs[sdg.index()]
    }
}

/// Number of goals to return, within `1..=17`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct TopN(u8);

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("top_n must be between 1 and 17, got {0}")]
pub struct TopNError(pub String);

impl TopN {
    pub const MAX: TopN = TopN(SDG_COUNT as u8);

    pub fn new(n: i64) -> Result<Self, TopNError> {
        if (1..=SDG_COUNT as i64).contains(&n) {
            Ok(TopN(n as u8))
        } else {
            Err(TopNError(n.to_string()))
        }
    }

    pub fn get(self) -> usize {
        self.0 as usize
    }
}

impl Default for TopN {
    fn default() -> Self {
        TopN(DEFAULT_TOP_N)
    }
}

impl TryFrom<u8> for TopN {
    type Error = TopNError;
    fn try_from(n: u8) -> Result<Self, TopNError> {
        TopN::new(n as i64)
    }
}

impl From<TopN> for u8 {
    fn from(n: TopN) -> u8 {
        n.0
    }
}

impl std::str::FromStr for TopN {
    type Err = TopNError;
    fn from_str(s: &str) -> Result<Self, TopNError> {
        match s.trim().parse::<i64>() {
            Ok(n) => TopN::new(n),
            Err(_) => Err(TopNError(format!("`{s}`"))),
        }
    }
}

impl fmt::Display for TopN {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// One goal in a ranked result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedSdg {
    pub sdg: SdgId,
    /// `matched / total`; also reported as the confidence indicator.
    pub score: f64,
    pub matched: u32,
    pub total: u32,
    pub matched_subqueries: Vec<String>,
}

impl RankedSdg {
    pub fn exact_score(&self) -> Score {
        Score::new(self.matched, self.total)
    }
}

/// Ranked goals for one document, truncated to `top_n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationResult {
    pub library_version: String,
    pub top_n: TopN,
    pub no_recognition: bool,
    pub ranked: Vec<RankedSdg>,
}

impl ClassificationResult {
    /// The result `rank` would give for a smaller `k`, or `None` when `k`
    /// exceeds the depth this result was computed at.
    pub fn truncated(&self, k: TopN) -> Option<ClassificationResult> {
        if k > self.top_n {
            return None;
        }
        Some(ClassificationResult {
            library_version: self.library_version.clone(),
            top_n: k,
            no_recognition: self.no_recognition,
            ranked: self.ranked.iter().take(k.get()).cloned().collect(),
        })
    }

    /// 1-based rank of `sdg`, if listed.
    pub fn rank_of(&self, sdg: SdgId) -> Option<usize> {
        self.ranked.iter().position(|r| r.sdg == sdg).map(|i| i + 1)
    }

    pub fn sdgs(&self) -> impl Iterator<Item = SdgId> + '_ {
        self.ranked.iter().map(|r| r.sdg)
    }
}

/// Boolean evaluation of a compiled sub-query over the atoms a document
/// contains.
pub fn evaluate_subquery(expr: &CompiledExpr, satisfied: &AtomSet) -> bool {
    expr.evaluate(satisfied)
}

/// Evaluates every sub-query of every goal against `doc` after a single
/// scan of its tokens.
pub fn classify(doc: &NormalizedDoc, lib: &CompiledLibrary) -> MatchReport {
    let satisfied = lib.satisfied_atoms(doc);
    let subqueries = lib.subqueries();
    let mut ids = lib.library().iter();
    let sdgs = SdgId::all()
        .map(|sdg| {
            let range = lib.range_for(sdg);
            let total = range.len() as u32;
            let mut matched = Vec::new();
            for sq in &subqueries[range] {
                let id = &ids.next().expect("library and compiled order agree").id;
                if evaluate_subquery(&sq.expr, &satisfied) {
                    matched.push(id.clone());
                }
            }
            SdgMatch {
                sdg,
                total,
                matched_subqueries: matched,
            }
        })
        .collect();
    MatchReport {
        library_version: lib.library().provenance(),
        sdgs,
    }
}

/// Orders goals by score, then matched count, then goal number, dropping
/// goals that scored zero.
pub fn rank(report: &MatchReport, top_n: TopN) -> ClassificationResult {
    let mut scored: Vec<&SdgMatch> = report.sdgs.iter().filter(|m| !m.score().is_zero()).collect();
    scored.sort_by(|a, b| {
        b.score()
            .cmp(&a.score())
            .then_with(|| b.matched().cmp(&a.matched()))
            .then_with(|| a.sdg.cmp(&b.sdg))
    });
    let no_recognition = scored.is_empty();
    let ranked = scored
        .into_iter()
        .take(top_n.get())
        .map(|m| RankedSdg {
            sdg: m.sdg,
            score: m.score().value(),
            matched: m.matched(),
            total: m.total,
            matched_subqueries: m.matched_subqueries.clone(),
        })
        .collect();
    ClassificationResult {
        library_version: report.library_version.clone(),
        top_n,
        no_recognition,
        ranked,
    }
}

/// Normalizes, classifies and ranks one consolidated text.
pub fn classify_text(text: &str, lib: &CompiledLibrary, top_n: TopN) -> ClassificationResult {
    rank(&classify(&normalize(text), lib), top_n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::library::parse_native;
    use proptest::prelude::*;

    fn sdg(n: u8) -> SdgId {
        SdgId::new(n).unwrap()
    }

    fn compiled(rows: &[&str]) -> CompiledLibrary {
        let mut s = String::from("# version: t\nsdg_id\tsubquery_id\tlabel\tquery\n");
        for r in rows {
            s.push_str(r);
            s.push('\n');
        }
        CompiledLibrary::compile(parse_native(&s, "t").unwrap())
    }

    fn report(entries: &[(u8, u32, u32)]) -> MatchReport {
        let mut sdgs: Vec<SdgMatch> = SdgId::all()
            .map(|s| SdgMatch {
                sdg: s,
                total: 1,
                matched_subqueries: vec![],
            })
            .collect();
        for &(n, matched, total) in entries {
            sdgs[n as usize - 1] = SdgMatch {
                sdg: sdg(n),
                total,
                matched_subqueries: (0..matched).map(|i| format!("{n}-{i}")).collect(),
            };
        }
        MatchReport {
            library_version: "t".into(),
            sdgs,
        }
    }

    #[test]
    fn score_ordering_is_exact() {
        assert_eq!(Score::new(1, 3).cmp(&Score::new(2, 6)), Ordering::Equal);
        assert!(Score::new(1, 3) > Score::new(333_333, 1_000_000));
        assert_eq!(Score::new(0, 0).value(), 0.0);
        assert_eq!(Score::new(0, 0).cmp(&Score::new(0, 5)), Ordering::Equal);
        assert_eq!(Score::new(1, 4).value(), 0.25);
    }

    #[test]
    fn empty_document_scores_zero_everywhere() {
        let lib = compiled(&["1\ta\t\tpoverty", "4\tb\t\tschool*"]);
        let r = classify(&normalize(""), &lib);
        assert!(r.sdgs.iter().all(|m| m.matched() == 0 && m.score().value() == 0.0));
        let ranked = rank(&r, TopN::default());
        assert!(ranked.no_recognition);
        assert!(ranked.ranked.is_empty());
    }

    #[test]
    fn one_of_four_is_a_quarter() {
        let lib = compiled(&[
            "1\ta\t\tpoverty",
            "1\tb\t\thunger",
            "1\tc\t\tslum*",
            "1\td\t\t\"social protection\"",
        ]);
        let r = classify(&normalize("Urban slums in transition"), &lib);
        let m = r.get(sdg(1));
        assert_eq!((m.matched(), m.total), (1, 4));
        assert_eq!(m.score().value(), 0.25);
        assert_eq!(m.matched_subqueries, ["c"]);
        assert_eq!(r.library_version, "t@t");
    }

    #[test]
    fn ties_break_on_matched_then_goal_number() {
        // SDG1 2/4 and SDG4 1/2 tie on score; SDG1 has more matches
        let r = report(&[(4, 1, 2), (1, 2, 4), (5, 1, 5)]);
        let out = rank(&r, TopN::new(2).unwrap());
        assert_eq!(out.sdgs().map(SdgId::get).collect::<Vec<_>>(), [1, 4]);

        // exact tie on score and matched falls back to goal number
        let r = report(&[(9, 1, 2), (3, 1, 2)]);
        let out = rank(&r, TopN::new(17).unwrap());
        assert_eq!(out.sdgs().map(SdgId::get).collect::<Vec<_>>(), [3, 9]);
    }

    #[test]
    fn top_n_bounds() {
        assert!(TopN::new(0).is_err());
        assert!(TopN::new(18).is_err());
        assert_eq!(TopN::default().get(), 3);
        assert!("abc".parse::<TopN>().is_err());
        let all: Vec<(u8, u32, u32)> = (1..=17).map(|n| (n, 1, 2)).collect();
        assert_eq!(rank(&report(&all), TopN::MAX).ranked.len(), 17);
    }

    #[test]
    fn zero_scores_never_listed() {
        let out = rank(&report(&[(2, 1, 3)]), TopN::new(5).unwrap());
        assert_eq!(out.ranked.len(), 1);
        assert!(!out.no_recognition);
    }

    #[test]
    fn truncation_refuses_to_widen() {
        let out = rank(&report(&[(2, 1, 3), (7, 2, 3)]), TopN::new(2).unwrap());
        assert_eq!(out.truncated(TopN::new(1).unwrap()).unwrap().ranked.len(), 1);
        assert!(out.truncated(TopN::new(3).unwrap()).is_none());
    }

    #[test]
    fn serialized_shape() {
        let out = rank(&report(&[(2, 1, 4)]), TopN::new(1).unwrap());
        let json = serde_json::to_value(&out).unwrap();
        assert_eq!(json["top_n"], 1);
        assert_eq!(json["ranked"][0]["sdg"], 2);
        assert_eq!(json["ranked"][0]["score"], 0.25);
        let back: ClassificationResult = serde_json::from_value(json).unwrap();
        assert_eq!(back, out);
    }

    fn arb_report() -> impl Strategy<Value = MatchReport> {
        proptest::collection::vec((0u32..5, 0u32..5), 17).prop_map(|v| {
            let entries: Vec<(u8, u32, u32)> = v
                .into_iter()
                .enumerate()
                .map(|(i, (m, extra))| (i as u8 + 1, m, m + extra))
                .collect();
            report(&entries)
        })
    }

    proptest! {
        #[test]
        fn top_k_is_prefix_of_top_k_plus_one(r in arb_report(), k in 1i64..17) {
            let a = rank(&r, TopN::new(k).unwrap());
            let b = rank(&r, TopN::new(k + 1).unwrap());
            prop_assert!(b.ranked.starts_with(&a.ranked));
            prop_assert_eq!(a.no_recognition, b.no_recognition);
        }

        #[test]
        fn ranked_lists_are_sorted_and_positive(r in arb_report(), k in 1i64..=17) {
            let out = rank(&r, TopN::new(k).unwrap());
            prop_assert!(out.ranked.iter().all(|x| x.matched > 0 && x.score > 0.0 && x.score <= 1.0));
            for w in out.ranked.windows(2) {
                let key = |x: &RankedSdg| (std::cmp::Reverse(x.exact_score()), std::cmp::Reverse(x.matched), x.sdg);
                prop_assert!(key(&w[0]) < key(&w[1]));
            }
            prop_assert_eq!(out.no_recognition, r.sdgs.iter().all(|m| m.matched() == 0));
        }
    }
}
