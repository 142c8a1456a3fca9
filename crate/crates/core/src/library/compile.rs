//! Compilation of a library into one shared atom table and pattern index.
//!
//! Every distinct leaf across all sub-queries becomes one atom. The words
//! those atoms need (exact words, prefix stems, and the individual words
//! of phrases) are deduplicated into patterns and loaded into a byte trie,
//! so a document is scanned once, token by token, no matter how many
//! sub-queries the library holds. Phrases are confirmed afterwards from
//! the per-position pattern hits.

use std::collections::HashMap;
use std::ops::Range;

use super::QueryLibrary;
use crate::query::{Atom, PhraseWord, QueryAst};
use crate::sdg::{SdgId, SDG_COUNT};
use crate::text::NormalizedDoc;

pub type AtomId = u32;
type PatternId = u32;

/// A sub-query tree whose leaves refer to the shared atom table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CompiledExpr {
    Atom(AtomId),
    And(Vec<CompiledExpr>),
    Or(Vec<CompiledExpr>),
    Not(Box<CompiledExpr>),
}

impl CompiledExpr {
    /// Evaluates with standard Boolean semantics; a leaf is true when its
    /// atom is in `satisfied`.
    pub fn evaluate(&self, satisfied: &AtomSet) -> bool {
        match self {
            CompiledExpr::Atom(id) => satisfied.contains(*id),
            CompiledExpr::And(cs) => cs.iter().all(|c| c.evaluate(satisfied)),
            CompiledExpr::Or(cs) => cs.iter().any(|c| c.evaluate(satisfied)),
            CompiledExpr::Not(c) => !c.evaluate(satisfied),
        }
    }
}

#[derive(Debug, Clone)]
pub struct CompiledSubQuery {
    pub sdg: SdgId,
    pub expr: CompiledExpr,
}

/// Set of atoms present in a document.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AtomSet {
    bits: Vec<bool>,
}

impl AtomSet {
    pub fn with_capacity(atoms: usize) -> Self {
        AtomSet {
            bits: vec![false; atoms],
        }
    }

    pub fn from_ids(atoms: usize, ids: impl IntoIterator<Item = AtomId>) -> Self {
        let mut set = AtomSet::with_capacity(atoms);
        for id in ids {
            set.insert(id);
        }
        set
    }

    pub fn insert(&mut self, id: AtomId) {
        self.bits[id as usize] = true;
    }

    pub fn contains(&self, id: AtomId) -> bool {
        self.bits.get(id as usize).copied().unwrap_or(false)
    }

    pub fn iter(&self) -> impl Iterator<Item = AtomId> + '_ {
        self.bits
            .iter()
            .enumerate()
            .filter(|(_, b)| **b)
            .map(|(i, _)| i as AtomId)
    }

    pub fn len(&self) -> usize {
        self.bits.iter().filter(|b| **b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.bits.iter().any(|b| *b)
    }
}

#[derive(Debug, Clone, Default)]
struct TrieNode {
    children: Vec<(u8, u32)>,
    exact: Option<PatternId>,
    prefixes: Vec<PatternId>,
}

/// Byte trie over exact words and prefix stems.
#[derive(Debug, Clone)]
pub struct PatternIndex {
    patterns: Vec<PhraseWord>,
    nodes: Vec<TrieNode>,
}

impl PatternIndex {
    fn new() -> Self {
        PatternIndex {
            patterns: Vec::new(),
            nodes: vec![TrieNode::default()],
        }
    }

    fn insert(&mut self, word: &PhraseWord) -> PatternId {
        let mut node = 0usize;
        for &b in word.text.as_bytes() {
            node = match self.nodes[node].children.binary_search_by_key(&b, |(k, _)| *k) {
                Ok(i) => self.nodes[node].children[i].1 as usize,
                Err(i) => {
                    let next = self.nodes.len();
                    self.nodes.push(TrieNode::default());
                    self.nodes[node].children.insert(i, (b, next as u32));
                    next
                }
            };
        }
        let existing = if word.prefix {
            self.nodes[node].prefixes.first().copied()
        } else {
            self.nodes[node].exact
        };
        if let Some(id) = existing {
            return id;
        }
        let id = self.patterns.len() as PatternId;
        self.patterns.push(word.clone());
        if word.prefix {
            self.nodes[node].prefixes.push(id);
        } else {
            self.nodes[node].exact = Some(id);
        }
        id
    }

    /// Appends every pattern matching `token` to `out`.
    pub fn matches_into(&self, token: &str, out: &mut Vec<PatternId>) {
        let mut node = 0usize;
        for &b in token.as_bytes() {
            match self.nodes[node].children.binary_search_by_key(&b, |(k, _)| *k) {
                Ok(i) => node = self.nodes[node].children[i].1 as usize,
                Err(_) => return,
            }
            out.extend_from_slice(&self.nodes[node].prefixes);
        }
        if let Some(id) = self.nodes[node].exact {
            out.push(id);
        }
    }

    pub fn pattern_count(&self) -> usize {
        self.patterns.len()
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }
}

#[derive(Debug, Clone)]
enum AtomPlan {
    Word(PatternId),
    Sequence(Vec<PatternId>),
}

/// A library ready for single-scan classification. Immutable once built.
#[derive(Debug, Clone)]
pub struct CompiledLibrary {
    library: QueryLibrary,
    atoms: Vec<Atom>,
    plans: Vec<AtomPlan>,
    index: PatternIndex,
    // phrase atoms grouped by the pattern of their first word
    phrases_by_head: HashMap<PatternId, Vec<AtomId>>,
    subqueries: Vec<CompiledSubQuery>,
    sdg_ranges: [Range<usize>; SDG_COUNT],
}

impl CompiledLibrary {
    /// Compiles `library`. Atom ids are assigned in library order, so the
    /// same library always yields the same table.
    pub fn compile(library: QueryLibrary) -> Self {
        let mut atoms = Vec::new();
        let mut atom_ids: HashMap<Atom, AtomId> = HashMap::new();
        let mut plans = Vec::new();
        let mut index = PatternIndex::new();
        let mut phrases_by_head: HashMap<PatternId, Vec<AtomId>> = HashMap::new();

        let mut intern = |atom: Atom| -> AtomId {
            if let Some(&id) = atom_ids.get(&atom) {
                return id;
            }
            let id = atoms.len() as AtomId;
            let plan = match &atom {
                Atom::Term(w) => AtomPlan::Word(index.insert(&PhraseWord {
                    text: w.clone(),
                    prefix: false,
                })),
                Atom::Prefix(p) => AtomPlan::Word(index.insert(&PhraseWord {
                    text: p.clone(),
                    prefix: true,
                })),
                Atom::Phrase(ws) => {
                    let seq: Vec<PatternId> = ws.iter().map(|w| index.insert(w)).collect();
                    phrases_by_head.entry(seq[0]).or_default().push(id);
                    AtomPlan::Sequence(seq)
                }
            };
            plans.push(plan);
            atoms.push(atom.clone());
            atom_ids.insert(atom, id);
            id
        };

        fn lower(ast: &QueryAst, intern: &mut impl FnMut(Atom) -> AtomId) -> CompiledExpr {
            match ast {
                QueryAst::Term(w) => CompiledExpr::Atom(intern(Atom::Term(w.clone()))),
                QueryAst::Prefix(p) => CompiledExpr::Atom(intern(Atom::Prefix(p.clone()))),
                QueryAst::Phrase(ws) => CompiledExpr::Atom(intern(Atom::Phrase(ws.clone()))),
                QueryAst::And(cs) => CompiledExpr::And(cs.iter().map(|c| lower(c, intern)).collect()),
                QueryAst::Or(cs) => CompiledExpr::Or(cs.iter().map(|c| lower(c, intern)).collect()),
                QueryAst::Not(c) => CompiledExpr::Not(Box::new(lower(c, intern))),
            }
        }

        let mut subqueries = Vec::with_capacity(library.len());
        let mut sdg_ranges: [Range<usize>; SDG_COUNT] = std::array::from_fn(|_| 0..0);
        for sdg in SdgId::all() {
            let start = subqueries.len();
            for sq in library.subqueries_for(sdg) {
                subqueries.push(CompiledSubQuery {
                    sdg,
                    expr: lower(&sq.ast, &mut intern),
                });
            }
            sdg_ranges[sdg.index()] = start..subqueries.len();
        }

        CompiledLibrary {
            library,
            atoms,
            plans,
            index,
            phrases_by_head,
            subqueries,
            sdg_ranges,
        }
    }

    pub fn library(&self) -> &QueryLibrary {
        &self.library
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn atom_id(&self, atom: &Atom) -> Option<AtomId> {
        self.atoms.iter().position(|a| a == atom).map(|i| i as AtomId)
    }

    pub fn index(&self) -> &PatternIndex {
        &self.index
    }

    /// Compiled sub-queries in the same order as [`QueryLibrary::iter`].
    pub fn subqueries(&self) -> &[CompiledSubQuery] {
        &self.subqueries
    }

    /// Positions in [`Self::subqueries`] belonging to `sdg`.
    pub fn range_for(&self, sdg: SdgId) -> Range<usize> {
        self.sdg_ranges[sdg.index()].clone()
    }

    /// Scans `doc` once and returns every atom it contains.
    pub fn satisfied_atoms(&self, doc: &NormalizedDoc) -> AtomSet {
        self.satisfied_atoms_in(doc.tokens())
    }

    pub fn satisfied_atoms_in<S: AsRef<str>>(&self, tokens: &[S]) -> AtomSet {
        let mut pattern_hit = vec![false; self.index.patterns.len()];
        // flattened per-position hit lists: hits[starts[i]..starts[i + 1]]
        let mut hits: Vec<PatternId> = Vec::with_capacity(tokens.len());
        let mut starts: Vec<u32> = Vec::with_capacity(tokens.len() + 1);
        for tok in tokens {
            starts.push(hits.len() as u32);
            let before = hits.len();
            self.index.matches_into(tok.as_ref(), &mut hits);
            for &p in &hits[before..] {
                pattern_hit[p as usize] = true;
            }
        }
        starts.push(hits.len() as u32);
        let at = |pos: usize| &hits[starts[pos] as usize..starts[pos + 1] as usize];

        let mut set = AtomSet::with_capacity(self.atoms.len());
        for (id, plan) in self.plans.iter().enumerate() {
            if let AtomPlan::Word(p) = plan {
                if pattern_hit[*p as usize] {
                    set.insert(id as AtomId);
                }
            }
        }
        if self.phrases_by_head.is_empty() {
            return set;
        }
        for pos in 0..tokens.len() {
            for head in at(pos) {
                let Some(candidates) = self.phrases_by_head.get(head) else {
                    continue;
                };
                for &atom in candidates {
                    if set.contains(atom) {
                        continue;
                    }
                    let AtomPlan::Sequence(seq) = &self.plans[atom as usize] else {
                        unreachable!("phrase index holds sequences only")
                    };
                    if pos + seq.len() > tokens.len() || !seq.iter().all(|p| pattern_hit[*p as usize]) {
                        continue;
                    }
                    if seq[1..].iter().enumerate().all(|(j, p)| at(pos + 1 + j).contains(p)) {
                        set.insert(atom);
                    }
                }
            }
        }
        set
    }
}
