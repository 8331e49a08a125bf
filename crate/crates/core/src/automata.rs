//! Finite automata over alphabets of variable valuations.
//!
//! A letter is a bitmask over the vocabulary: bit `i` set means variable `i`
//! holds in that state. Word languages here are always languages of finite
//! non-empty words (an interval with `n` states is an `n`-letter word), so
//! the canonical minimization below strips the empty word before minimizing.
//! Omega-word languages are recognized by nondeterministic Buchi automata
//! and deterministic parity automata (min-even acceptance).

use crate::syntax::Vocabulary;
use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

pub type StateId = usize;
/// Valuation bitmask: bit `i` is variable `i` of the vocabulary.
pub type Letter = u32;

/// Hard cap on vocabulary size for automaton construction; the alphabet is
/// materialized densely as `2^|V|` letters.
pub const MAX_AUTOMATON_VARS: usize = 12;

/// Subset-construction state guard.
pub const DETERMINIZE_STATE_LIMIT: usize = 100_000;

/// Input guard for parity determinization; the tree space explodes quickly.
/// `PARITY_STATE_LIMIT` is the effective guard — this one only rejects inputs
/// that could not plausibly stay under it.
pub const PARITY_INPUT_LIMIT: usize = 20;
/// Output guard for parity determinization.
pub const PARITY_STATE_LIMIT: usize = 200_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AutomataError {
    TooManyVars { have: usize, limit: usize },
    TooManyStates { have: usize, limit: usize },
    VocabMismatch,
}

impl fmt::Display for AutomataError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AutomataError::TooManyVars { have, limit } => {
                write!(f, "vocabulary of {have} variables exceeds the automaton limit {limit}")
            }
            AutomataError::TooManyStates { have, limit } => {
                write!(f, "construction reached {have} states, limit {limit}")
            }
            AutomataError::VocabMismatch => write!(f, "operands have different vocabularies"),
        }
    }
}

impl std::error::Error for AutomataError {}

pub fn check_vocab(v: &Vocabulary) -> Result<(), AutomataError> {
    if v.len() > MAX_AUTOMATON_VARS {
        Err(AutomataError::TooManyVars { have: v.len(), limit: MAX_AUTOMATON_VARS })
    } else {
        Ok(())
    }
}

/// Number of letters of the alphabet over `v`.
pub fn letter_count(v: &Vocabulary) -> usize {
    1usize << v.len()
}

/// All letters in ascending numeric order.
pub fn letters(v: &Vocabulary) -> impl Iterator<Item = Letter> {
    0..(letter_count(v) as Letter)
}

// ---------------------------------------------------------------------------
// DFA

/// Total deterministic automaton over finite words. `trans[q][s]` is the
/// successor of state `q` on letter `s`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dfa {
    pub vocab: Vocabulary,
    pub trans: Vec<Vec<StateId>>,
    pub initial: StateId,
    pub accepting: BTreeSet<StateId>,
}

impl Dfa {
    pub fn n_states(&self) -> usize {
        self.trans.len()
    }

    pub fn step(&self, q: StateId, s: Letter) -> StateId {
        self.trans[q][s as usize]
    }

    pub fn run(&self, word: &[Letter]) -> StateId {
        word.iter().fold(self.initial, |q, &s| self.step(q, s))
    }

    pub fn accepts(&self, word: &[Letter]) -> bool {
        self.accepting.contains(&self.run(word))
    }

    /// DFA with the same transitions and a different accepting set.
    pub fn with_accepting(&self, accepting: BTreeSet<StateId>) -> Dfa {
        Dfa { vocab: self.vocab.clone(), trans: self.trans.clone(), initial: self.initial, accepting }
    }

    /// DFA re-rooted at `q`: the language of words leading from `q` to acceptance.
    pub fn rerooted(&self, q: StateId) -> Dfa {
        Dfa { vocab: self.vocab.clone(), trans: self.trans.clone(), initial: q, accepting: self.accepting.clone() }
    }

    /// True when no accepting state is reachable from the initial state by a
    /// non-empty word.
    pub fn is_empty_language(&self) -> bool {
        self.shortest_accepted().is_none()
    }

    /// Shortest accepted non-empty word, lexicographically least among the
    /// shortest; `None` for the empty language.
    pub fn shortest_accepted(&self) -> Option<Vec<Letter>> {
        let k = letter_count(&self.vocab);
        let mut seen = vec![false; self.n_states()];
        let mut parent: Vec<Option<(StateId, Letter)>> = vec![None; self.n_states()];
        let mut queue = VecDeque::new();
        // non-empty words only: seed with the one-letter successors
        let mut best: Option<StateId> = None;
        'seed: for s in 0..k {
            let q = self.step(self.initial, s as Letter);
            if !seen[q] {
                seen[q] = true;
                parent[q] = Some((usize::MAX, s as Letter));
                if self.accepting.contains(&q) {
                    best = Some(q);
                    break 'seed;
                }
                queue.push_back(q);
            }
        }
        while best.is_none() {
            let q = queue.pop_front()?;
            for s in 0..k {
                let r = self.step(q, s as Letter);
                if !seen[r] {
                    seen[r] = true;
                    parent[r] = Some((q, s as Letter));
                    if self.accepting.contains(&r) {
                        best = Some(r);
                        break;
                    }
                    queue.push_back(r);
                }
            }
        }
        let mut word = Vec::new();
        let mut at = best?;
        loop {
            let (prev, s) = parent[at].expect("path must reach the seed layer");
            word.push(s);
            if prev == usize::MAX {
                break;
            }
            at = prev;
        }
        word.reverse();
        Some(word)
    }

    /// Restricts the language to words using only `keep` letters; other
    /// letters lead to a rejecting sink.
    pub fn restrict_letters(&self, keep: &BTreeSet<Letter>) -> Dfa {
        let k = letter_count(&self.vocab);
        let n = self.n_states();
        let sink = n;
        let mut trans: Vec<Vec<StateId>> = Vec::with_capacity(n + 1);
        for q in 0..n {
            let mut row = Vec::with_capacity(k);
            for s in 0..k {
                if keep.contains(&(s as Letter)) {
                    row.push(self.trans[q][s]);
                } else {
                    row.push(sink);
                }
            }
            trans.push(row);
        }
        trans.push(vec![sink; k]);
        Dfa { vocab: self.vocab.clone(), trans, initial: self.initial, accepting: self.accepting.clone() }
    }
}

/// DFA accepting exactly the words of `language` (used by tests and small
/// constructions); the language must be non-empty-word only.
pub fn dfa_from_words(vocab: &Vocabulary, language: &BTreeSet<Vec<Letter>>) -> Dfa {
    // trie, then totalize with a sink
    let k = letter_count(vocab);
    let mut trans: Vec<BTreeMap<Letter, StateId>> = vec![BTreeMap::new()];
    let mut accepting = BTreeSet::new();
    for w in language {
        assert!(!w.is_empty(), "empty word has no interval reading");
        let mut q = 0usize;
        for &s in w {
            let next = match trans[q].get(&s) {
                Some(&n) => n,
                None => {
                    trans.push(BTreeMap::new());
                    let n = trans.len() - 1;
                    trans[q].insert(s, n);
                    n
                }
            };
            q = next;
        }
        accepting.insert(q);
    }
    let sink = trans.len();
    let mut dense: Vec<Vec<StateId>> = trans
        .iter()
        .map(|row| (0..k).map(|s| *row.get(&(s as Letter)).unwrap_or(&sink)).collect())
        .collect();
    dense.push(vec![sink; k]);
    Dfa { vocab: vocab.clone(), trans: dense, initial: 0, accepting }
}

/// All non-empty words.
pub fn dfa_sigma_plus(vocab: &Vocabulary) -> Dfa {
    let k = letter_count(vocab);
    Dfa {
        vocab: vocab.clone(),
        trans: vec![vec![1; k], vec![1; k]],
        initial: 0,
        accepting: BTreeSet::from([1]),
    }
}

/// Words of length at least `n` (n >= 1).
pub fn dfa_min_length(vocab: &Vocabulary, n: usize) -> Dfa {
    assert!(n >= 1);
    let k = letter_count(vocab);
    let mut trans = Vec::with_capacity(n + 1);
    for q in 0..n {
        trans.push(vec![q + 1; k]);
    }
    trans.push(vec![n; k]);
    Dfa { vocab: vocab.clone(), trans, initial: 0, accepting: BTreeSet::from([n]) }
}

// ---------------------------------------------------------------------------
// NFA

/// Nondeterministic automaton over finite words, without epsilon moves.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Nfa {
    pub vocab: Vocabulary,
    pub n_states: usize,
    pub initial: BTreeSet<StateId>,
    pub accepting: BTreeSet<StateId>,
    pub trans: BTreeMap<(StateId, Letter), BTreeSet<StateId>>,
}

impl Nfa {
    pub fn add_edge(&mut self, from: StateId, s: Letter, to: StateId) {
        self.trans.entry((from, s)).or_default().insert(to);
    }

    pub fn successors(&self, from: StateId, s: Letter) -> Option<&BTreeSet<StateId>> {
        self.trans.get(&(from, s))
    }

    pub fn accepts(&self, word: &[Letter]) -> bool {
        let mut cur = self.initial.clone();
        for &s in word {
            let mut next = BTreeSet::new();
            for &q in &cur {
                if let Some(ts) = self.successors(q, s) {
                    next.extend(ts.iter().copied());
                }
            }
            cur = next;
            if cur.is_empty() {
                return false;
            }
        }
        cur.iter().any(|q| self.accepting.contains(q))
    }
}

pub fn nfa_from_dfa(d: &Dfa) -> Nfa {
    let mut n = Nfa {
        vocab: d.vocab.clone(),
        n_states: d.n_states(),
        initial: BTreeSet::from([d.initial]),
        accepting: d.accepting.clone(),
        trans: BTreeMap::new(),
    };
    for q in 0..d.n_states() {
        for s in letters(&d.vocab) {
            n.add_edge(q, s, d.step(q, s));
        }
    }
    n
}

/// Reversal: accepts exactly the letter-reversed words of the input.
pub fn dfa_reverse(d: &Dfa) -> Nfa {
    let mut n = Nfa {
        vocab: d.vocab.clone(),
        n_states: d.n_states(),
        initial: d.accepting.clone(),
        accepting: BTreeSet::from([d.initial]),
        trans: BTreeMap::new(),
    };
    for q in 0..d.n_states() {
        for s in letters(&d.vocab) {
            n.add_edge(d.step(q, s), s, q);
        }
    }
    n
}

/// Subset construction. The result is total; the empty subset is the sink.
pub fn determinize(n: &Nfa) -> Result<Dfa, AutomataError> {
    check_vocab(&n.vocab)?;
    let k = letter_count(&n.vocab);
    let mut index: BTreeMap<BTreeSet<StateId>, StateId> = BTreeMap::new();
    let mut subsets: Vec<BTreeSet<StateId>> = Vec::new();
    let mut trans: Vec<Vec<StateId>> = Vec::new();
    let mut queue = VecDeque::new();

    let mut intern = |set: BTreeSet<StateId>,
                      subsets: &mut Vec<BTreeSet<StateId>>,
                      trans: &mut Vec<Vec<StateId>>,
                      queue: &mut VecDeque<StateId>|
     -> Result<StateId, AutomataError> {
        if let Some(&id) = index.get(&set) {
            return Ok(id);
        }
        let id = subsets.len();
        if id >= DETERMINIZE_STATE_LIMIT {
            return Err(AutomataError::TooManyStates {
                have: id + 1,
                limit: DETERMINIZE_STATE_LIMIT,
            });
        }
        index.insert(set.clone(), id);
        subsets.push(set);
        trans.push(vec![usize::MAX; k]);
        queue.push_back(id);
        Ok(id)
    };

    let start = intern(n.initial.clone(), &mut subsets, &mut trans, &mut queue)?;
    while let Some(id) = queue.pop_front() {
        for s in 0..k {
            let mut next = BTreeSet::new();
            for &q in &subsets[id] {
                if let Some(ts) = n.successors(q, s as Letter) {
                    next.extend(ts.iter().copied());
                }
            }
            let to = intern(next, &mut subsets, &mut trans, &mut queue)?;
            trans[id][s] = to;
        }
    }
    let accepting = subsets
        .iter()
        .enumerate()
        .filter(|(_, set)| set.iter().any(|q| n.accepting.contains(q)))
        .map(|(i, _)| i)
        .collect();
    Ok(Dfa { vocab: n.vocab.clone(), trans, initial: start, accepting })
}

// ---------------------------------------------------------------------------
// canonical minimization

/// Strips the empty word: when the initial state accepts, a fresh
/// non-accepting initial state with the same outgoing transitions is added.
fn strip_epsilon(d: &Dfa) -> Dfa {
    if !d.accepting.contains(&d.initial) {
        return d.clone();
    }
    let mut trans = d.trans.clone();
    trans.push(d.trans[d.initial].clone());
    let fresh = trans.len() - 1;
    Dfa { vocab: d.vocab.clone(), trans, initial: fresh, accepting: d.accepting.clone() }
}

fn reachable_restrict(d: &Dfa) -> Dfa {
    let k = letter_count(&d.vocab);
    let mut order = Vec::new();
    let mut map = vec![usize::MAX; d.n_states()];
    let mut queue = VecDeque::from([d.initial]);
    map[d.initial] = 0;
    order.push(d.initial);
    while let Some(q) = queue.pop_front() {
        for s in 0..k {
            let r = d.trans[q][s];
            if map[r] == usize::MAX {
                map[r] = order.len();
                order.push(r);
                queue.push_back(r);
            }
        }
    }
    let trans = order
        .iter()
        .map(|&q| (0..k).map(|s| map[d.trans[q][s]]).collect())
        .collect();
    let accepting = d.accepting.iter().filter(|&&q| map[q] != usize::MAX).map(|&q| map[q]).collect();
    Dfa { vocab: d.vocab.clone(), trans, initial: 0, accepting }
}

/// Canonical minimal DFA for the language without the empty word: strip the
/// empty word, restrict to reachable states, merge indistinguishable states,
/// then renumber in breadth-first order over ascending letters. Two DFAs
/// denote the same non-empty-word language iff this returns identical values.
pub fn canonical_min(d: &Dfa) -> Dfa {
    let d = reachable_restrict(&strip_epsilon(d));
    let k = letter_count(&d.vocab);
    let n = d.n_states();
    // Moore partition refinement
    let mut class: Vec<usize> = (0..n).map(|q| usize::from(d.accepting.contains(&q))).collect();
    loop {
        let mut sig_index: BTreeMap<(usize, Vec<usize>), usize> = BTreeMap::new();
        let mut next_class = vec![0usize; n];
        for q in 0..n {
            let sig = (class[q], (0..k).map(|s| class[d.trans[q][s]]).collect::<Vec<_>>());
            let fresh = sig_index.len();
            let c = *sig_index.entry(sig).or_insert(fresh);
            next_class[q] = c;
        }
        let done = sig_index.len() == class.iter().collect::<BTreeSet<_>>().len();
        class = next_class;
        if done {
            break;
        }
    }
    // quotient
    let n_classes = class.iter().copied().collect::<BTreeSet<_>>().len();
    let mut rep = vec![usize::MAX; n_classes];
    for q in 0..n {
        if rep[class[q]] == usize::MAX {
            rep[class[q]] = q;
        }
    }
    let q_trans: Vec<Vec<usize>> = (0..n_classes)
        .map(|c| (0..k).map(|s| class[d.trans[rep[c]][s]]).collect())
        .collect();
    let q_accepting: BTreeSet<usize> = d.accepting.iter().map(|&q| class[q]).collect();
    let quotient =
        Dfa { vocab: d.vocab.clone(), trans: q_trans, initial: class[d.initial], accepting: q_accepting };
    // breadth-first renumbering for a canonical presentation
    reachable_restrict(&quotient)
}

/// Shortest word on which the two languages differ, lexicographically least
/// among the shortest; `None` when the languages (over non-empty words) agree.
pub fn dfa_difference_witness(a: &Dfa, b: &Dfa) -> Result<Option<Vec<Letter>>, AutomataError> {
    if a.vocab != b.vocab {
        return Err(AutomataError::VocabMismatch);
    }
    let a = strip_epsilon(a);
    let b = strip_epsilon(b);
    let k = letter_count(&a.vocab);
    let mut seen = BTreeSet::new();
    let mut parent: BTreeMap<(StateId, StateId), ((StateId, StateId), Letter)> = BTreeMap::new();
    let start = (a.initial, b.initial);
    seen.insert(start);
    let mut queue = VecDeque::from([start]);
    let mut hit: Option<(StateId, StateId)> = None;
    'outer: while let Some((qa, qb)) = queue.pop_front() {
        for s in 0..k {
            let to = (a.step(qa, s as Letter), b.step(qb, s as Letter));
            if seen.insert(to) {
                parent.insert(to, ((qa, qb), s as Letter));
                if a.accepting.contains(&to.0) != b.accepting.contains(&to.1) {
                    hit = Some(to);
                    break 'outer;
                }
                queue.push_back(to);
            } else if a.accepting.contains(&to.0) != b.accepting.contains(&to.1)
                && !parent.contains_key(&to)
                && to != start
            {
                // already seen through another edge with the same length or
                // shorter; the stored path suffices, nothing to do
            }
        }
    }
    let Some(mut at) = hit else {
        return Ok(None);
    };
    let mut word = Vec::new();
    while at != start {
        let (prev, s) = parent[&at];
        word.push(s);
        at = prev;
    }
    word.reverse();
    Ok(Some(word))
}

/// Language equality over non-empty words.
pub fn dfa_equivalent(a: &Dfa, b: &Dfa) -> Result<bool, AutomataError> {
    Ok(dfa_difference_witness(a, b)?.is_none())
}

// ---------------------------------------------------------------------------
// boolean combinations

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoolOp {
    And,
    Or,
    Diff,
}

pub fn dfa_combine(a: &Dfa, b: &Dfa, op: BoolOp) -> Result<Dfa, AutomataError> {
    if a.vocab != b.vocab {
        return Err(AutomataError::VocabMismatch);
    }
    let k = letter_count(&a.vocab);
    let mut index: BTreeMap<(StateId, StateId), StateId> = BTreeMap::new();
    let mut pairs = Vec::new();
    let mut trans: Vec<Vec<StateId>> = Vec::new();
    let start = (a.initial, b.initial);
    index.insert(start, 0);
    pairs.push(start);
    trans.push(vec![usize::MAX; k]);
    let mut queue = VecDeque::from([0usize]);
    while let Some(id) = queue.pop_front() {
        let (qa, qb) = pairs[id];
        for s in 0..k {
            let to = (a.step(qa, s as Letter), b.step(qb, s as Letter));
            let tid = match index.get(&to) {
                Some(&t) => t,
                None => {
                    let t = pairs.len();
                    index.insert(to, t);
                    pairs.push(to);
                    trans.push(vec![usize::MAX; k]);
                    queue.push_back(t);
                    t
                }
            };
            trans[id][s] = tid;
        }
    }
    let accepting = pairs
        .iter()
        .enumerate()
        .filter(|(_, &(qa, qb))| {
            let fa = a.accepting.contains(&qa);
            let fb = b.accepting.contains(&qb);
            match op {
                BoolOp::And => fa && fb,
                BoolOp::Or => fa || fb,
                BoolOp::Diff => fa && !fb,
            }
        })
        .map(|(i, _)| i)
        .collect();
    Ok(Dfa { vocab: a.vocab.clone(), trans, initial: 0, accepting })
}

/// Complement within the non-empty words.
pub fn dfa_complement(d: &Dfa) -> Dfa {
    let d = strip_epsilon(d);
    let accepting = (0..d.n_states()).filter(|q| !d.accepting.contains(q)).collect();
    strip_epsilon(&d.with_accepting(accepting))
}

// ---------------------------------------------------------------------------
// fusion

/// Fusion product: words `u` with a split `u = x . s . y` such that `x . s`
/// is accepted by `a` and `s . y` is accepted by `b` (the letter `s` is
/// shared). This is the word reading of chop.
pub fn fusion_concat(a: &Dfa, b: &Dfa) -> Result<Nfa, AutomataError> {
    if a.vocab != b.vocab {
        return Err(AutomataError::VocabMismatch);
    }
    let a = strip_epsilon(a);
    let b = strip_epsilon(b);
    let na = a.n_states();
    let mut n = Nfa {
        vocab: a.vocab.clone(),
        n_states: na + b.n_states(),
        initial: BTreeSet::from([a.initial]),
        accepting: b.accepting.iter().map(|&q| na + q).collect(),
        trans: BTreeMap::new(),
    };
    for q in 0..na {
        for s in letters(&a.vocab) {
            n.add_edge(q, s, a.step(q, s));
            if a.accepting.contains(&a.step(q, s)) {
                // the shared letter finishes a word of `a` and is
                // simultaneously the first letter fed to `b`
                n.add_edge(q, s, na + b.step(b.initial, s));
            }
        }
    }
    for q in 0..b.n_states() {
        for s in letters(&b.vocab) {
            n.add_edge(na + q, s, na + b.step(q, s));
        }
    }
    Ok(n)
}

/// Fusion iteration: all single letters, plus fusion chains of words of `a`
/// of length at least two. This is the word reading of chop-star.
pub fn fusion_star(a: &Dfa) -> Result<Nfa, AutomataError> {
    // chunks of a fusion chain span at least two states
    let long = canonical_min(&dfa_combine(a, &dfa_min_length(&a.vocab, 2), BoolOp::And)?);
    let nl = long.n_states();
    let mut n = Nfa {
        vocab: a.vocab.clone(),
        n_states: nl + 2,
        initial: BTreeSet::from([long.initial, nl]),
        accepting: long.accepting.clone(),
        trans: BTreeMap::new(),
    };
    // chain part: restart on the shared letter whenever a chunk completes.
    // `long` accepts no single letter, so a restart can never skip a chunk.
    for q in 0..nl {
        for s in letters(&long.vocab) {
            n.add_edge(q, s, long.step(q, s));
            if long.accepting.contains(&long.step(q, s)) {
                n.add_edge(q, s, long.step(long.initial, s));
            }
        }
    }
    // one-state intervals satisfy any iteration vacuously
    for s in letters(&a.vocab) {
        n.add_edge(nl, s, nl + 1);
    }
    n.accepting.insert(nl + 1);
    Ok(n)
}

/// Words `s . v` (any first letter) such that `v` leads from `q` to
/// acceptance in `d`; the one-letter words `s` are included when `q` accepts.
/// This is the suffix language of a chop split whose shared letter was
/// already consumed by the prefix.
pub fn suffix_after_shared(d: &Dfa, q: StateId) -> Dfa {
    let k = letter_count(&d.vocab);
    let fresh = d.n_states();
    let mut trans = d.trans.clone();
    trans.push(vec![q; k]);
    Dfa { vocab: d.vocab.clone(), trans, initial: fresh, accepting: d.accepting.clone() }
}

/// Language of non-empty words leading from the initial state to `q`.
pub fn prefix_to(d: &Dfa, q: StateId) -> Dfa {
    strip_epsilon(&d.with_accepting(BTreeSet::from([q])))
}

// ---------------------------------------------------------------------------
// don't-care relabeling (projection of one variable)

/// Makes variable `var` unconstrained: every transition is duplicated with
/// the bit set and cleared. Recognizes the image of the language under
/// arbitrary relabelings of `var`.
pub fn nfa_relabel_dont_care(n: &Nfa, var: usize) -> Nfa {
    let mask = 1u32 << var;
    let mut out = Nfa {
        vocab: n.vocab.clone(),
        n_states: n.n_states,
        initial: n.initial.clone(),
        accepting: n.accepting.clone(),
        trans: BTreeMap::new(),
    };
    for (&(q, s), targets) in &n.trans {
        for &t in targets {
            out.add_edge(q, s | mask, t);
            out.add_edge(q, s & !mask, t);
        }
    }
    out
}

pub fn nba_relabel_dont_care(n: &Nba, var: usize) -> Nba {
    let mask = 1u32 << var;
    let mut out = Nba {
        vocab: n.vocab.clone(),
        n_states: n.n_states,
        initial: n.initial.clone(),
        accepting: n.accepting.clone(),
        trans: BTreeMap::new(),
    };
    for (&(q, s), targets) in &n.trans {
        for &t in targets {
            out.add_edge(q, s | mask, t);
            out.add_edge(q, s & !mask, t);
        }
    }
    out
}

// ---------------------------------------------------------------------------
// projection onto a letter class

/// Runs `d` on the subsequence of letters in `w`, ignoring the rest; accepts
/// when at least one `w`-letter occurred and `d` accepts the subsequence.
/// This is the forward reading of projection: the automaton of the projected
/// requirement evaluated over the full window.
pub fn project_onto_letters(d: &Dfa, w: &BTreeSet<Letter>) -> Dfa {
    let d = strip_epsilon(d);
    let k = letter_count(&d.vocab);
    let n = d.n_states();
    // state: (q of d, seen a w-letter yet); encoded q * 2 + seen
    let enc = |q: StateId, seen: bool| q * 2 + usize::from(seen);
    let mut trans = vec![vec![0usize; k]; n * 2];
    for q in 0..n {
        for s in 0..k {
            if w.contains(&(s as Letter)) {
                trans[enc(q, false)][s] = enc(d.step(q, s as Letter), true);
                trans[enc(q, true)][s] = enc(d.step(q, s as Letter), true);
            } else {
                trans[enc(q, false)][s] = enc(q, false);
                trans[enc(q, true)][s] = enc(q, true);
            }
        }
    }
    let accepting = (0..n).filter(|q| d.accepting.contains(q)).map(|q| enc(q, true)).collect();
    Dfa { vocab: d.vocab.clone(), trans, initial: enc(d.initial, false), accepting }
}

/// Words over `w`-letters only such that inserting some `non-w` letters
/// (anywhere: before, between, after) yields a word accepted by `d`. This is
/// the inverse reading of projection: which projected windows admit an
/// accepted expansion.
pub fn insertion_closure_nfa(d: &Dfa, w: &BTreeSet<Letter>) -> Nfa {
    let d = strip_epsilon(d);
    let k = letter_count(&d.vocab);
    let n = d.n_states();
    // closure under reading any word of non-w letters
    let closure = |start: StateId| -> BTreeSet<StateId> {
        let mut set = BTreeSet::from([start]);
        let mut queue = VecDeque::from([start]);
        while let Some(q) = queue.pop_front() {
            for s in 0..k {
                if w.contains(&(s as Letter)) {
                    continue;
                }
                let t = d.step(q, s as Letter);
                if set.insert(t) {
                    queue.push_back(t);
                }
            }
        }
        set
    };
    let closures: Vec<BTreeSet<StateId>> = (0..n).map(closure).collect();
    let mut out = Nfa {
        vocab: d.vocab.clone(),
        n_states: n,
        initial: BTreeSet::from([d.initial]),
        accepting: (0..n)
            .filter(|&q| closures[q].iter().any(|c| d.accepting.contains(c)))
            .collect(),
        trans: BTreeMap::new(),
    };
    for q in 0..n {
        for &s in w {
            for &c in &closures[q] {
                out.add_edge(q, s, d.step(c, s));
            }
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Buchi automata

/// Nondeterministic Buchi automaton; a run is accepting when it visits the
/// accepting set infinitely often.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Nba {
    pub vocab: Vocabulary,
    pub n_states: usize,
    pub initial: BTreeSet<StateId>,
    pub accepting: BTreeSet<StateId>,
    pub trans: BTreeMap<(StateId, Letter), BTreeSet<StateId>>,
}

impl Nba {
    pub fn add_edge(&mut self, from: StateId, s: Letter, to: StateId) {
        self.trans.entry((from, s)).or_default().insert(to);
    }

    pub fn successors(&self, from: StateId, s: Letter) -> Option<&BTreeSet<StateId>> {
        self.trans.get(&(from, s))
    }
}

/// An ultimately periodic omega-word `stem . loop^omega`; the loop is non-empty.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lasso {
    pub stem: Vec<Letter>,
    pub cycle: Vec<Letter>,
}

impl Lasso {
    pub fn letter_at(&self, i: usize) -> Letter {
        if i < self.stem.len() {
            self.stem[i]
        } else {
            self.cycle[(i - self.stem.len()) % self.cycle.len()]
        }
    }
}

/// Does the automaton accept `lasso`? Decided on the product of the automaton
/// with the lasso shape.
pub fn nba_accepts_lasso(n: &Nba, lasso: &Lasso) -> bool {
    assert!(!lasso.cycle.is_empty());
    let period = lasso.stem.len() + lasso.cycle.len();
    let pos_next = |i: usize| if i + 1 == period { lasso.stem.len() } else { i + 1 };
    let pos_letter = |i: usize| {
        if i < lasso.stem.len() {
            lasso.stem[i]
        } else {
            lasso.cycle[i - lasso.stem.len()]
        }
    };
    // reachable product nodes
    let mut reach: BTreeSet<(StateId, usize)> = BTreeSet::new();
    let mut queue: VecDeque<(StateId, usize)> = n.initial.iter().map(|&q| (q, 0)).collect();
    reach.extend(queue.iter().copied());
    while let Some((q, i)) = queue.pop_front() {
        if let Some(ts) = n.successors(q, pos_letter(i)) {
            for &t in ts {
                let node = (t, pos_next(i));
                if reach.insert(node) {
                    queue.push_back(node);
                }
            }
        }
    }
    // accepting node on a cycle (necessarily within the loop positions)
    for &(q, i) in &reach {
        if !n.accepting.contains(&q) || i < lasso.stem.len() {
            continue;
        }
        // search a path from (q, i) back to itself
        let mut seen = BTreeSet::new();
        let mut queue = VecDeque::from([(q, i)]);
        while let Some((p, j)) = queue.pop_front() {
            if let Some(ts) = n.successors(p, pos_letter(j)) {
                for &t in ts {
                    let node = (t, pos_next(j));
                    if node == (q, i) {
                        return true;
                    }
                    if seen.insert(node) {
                        queue.push_back(node);
                    }
                }
            }
        }
    }
    false
}

/// Emptiness check with witness: a lasso accepted by the automaton, or `None`
/// when the language is empty. Deterministic: accepting states are tried in
/// ascending order, paths are breadth-first over ascending letters.
pub fn nba_witness(n: &Nba) -> Option<Lasso> {
    // forward reachability with path reconstruction
    let mut parent: BTreeMap<StateId, (StateId, Letter)> = BTreeMap::new();
    let mut reach: BTreeSet<StateId> = n.initial.clone();
    let mut queue: VecDeque<StateId> = n.initial.iter().copied().collect();
    while let Some(q) = queue.pop_front() {
        for s in letters(&n.vocab) {
            if let Some(ts) = n.successors(q, s) {
                for &t in ts {
                    if reach.insert(t) {
                        parent.insert(t, (q, s));
                        queue.push_back(t);
                    }
                }
            }
        }
    }
    for &f in &n.accepting {
        if !reach.contains(&f) {
            continue;
        }
        // cycle through f, at least one step
        let mut cyc_parent: BTreeMap<StateId, (StateId, Letter)> = BTreeMap::new();
        let mut seen: BTreeSet<StateId> = BTreeSet::new();
        let mut queue = VecDeque::from([f]);
        let mut closed: Option<Letter> = None;
        let mut close_from = f;
        'bfs: while let Some(q) = queue.pop_front() {
            for s in letters(&n.vocab) {
                if let Some(ts) = n.successors(q, s) {
                    for &t in ts {
                        if t == f {
                            closed = Some(s);
                            close_from = q;
                            break 'bfs;
                        }
                        if seen.insert(t) {
                            cyc_parent.insert(t, (q, s));
                            queue.push_back(t);
                        }
                    }
                }
            }
        }
        let Some(last) = closed else { continue };
        let mut cycle = vec![last];
        let mut at = close_from;
        while at != f {
            let (p, s) = cyc_parent[&at];
            cycle.push(s);
            at = p;
        }
        cycle.reverse();
        let mut stem = Vec::new();
        let mut at = f;
        while !n.initial.contains(&at) {
            let (p, s) = parent[&at];
            stem.push(s);
            at = p;
        }
        stem.reverse();
        return Some(Lasso { stem, cycle });
    }
    None
}

/// Language-preserving prune: keeps only states that are reachable and can
/// still contribute to an accepting run (reach an accepting state that lies on
/// a cycle through itself). Product constructions leave plenty of dead weight;
/// trimming keeps downstream determinization within its guards.
pub fn nba_trim(n: &Nba) -> Nba {
    let reach_from = |starts: &BTreeSet<StateId>| -> BTreeSet<StateId> {
        let mut seen = starts.clone();
        let mut queue: VecDeque<StateId> = starts.iter().copied().collect();
        while let Some(q) = queue.pop_front() {
            for s in letters(&n.vocab) {
                if let Some(ts) = n.successors(q, s) {
                    for &t in ts {
                        if seen.insert(t) {
                            queue.push_back(t);
                        }
                    }
                }
            }
        }
        seen
    };
    let reachable = reach_from(&n.initial);
    // accepting states on a cycle through themselves
    let mut cyclic: BTreeSet<StateId> = BTreeSet::new();
    for &f in &n.accepting {
        if !reachable.contains(&f) {
            continue;
        }
        let mut succ: BTreeSet<StateId> = BTreeSet::new();
        for s in letters(&n.vocab) {
            if let Some(ts) = n.successors(f, s) {
                succ.extend(ts.iter().copied());
            }
        }
        if reach_from(&succ).contains(&f) {
            cyclic.insert(f);
        }
    }
    // states that can reach a cyclic accepting state, by backward saturation
    let mut live = cyclic.clone();
    loop {
        let mut grew = false;
        for (&(q, _), ts) in &n.trans {
            if !live.contains(&q) && ts.iter().any(|t| live.contains(t)) {
                live.insert(q);
                grew = true;
            }
        }
        if !grew {
            break;
        }
    }
    let keep: Vec<StateId> = reachable.intersection(&live).copied().collect();
    if keep.is_empty() {
        // empty language: a single initial state with no edges
        return Nba {
            vocab: n.vocab.clone(),
            n_states: 1,
            initial: BTreeSet::from([0]),
            accepting: BTreeSet::new(),
            trans: BTreeMap::new(),
        };
    }
    let index: BTreeMap<StateId, StateId> =
        keep.iter().enumerate().map(|(i, &q)| (q, i)).collect();
    let mut out = Nba {
        vocab: n.vocab.clone(),
        n_states: keep.len(),
        initial: n.initial.iter().filter_map(|q| index.get(q).copied()).collect(),
        accepting: n.accepting.iter().filter_map(|q| index.get(q).copied()).collect(),
        trans: BTreeMap::new(),
    };
    if out.initial.is_empty() {
        // initial states were all dead; keep one so the structure stays valid
        return Nba {
            vocab: n.vocab.clone(),
            n_states: 1,
            initial: BTreeSet::from([0]),
            accepting: BTreeSet::new(),
            trans: BTreeMap::new(),
        };
    }
    for (&(q, s), ts) in &n.trans {
        let Some(&q2) = index.get(&q) else { continue };
        for &t in ts {
            if let Some(&t2) = index.get(&t) {
                out.add_edge(q2, s, t2);
            }
        }
    }
    out
}

/// Intersection with the usual two-phase flag construction.
pub fn nba_intersection(a: &Nba, b: &Nba) -> Result<Nba, AutomataError> {
    if a.vocab != b.vocab {
        return Err(AutomataError::VocabMismatch);
    }
    let nb = b.n_states;
    // state id: ((qa * nb) + qb) * 2 + phase
    let enc = |qa: StateId, qb: StateId, ph: usize| (qa * nb + qb) * 2 + ph;
    let mut out = Nba {
        vocab: a.vocab.clone(),
        n_states: a.n_states * nb * 2,
        initial: BTreeSet::new(),
        accepting: BTreeSet::new(),
        trans: BTreeMap::new(),
    };
    for &qa in &a.initial {
        for &qb in &b.initial {
            out.initial.insert(enc(qa, qb, 0));
        }
    }
    for qa in 0..a.n_states {
        for qb in 0..nb {
            if b.accepting.contains(&qb) {
                out.accepting.insert(enc(qa, qb, 1));
            }
        }
    }
    // phase 0 waits for an `a`-accepting target, phase 1 for a `b`-accepting
    // one; passing through phase 1 at a `b`-accepting state certifies both
    for (&(qa, s), tas) in &a.trans {
        for qb in 0..nb {
            let Some(tbs) = b.successors(qb, s) else { continue };
            for &ta in tas {
                for &tb in tbs {
                    let to0 = enc(ta, tb, usize::from(a.accepting.contains(&ta)));
                    out.add_edge(enc(qa, qb, 0), s, to0);
                    let to1 = enc(ta, tb, usize::from(!b.accepting.contains(&tb)));
                    out.add_edge(enc(qa, qb, 1), s, to1);
                }
            }
        }
    }
    Ok(out)
}

pub fn nba_union(a: &Nba, b: &Nba) -> Result<Nba, AutomataError> {
    if a.vocab != b.vocab {
        return Err(AutomataError::VocabMismatch);
    }
    let na = a.n_states;
    let mut out = Nba {
        vocab: a.vocab.clone(),
        n_states: na + b.n_states,
        initial: a.initial.clone(),
        accepting: a.accepting.clone(),
        trans: a.trans.clone(),
    };
    out.initial.extend(b.initial.iter().map(|&q| na + q));
    out.accepting.extend(b.accepting.iter().map(|&q| na + q));
    for (&(q, s), ts) in &b.trans {
        for &t in ts {
            out.add_edge(na + q, s, na + t);
        }
    }
    Ok(out)
}

/// Omega-fusion: omega-words with a position `k` such that the finite prefix
/// through `k` is accepted by `c` and the omega-suffix from `k` (sharing the
/// letter at `k`) is accepted by `n`.
pub fn fusion_omega(c: &Dfa, n: &Nba) -> Result<Nba, AutomataError> {
    if c.vocab != n.vocab {
        return Err(AutomataError::VocabMismatch);
    }
    let c = strip_epsilon(c);
    let nc = c.n_states();
    let mut out = Nba {
        vocab: c.vocab.clone(),
        n_states: nc + n.n_states,
        initial: BTreeSet::from([c.initial]),
        accepting: n.accepting.iter().map(|&q| nc + q).collect(),
        trans: BTreeMap::new(),
    };
    for q in 0..nc {
        for s in letters(&c.vocab) {
            out.add_edge(q, s, c.step(q, s));
            if c.accepting.contains(&c.step(q, s)) {
                // shared letter: close the prefix and start the suffix on `s`
                for &i in &n.initial {
                    if let Some(ts) = n.successors(i, s) {
                        for &t in ts {
                            out.add_edge(q, s, nc + t);
                        }
                    }
                }
            }
        }
    }
    for (&(q, s), ts) in &n.trans {
        for &t in ts {
            out.add_edge(nc + q, s, nc + t);
        }
    }
    Ok(out)
}

/// Omega-words all of whose letters satisfy the predicate encoded by the
/// accepting letter set.
pub fn nba_all_letters(vocab: &Vocabulary, allowed: &BTreeSet<Letter>) -> Nba {
    let mut out = Nba {
        vocab: vocab.clone(),
        n_states: 1,
        initial: BTreeSet::from([0]),
        accepting: BTreeSet::from([0]),
        trans: BTreeMap::new(),
    };
    for &s in allowed {
        out.add_edge(0, s, 0);
    }
    out
}

// ---------------------------------------------------------------------------
// deterministic parity automata

/// Deterministic parity automaton with min-even acceptance: a run is
/// accepting when the least priority visited infinitely often is even.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dpa {
    pub vocab: Vocabulary,
    pub trans: Vec<Vec<StateId>>,
    pub initial: StateId,
    pub priority: Vec<u32>,
}

impl Dpa {
    pub fn n_states(&self) -> usize {
        self.trans.len()
    }

    pub fn step(&self, q: StateId, s: Letter) -> StateId {
        self.trans[q][s as usize]
    }
}

/// Does the parity automaton accept the lasso? The deterministic run is
/// unwound until the loop state repeats; the verdict is the parity of the
/// least priority on the repeating segment.
pub fn dpa_accepts_lasso(d: &Dpa, lasso: &Lasso) -> bool {
    assert!(!lasso.cycle.is_empty());
    let mut q = d.initial;
    for &s in &lasso.stem {
        q = d.step(q, s);
    }
    // iterate the cycle until the state at the loop head repeats
    let mut head_seen: BTreeMap<StateId, usize> = BTreeMap::new();
    let mut heads: Vec<StateId> = Vec::new();
    let mut trace: Vec<Vec<StateId>> = Vec::new(); // states visited per lap, excluding head
    let (mu, lambda) = loop {
        if let Some(&first) = head_seen.get(&q) {
            break (first, heads.len() - first);
        }
        head_seen.insert(q, heads.len());
        heads.push(q);
        let mut lap = Vec::new();
        let mut cur = q;
        for &s in &lasso.cycle {
            cur = d.step(cur, s);
            lap.push(cur);
        }
        trace.push(lap);
        q = cur;
    };
    let mut min_p = u32::MAX;
    for lap in trace.iter().skip(mu).take(lambda) {
        for &st in lap {
            min_p = min_p.min(d.priority[st]);
        }
    }
    min_p % 2 == 0
}

/// Complement by shifting every priority up by one.
pub fn dpa_complement(d: &Dpa) -> Dpa {
    Dpa {
        vocab: d.vocab.clone(),
        trans: d.trans.clone(),
        initial: d.initial,
        priority: d.priority.iter().map(|&p| p + 1).collect(),
    }
}

/// Buchi automaton for the same language: guess a point after which every
/// priority stays at or above some even bound `c`, hit exactly `c` infinitely
/// often.
pub fn dpa_to_nba(d: &Dpa) -> Nba {
    let n = d.n_states();
    let evens: Vec<u32> = {
        let set: BTreeSet<u32> = d.priority.iter().copied().filter(|p| p % 2 == 0).collect();
        set.into_iter().collect()
    };
    let enc = |q: StateId, ci: usize| n + q * evens.len() + ci;
    let mut out = Nba {
        vocab: d.vocab.clone(),
        n_states: n + n * evens.len(),
        initial: BTreeSet::from([d.initial]),
        accepting: BTreeSet::new(),
        trans: BTreeMap::new(),
    };
    for q in 0..n {
        for (ci, &c) in evens.iter().enumerate() {
            if d.priority[q] == c {
                out.accepting.insert(enc(q, ci));
            }
        }
    }
    for q in 0..n {
        for s in letters(&d.vocab) {
            let t = d.step(q, s);
            out.add_edge(q, s, t);
            for (ci, &c) in evens.iter().enumerate() {
                if d.priority[t] >= c {
                    // jump: guess that the bound holds from the next state on
                    out.add_edge(q, s, enc(t, ci));
                    out.add_edge(enc(q, ci), s, enc(t, ci));
                }
            }
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Buchi determinization (ordered-tree construction)

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
struct TNode {
    name: u32,
    label: BTreeSet<StateId>,
    children: Vec<TNode>,
}

impl TNode {
    fn visit_mut<F: FnMut(&mut TNode)>(&mut self, f: &mut F) {
        f(self);
        for c in &mut self.children {
            c.visit_mut(f);
        }
    }

    fn visit<F: FnMut(&TNode)>(&self, f: &mut F) {
        f(self);
        for c in &self.children {
            c.visit(f);
        }
    }

    fn remove_states(&mut self, states: &BTreeSet<StateId>) {
        self.visit_mut(&mut |n| n.label.retain(|q| !states.contains(q)));
    }

    fn max_name(&self) -> u32 {
        let mut m = 0;
        self.visit(&mut |n| m = m.max(n.name));
        m
    }
}

/// One step of the tree construction; returns the emitted priority.
fn tree_step(root: &mut Option<TNode>, n: &Nba, s: Letter, neutral: u32) -> u32 {
    let Some(tree) = root else { return neutral };
    // 1. powerset update of every label
    tree.visit_mut(&mut |node| {
        let mut next = BTreeSet::new();
        for &q in &node.label {
            if let Some(ts) = n.successors(q, s) {
                next.extend(ts.iter().copied());
            }
        }
        node.label = next;
    });
    // 2. spawn a youngest child holding the accepting part of each label;
    //    fresh names in ascending parent-name order, all larger than any live name
    let mut fresh = tree.max_name() + 1;
    let mut parents: Vec<u32> = Vec::new();
    tree.visit(&mut |node| {
        if node.label.iter().any(|q| n.accepting.contains(q)) {
            parents.push(node.name);
        }
    });
    parents.sort_unstable();
    for pname in parents {
        let mut assign = |node: &mut TNode| {
            if node.name == pname {
                let seed: BTreeSet<StateId> =
                    node.label.iter().copied().filter(|q| n.accepting.contains(q)).collect();
                node.children.push(TNode { name: 0, label: seed, children: Vec::new() });
            }
        };
        tree.visit_mut(&mut assign);
        // the placeholder name is patched right away; visit order is stable
        tree.visit_mut(&mut |node| {
            for c in &mut node.children {
                if c.name == 0 {
                    c.name = fresh;
                    fresh += 1;
                }
            }
        });
    }
    // 3. horizontal merge: an older sibling keeps every shared state
    fn horizontal(node: &mut TNode) {
        let mut claimed: BTreeSet<StateId> = BTreeSet::new();
        for c in &mut node.children {
            c.remove_states(&claimed);
            claimed.extend(c.label.iter().copied());
        }
        for c in &mut node.children {
            horizontal(c);
        }
    }
    horizontal(tree);
    // 4. remove empty nodes; e is the least name that dies
    let mut e = u32::MAX;
    fn drop_empty(node: &mut TNode, e: &mut u32) {
        node.children.retain(|c| {
            if c.label.is_empty() {
                c.visit(&mut |d| *e = (*e).min(d.name));
                false
            } else {
                true
            }
        });
        for c in &mut node.children {
            drop_empty(c, e);
        }
    }
    if tree.label.is_empty() {
        // the root carries the least live name, so the whole tree dying
        // always emits the strongest odd priority
        tree.visit(&mut |d| e = e.min(d.name));
        *root = None;
        return 2 * e - 1;
    }
    drop_empty(tree, &mut e);
    // 5. vertical merge: a node whose children cover it drops all descendants;
    //    f is the least such name, the removals are not deaths
    let mut f = u32::MAX;
    fn vertical(node: &mut TNode, f: &mut u32) {
        let union: BTreeSet<StateId> =
            node.children.iter().flat_map(|c| c.label.iter().copied()).collect();
        if !node.children.is_empty() && union == node.label {
            *f = (*f).min(node.name);
            node.children.clear();
        } else {
            for c in &mut node.children {
                vertical(c, f);
            }
        }
    }
    vertical(tree, &mut f);
    // 6. order-preserving compaction of names
    let mut live: Vec<u32> = Vec::new();
    tree.visit(&mut |n| live.push(n.name));
    live.sort_unstable();
    let rename: BTreeMap<u32, u32> =
        live.iter().enumerate().map(|(i, &n)| (n, i as u32 + 1)).collect();
    tree.visit_mut(&mut |n| n.name = rename[&n.name]);
    // priority: green beats death at a smaller name, otherwise the death wins
    if f < e {
        2 * f
    } else if e != u32::MAX {
        2 * e - 1
    } else {
        neutral
    }
}

/// Determinization of a Buchi automaton into a parity automaton over ordered
/// trees of state sets. The emitted transition priority is folded into the
/// target state, so priorities live on states.
pub fn nba_determinize(n: &Nba) -> Result<Dpa, AutomataError> {
    check_vocab(&n.vocab)?;
    if n.n_states > PARITY_INPUT_LIMIT {
        return Err(AutomataError::TooManyStates { have: n.n_states, limit: PARITY_INPUT_LIMIT });
    }
    let k = letter_count(&n.vocab);
    let neutral = 2 * (2 * n.n_states as u32 + 2) + 1;
    let initial_tree = if n.initial.is_empty() {
        None
    } else {
        Some(TNode { name: 1, label: n.initial.clone(), children: Vec::new() })
    };
    let mut index: BTreeMap<(Option<TNode>, u32), StateId> = BTreeMap::new();
    let mut states: Vec<(Option<TNode>, u32)> = Vec::new();
    let mut trans: Vec<Vec<StateId>> = Vec::new();
    let start = (initial_tree, neutral);
    index.insert(start.clone(), 0);
    states.push(start);
    trans.push(vec![usize::MAX; k]);
    let mut queue = VecDeque::from([0usize]);
    while let Some(id) = queue.pop_front() {
        for s in 0..k {
            let mut tree = states[id].0.clone();
            let p = tree_step(&mut tree, n, s as Letter, neutral);
            let key = (tree, p);
            let tid = match index.get(&key) {
                Some(&t) => t,
                None => {
                    let t = states.len();
                    if t >= PARITY_STATE_LIMIT {
                        return Err(AutomataError::TooManyStates {
                            have: t + 1,
                            limit: PARITY_STATE_LIMIT,
                        });
                    }
                    index.insert(key.clone(), t);
                    states.push(key);
                    trans.push(vec![usize::MAX; k]);
                    queue.push_back(t);
                    t
                }
            };
            trans[id][s] = tid;
        }
    }
    let priority = states.iter().map(|(_, p)| *p).collect();
    Ok(Dpa { vocab: n.vocab.clone(), trans, initial: 0, priority })
}

/// DFA of non-empty finite prefixes of the parity automaton that end in one
/// of the `targets` states.
pub fn dpa_prefix_dfa(d: &Dpa, targets: &BTreeSet<StateId>) -> Dfa {
    let dfa = Dfa {
        vocab: d.vocab.clone(),
        trans: d.trans.clone(),
        initial: d.initial,
        accepting: targets.clone(),
    };
    canonical_min(&dfa)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vocab1() -> Vocabulary {
        Vocabulary::new(["p"]).unwrap()
    }

    fn vocab2() -> Vocabulary {
        Vocabulary::new(["p", "q"]).unwrap()
    }

    /// all words over {p}, {}-alphabet whose letters all have p set
    fn dfa_all_p(v: &Vocabulary) -> Dfa {
        // states: 0 start, 1 good, 2 sink
        let k = letter_count(v);
        let mut trans = vec![vec![0; k]; 3];
        for s in 0..k {
            let has_p = s & 1 != 0;
            trans[0][s] = if has_p { 1 } else { 2 };
            trans[1][s] = if has_p { 1 } else { 2 };
            trans[2][s] = 2;
        }
        Dfa { vocab: v.clone(), trans, initial: 0, accepting: BTreeSet::from([1]) }
    }

    #[test]
    fn canonical_min_is_canonical() {
        let v = vocab1();
        let a = dfa_all_p(&v);
        // same language, different presentation: add an unreachable state and
        // a duplicate of state 1
        let k = letter_count(&v);
        let mut trans = a.trans.clone();
        trans.push(vec![3, 3]);
        trans[0][1] = 3; // duplicate good state
        trans.push(vec![2, 1]); // unreachable
        assert_eq!(trans[3], vec![3, 3]); // placeholder check below fixes rows
        let mut b = Dfa { vocab: v.clone(), trans, initial: 0, accepting: BTreeSet::from([1, 3]) };
        b.trans[3] = vec![2, 1];
        b.trans[4] = vec![0, 0];
        assert_eq!(canonical_min(&a), canonical_min(&b));
        assert_eq!(k, 2);
    }

    #[test]
    fn minimization_strips_empty_word() {
        let v = vocab1();
        // a DFA accepting the empty word and all words: initial accepting
        let d = Dfa {
            vocab: v.clone(),
            trans: vec![vec![0, 0]],
            initial: 0,
            accepting: BTreeSet::from([0]),
        };
        let m = canonical_min(&d);
        assert!(!m.accepting.contains(&m.initial));
        assert!(m.accepts(&[0]));
        assert!(m.accepts(&[1, 0]));
    }

    #[test]
    fn difference_witness_is_shortest() {
        let v = vocab1();
        let a = dfa_all_p(&v); // p+
        let b = dfa_sigma_plus(&v); // all non-empty
        let w = dfa_difference_witness(&a, &b).unwrap().unwrap();
        assert_eq!(w, vec![0]); // the one-letter word without p
        assert!(dfa_equivalent(&a, &a).unwrap());
    }

    #[test]
    fn combine_and_complement() {
        let v = vocab1();
        let a = dfa_all_p(&v);
        let c = dfa_complement(&a);
        assert!(!c.accepts(&[1, 1]));
        assert!(c.accepts(&[1, 0]));
        assert!(!c.accepts(&[]));
        let both = dfa_combine(&a, &c, BoolOp::And).unwrap();
        assert!(both.is_empty_language());
        let either = dfa_combine(&a, &c, BoolOp::Or).unwrap();
        assert!(dfa_equivalent(&either, &dfa_sigma_plus(&v)).unwrap());
    }

    #[test]
    fn fusion_concat_shares_a_letter() {
        let v = vocab1();
        // L(a) = p+, L(b) = words ending without p... use sigma+ for b
        let a = dfa_all_p(&v);
        let b = dfa_sigma_plus(&v);
        let f = determinize(&fusion_concat(&a, &b).unwrap()).unwrap();
        // w in fusion iff some non-empty prefix is all-p (the shared letter
        // must carry p); so [1,0] yes, [0,1] no, [1] yes (prefix=suffix=[1])
        assert!(f.accepts(&[1, 0]));
        assert!(!f.accepts(&[0, 1]));
        assert!(f.accepts(&[1]));
        assert!(!f.accepts(&[0]));
    }

    #[test]
    fn fusion_star_includes_single_letters() {
        let v = vocab1();
        // L(a) = exactly the 2-letter word [1,1]
        let a = dfa_from_words(&v, &BTreeSet::from([vec![1, 1]]));
        let st = determinize(&fusion_star(&a).unwrap()).unwrap();
        assert!(st.accepts(&[0])); // one-state interval
        assert!(st.accepts(&[1]));
        assert!(st.accepts(&[1, 1])); // one chunk
        assert!(st.accepts(&[1, 1, 1])); // two chunks sharing the middle letter
        assert!(!st.accepts(&[1, 0]));
        assert!(!st.accepts(&[1, 1, 0]));
    }

    #[test]
    fn reversal_reverses_words() {
        let v = vocab1();
        let a = dfa_from_words(&v, &BTreeSet::from([vec![1, 0, 0]]));
        let r = determinize(&dfa_reverse(&a)).unwrap();
        assert!(r.accepts(&[0, 0, 1]));
        assert!(!r.accepts(&[1, 0, 0]));
    }

    #[test]
    fn relabel_dont_care_projects_a_variable() {
        let v = vocab2();
        // exactly the word [{p,q}]
        let a = dfa_from_words(&v, &BTreeSet::from([vec![0b11]]));
        let n = nfa_relabel_dont_care(&nfa_from_dfa(&a), 1);
        let d = determinize(&n).unwrap();
        assert!(d.accepts(&[0b11]));
        assert!(d.accepts(&[0b01])); // q cleared
        assert!(!d.accepts(&[0b10])); // p must still hold
    }

    #[test]
    fn suffix_after_shared_reads_one_free_letter() {
        let v = vocab1();
        let a = dfa_all_p(&v); // p+
        // state after reading one p-letter is accepting; call it q
        let q = a.run(&[1]);
        let m = suffix_after_shared(&a, q);
        assert!(m.accepts(&[0])); // free letter, then empty continuation
        assert!(m.accepts(&[0, 1]));
        assert!(!m.accepts(&[0, 0]));
    }

    fn nba_inf_p(v: &Vocabulary) -> Nba {
        // infinitely many p-letters: single state accepting on p-loop? needs 2 states
        let mut n = Nba {
            vocab: v.clone(),
            n_states: 2,
            initial: BTreeSet::from([0]),
            accepting: BTreeSet::from([1]),
            trans: BTreeMap::new(),
        };
        // state 0: saw no p yet this round; state 1: p seen (accepting)
        n.add_edge(0, 0, 0);
        n.add_edge(0, 1, 1);
        n.add_edge(1, 0, 0);
        n.add_edge(1, 1, 1);
        n
    }

    fn nba_fin_p(v: &Vocabulary) -> Nba {
        // finitely many p: guess a point after which no p occurs
        let mut n = Nba {
            vocab: v.clone(),
            n_states: 2,
            initial: BTreeSet::from([0]),
            accepting: BTreeSet::from([1]),
            trans: BTreeMap::new(),
        };
        n.add_edge(0, 0, 0);
        n.add_edge(0, 1, 0);
        n.add_edge(0, 0, 1);
        n.add_edge(1, 0, 1);
        n
    }

    #[test]
    fn nba_lasso_membership() {
        let v = vocab1();
        let inf = nba_inf_p(&v);
        assert!(nba_accepts_lasso(&inf, &Lasso { stem: vec![], cycle: vec![1] }));
        assert!(nba_accepts_lasso(&inf, &Lasso { stem: vec![0], cycle: vec![0, 1] }));
        assert!(!nba_accepts_lasso(&inf, &Lasso { stem: vec![1], cycle: vec![0] }));
        let fin = nba_fin_p(&v);
        assert!(nba_accepts_lasso(&fin, &Lasso { stem: vec![1], cycle: vec![0] }));
        assert!(!nba_accepts_lasso(&fin, &Lasso { stem: vec![], cycle: vec![1] }));
    }

    #[test]
    fn nba_witness_finds_a_lasso() {
        let v = vocab1();
        let inf = nba_inf_p(&v);
        let w = nba_witness(&inf).unwrap();
        assert!(nba_accepts_lasso(&inf, &w));
        // empty automaton
        let dead = Nba {
            vocab: v.clone(),
            n_states: 1,
            initial: BTreeSet::from([0]),
            accepting: BTreeSet::new(),
            trans: BTreeMap::new(),
        };
        assert!(nba_witness(&dead).is_none());
    }

    #[test]
    fn nba_intersection_and_union() {
        let v = vocab1();
        let inf = nba_inf_p(&v);
        let fin = nba_fin_p(&v);
        let both = nba_intersection(&inf, &fin).unwrap();
        assert!(nba_witness(&both).is_none());
        let either = nba_union(&inf, &fin).unwrap();
        assert!(nba_accepts_lasso(&either, &Lasso { stem: vec![], cycle: vec![1] }));
        assert!(nba_accepts_lasso(&either, &Lasso { stem: vec![], cycle: vec![0] }));
    }

    #[test]
    fn trim_preserves_the_language() {
        let v = vocab1();
        // intersection products carry unreachable/dead states
        let both = nba_intersection(&nba_inf_p(&v), &nba_fin_p(&v)).unwrap();
        let t = nba_trim(&both);
        assert_eq!(t.n_states, 1);
        assert!(nba_witness(&t).is_none());
        let either = nba_union(&nba_inf_p(&v), &nba_fin_p(&v)).unwrap();
        let t = nba_trim(&either);
        assert!(t.n_states <= either.n_states);
        for l in [
            Lasso { stem: vec![], cycle: vec![1] },
            Lasso { stem: vec![], cycle: vec![0] },
            Lasso { stem: vec![1], cycle: vec![0, 1] },
            Lasso { stem: vec![0, 0], cycle: vec![1, 0] },
        ] {
            assert_eq!(nba_accepts_lasso(&either, &l), nba_accepts_lasso(&t, &l), "{l:?}");
        }
    }

    #[test]
    fn determinization_agrees_on_lassos() {
        let v = vocab1();
        for (nba, name) in [(nba_inf_p(&v), "inf"), (nba_fin_p(&v), "fin")] {
            let dpa = nba_determinize(&nba).unwrap();
            let lassos = [
                Lasso { stem: vec![], cycle: vec![1] },
                Lasso { stem: vec![], cycle: vec![0] },
                Lasso { stem: vec![1], cycle: vec![0] },
                Lasso { stem: vec![0], cycle: vec![1] },
                Lasso { stem: vec![], cycle: vec![0, 1] },
                Lasso { stem: vec![1, 1], cycle: vec![0, 0] },
            ];
            for l in &lassos {
                assert_eq!(
                    nba_accepts_lasso(&nba, l),
                    dpa_accepts_lasso(&dpa, l),
                    "disagreement on {name} for {l:?}"
                );
            }
            // complement times original is empty
            let comp = dpa_to_nba(&dpa_complement(&dpa));
            let prod = nba_intersection(&comp, &nba).unwrap();
            assert!(nba_witness(&prod).is_none(), "complement overlaps for {name}");
        }
    }

    #[test]
    fn dpa_to_nba_round_trip() {
        let v = vocab1();
        let nba = nba_inf_p(&v);
        let dpa = nba_determinize(&nba).unwrap();
        let back = dpa_to_nba(&dpa);
        for l in [
            Lasso { stem: vec![], cycle: vec![1] },
            Lasso { stem: vec![1], cycle: vec![0] },
            Lasso { stem: vec![0, 1], cycle: vec![1, 0] },
        ] {
            assert_eq!(nba_accepts_lasso(&nba, &l), nba_accepts_lasso(&back, &l), "{l:?}");
        }
    }

    #[test]
    fn fusion_omega_splits_at_a_shared_letter() {
        let v = vocab1();
        // prefix language: exactly [1] (single p-letter); suffix: all-0 forever
        let pre = dfa_from_words(&v, &BTreeSet::from([vec![1]]));
        let suf = nba_all_letters(&v, &BTreeSet::from([0]));
        let f = fusion_omega(&pre, &suf).unwrap();
        // shared letter must be both in L(pre) (=1) and start the suffix (=0): impossible
        assert!(nba_witness(&f).is_none());
        // suffix: first letter anything, then all-0
        let mut suf2 = Nba {
            vocab: v.clone(),
            n_states: 2,
            initial: BTreeSet::from([0]),
            accepting: BTreeSet::from([1]),
            trans: BTreeMap::new(),
        };
        suf2.add_edge(0, 0, 1);
        suf2.add_edge(0, 1, 1);
        suf2.add_edge(1, 0, 1);
        let f2 = fusion_omega(&pre, &suf2).unwrap();
        assert!(nba_accepts_lasso(&f2, &Lasso { stem: vec![1], cycle: vec![0] }));
        assert!(!nba_accepts_lasso(&f2, &Lasso { stem: vec![0], cycle: vec![0] }));
        assert!(!nba_accepts_lasso(&f2, &Lasso { stem: vec![1], cycle: vec![1] }));
    }

    #[test]
    fn restrict_letters_masks_the_alphabet() {
        let v = vocab1();
        let all = dfa_sigma_plus(&v);
        let only_p = all.restrict_letters(&BTreeSet::from([1]));
        assert!(only_p.accepts(&[1, 1]));
        assert!(!only_p.accepts(&[1, 0]));
    }
}
