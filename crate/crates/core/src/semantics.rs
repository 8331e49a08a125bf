//! Reference semantics: direct evaluation of formulas on finite windows and
//! on ultimately periodic omega-words.
//!
//! A window is a finite run of states; evaluation of neighbourhood
//! modalities is truncated at the window bounds, so the verdict is exact
//! precisely for formulas that never look outside their reference interval.
//! Lasso evaluation handles the future fragment exactly by tabulating
//! reachability values per periodic position class.

use crate::automata::{Dfa, Lasso, Letter};
use crate::compile::{itl_to_dfa, letter_satisfies, CompileError};
use crate::syntax::{Formula, Vocabulary};
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

/// A finite, non-empty run of states over a vocabulary.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Window {
    vocab: Vocabulary,
    letters: Vec<Letter>,
}

impl Window {
    pub fn new(vocab: Vocabulary, letters: Vec<Letter>) -> Result<Window, WindowError> {
        if letters.is_empty() {
            return Err(WindowError::Empty);
        }
        let limit = 1u32 << vocab.len();
        if let Some(&bad) = letters.iter().find(|&&l| l >= limit) {
            return Err(WindowError::LetterOutOfRange { letter: bad, vars: vocab.len() });
        }
        Ok(Window { vocab, letters })
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn letters(&self) -> &[Letter] {
        &self.letters
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// An ultimately periodic omega-word over a vocabulary.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LassoWindow {
    vocab: Vocabulary,
    lasso: Lasso,
}

impl LassoWindow {
    pub fn new(vocab: Vocabulary, stem: Vec<Letter>, cycle: Vec<Letter>) -> Result<LassoWindow, WindowError> {
        if cycle.is_empty() {
            return Err(WindowError::EmptyCycle);
        }
        let limit = 1u32 << vocab.len();
        if let Some(&bad) = stem.iter().chain(cycle.iter()).find(|&&l| l >= limit) {
            return Err(WindowError::LetterOutOfRange { letter: bad, vars: vocab.len() });
        }
        Ok(LassoWindow { vocab, lasso: Lasso { stem, cycle } })
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn lasso(&self) -> &Lasso {
        &self.lasso
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum WindowError {
    Empty,
    EmptyCycle,
    LetterOutOfRange { letter: Letter, vars: usize },
}

impl fmt::Display for WindowError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WindowError::Empty => write!(f, "a window needs at least one state"),
            WindowError::EmptyCycle => write!(f, "the repeating part needs at least one state"),
            WindowError::LetterOutOfRange { letter, vars } => {
                write!(f, "state {letter:#b} does not fit a vocabulary of {vars} variables")
            }
        }
    }
}

impl std::error::Error for WindowError {}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EvalError {
    UnknownVar(String),
    BadInterval { i: usize, j: usize, len: usize },
    NotFuture(Formula),
    WindowTooLong { len: usize, limit: usize },
    Compile(CompileError),
}

impl fmt::Display for EvalError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EvalError::UnknownVar(p) => write!(f, "variable `{p}` is not in the vocabulary"),
            EvalError::BadInterval { i, j, len } => {
                write!(f, "interval ({i},{j}) does not fit a window of {len} states")
            }
            EvalError::NotFuture(a) => write!(f, "`{a}` is not a future formula"),
            EvalError::WindowTooLong { len, limit } => {
                write!(f, "quantifier enumeration over {len} states exceeds the limit {limit}")
            }
            EvalError::Compile(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for EvalError {}

impl From<CompileError> for EvalError {
    fn from(e: CompileError) -> Self {
        match e {
            CompileError::UnknownVar(p) => EvalError::UnknownVar(p),
            other => EvalError::Compile(other),
        }
    }
}

/// Default total number of inserted states tried per `projinv` node.
pub const DEFAULT_INSERTION_BUDGET: usize = 8;
/// Per-gap cap on inserted states.
pub const PER_GAP_INSERTION_CAP: usize = 4;
/// Quantified windows are enumerated exhaustively; this bounds the window
/// length for that enumeration.
pub const EXISTS_WINDOW_LIMIT: usize = 14;

/// True when the window verdict equals the verdict on any extension of the
/// window: no neighbourhood modality or insertion quantifier occurs.
pub fn eval_is_exact(f: &Formula) -> bool {
    match f {
        Formula::DiamondL(_)
        | Formula::DiamondR(_)
        | Formula::BoxL(_)
        | Formula::BoxR(_)
        | Formula::DiamondA(_)
        | Formula::BoxA(_)
        | Formula::ProjInv(..) => false,
        _ => f.children().iter().all(|c| eval_is_exact(c)),
    }
}

/// Verdict of a window evaluation together with its exactness.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WindowVerdict {
    pub holds: bool,
    /// The verdict is independent of anything outside the window.
    pub exact: bool,
}

/// Evaluates `f` on the interval `(i, j)` of `w` with the default insertion
/// budget.
pub fn eval_window(f: &Formula, w: &Window, i: usize, j: usize) -> Result<WindowVerdict, EvalError> {
    eval_window_budgeted(f, w, i, j, DEFAULT_INSERTION_BUDGET)
}

/// Evaluates `f` on the interval `(i, j)` of `w`. Neighbourhood modalities
/// quantify within the window; `projinv` tries expansions of at most
/// `budget` inserted states. The `exact` flag of the verdict reports whether
/// any of those approximations could matter.
pub fn eval_window_budgeted(
    f: &Formula,
    w: &Window,
    i: usize,
    j: usize,
    budget: usize,
) -> Result<WindowVerdict, EvalError> {
    if i > j || j >= w.len() {
        return Err(EvalError::BadInterval { i, j, len: w.len() });
    }
    let desugared = f.desugar();
    let mut ev = Evaluator { w, budget, memo: HashMap::new() };
    let holds = ev.eval(&desugared, i, j)?;
    Ok(WindowVerdict { holds, exact: eval_is_exact(f) })
}

/// Evaluates `f` on every interval of `w` at once (sharing all memoized
/// subresults); entry `[i][j - i]` is the verdict on `(i, j)`.
pub fn eval_window_all_pairs(
    f: &Formula,
    w: &Window,
    budget: usize,
) -> Result<Vec<Vec<bool>>, EvalError> {
    let desugared = f.desugar();
    let mut ev = Evaluator { w, budget, memo: HashMap::new() };
    let n = w.len();
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut row = Vec::with_capacity(n - i);
        for j in i..n {
            row.push(ev.eval(&desugared, i, j)?);
        }
        out.push(row);
    }
    Ok(out)
}

struct Evaluator<'a> {
    w: &'a Window,
    budget: usize,
    memo: HashMap<(usize, usize, usize), bool>,
}

impl<'a> Evaluator<'a> {
    fn eval(&mut self, f: &Formula, i: usize, j: usize) -> Result<bool, EvalError> {
        let key = (f as *const Formula as usize, i, j);
        if let Some(&v) = self.memo.get(&key) {
            return Ok(v);
        }
        let v = self.eval_inner(f, i, j)?;
        self.memo.insert(key, v);
        Ok(v)
    }

    fn eval_inner(&mut self, f: &Formula, i: usize, j: usize) -> Result<bool, EvalError> {
        let n = self.w.len();
        Ok(match f {
            Formula::False => false,
            Formula::Var(p) => {
                let idx = self
                    .w
                    .vocab
                    .index_of(p)
                    .ok_or_else(|| EvalError::UnknownVar(p.clone()))?;
                self.w.letters[i] & (1 << idx) != 0
            }
            Formula::Imp(a, b) => !self.eval(a, i, j)? || self.eval(b, i, j)?,
            Formula::Next(a) => i < j && self.eval(a, i + 1, j)?,
            Formula::Chop(a, b) => {
                let mut found = false;
                for k in i..=j {
                    if self.eval(a, i, k)? && self.eval(b, k, j)? {
                        found = true;
                        break;
                    }
                }
                found
            }
            Formula::ChopStar(a) => {
                // positions reachable from i by stepping over satisfying
                // chunks of at least two states
                let mut reach = vec![false; j + 1];
                reach[i] = true;
                for k in i..=j {
                    if !reach[k] {
                        continue;
                    }
                    for k2 in (k + 1)..=j {
                        if !reach[k2] && self.eval(a, k, k2)? {
                            reach[k2] = true;
                        }
                    }
                }
                reach[j]
            }
            Formula::DiamondL(a) => {
                let mut found = false;
                for k in (0..=i).rev() {
                    if self.eval(a, k, i)? {
                        found = true;
                        break;
                    }
                }
                found
            }
            Formula::DiamondR(a) => {
                let mut found = false;
                for k in j..n {
                    if self.eval(a, j, k)? {
                        found = true;
                        break;
                    }
                }
                found
            }
            Formula::Exists(p, a) => {
                if n > EXISTS_WINDOW_LIMIT {
                    return Err(EvalError::WindowTooLong { len: n, limit: EXISTS_WINDOW_LIMIT });
                }
                // relabel the quantified variable freely over the whole window
                let (vocab, idx) = match self.w.vocab.index_of(p) {
                    Some(idx) => (self.w.vocab.clone(), idx),
                    None => {
                        let mut names: Vec<String> = self.w.vocab.names().to_vec();
                        names.push(p.clone());
                        let v2 = Vocabulary::new(names)
                            .map_err(|_| EvalError::UnknownVar(p.clone()))?;
                        let idx = v2.len() - 1;
                        (v2, idx)
                    }
                };
                let bit = 1u32 << idx;
                let mut found = false;
                for mask in 0u64..(1u64 << n) {
                    let letters: Vec<Letter> = self
                        .w
                        .letters
                        .iter()
                        .enumerate()
                        .map(|(pos, &l)| {
                            if mask & (1 << pos) != 0 {
                                l | bit
                            } else {
                                l & !bit
                            }
                        })
                        .collect();
                    let w2 = Window { vocab: vocab.clone(), letters };
                    let mut sub = Evaluator { w: &w2, budget: self.budget, memo: HashMap::new() };
                    if sub.eval(a, i, j)? {
                        found = true;
                        break;
                    }
                }
                found
            }
            Formula::Proj(wf, a) => {
                let mut kept = Vec::new();
                for k in i..=j {
                    if letter_satisfies(wf, self.w.letters[k], &self.w.vocab)? {
                        kept.push(self.w.letters[k]);
                    }
                }
                if kept.is_empty() {
                    false
                } else {
                    let hi = kept.len() - 1;
                    let w2 = Window { vocab: self.w.vocab.clone(), letters: kept };
                    let mut sub = Evaluator { w: &w2, budget: self.budget, memo: HashMap::new() };
                    sub.eval(a, 0, hi)?
                }
            }
            Formula::ProjInv(wf, a) => self.eval_proj_inv(wf, a, i, j)?,
            other => unreachable!("non-basic node after desugaring: {other}"),
        })
    }

    /// Tries expansions of the interval by inserted non-selected states, up
    /// to the insertion budget, and evaluates the operand on each expansion.
    fn eval_proj_inv(&mut self, wf: &Formula, a: &Formula, i: usize, j: usize) -> Result<bool, EvalError> {
        let vocab = &self.w.vocab;
        // every projected state must satisfy the selector
        for k in i..=j {
            if !letter_satisfies(wf, self.w.letters[k], vocab)? {
                return Ok(false);
            }
        }
        let fillers: Vec<Letter> = (0..(1u32 << vocab.len()))
            .filter(|&s| !letter_satisfies(wf, s, vocab).unwrap_or(false))
            .collect();
        let m = j - i + 1;
        let gaps = m + 1;
        let per_gap = PER_GAP_INSERTION_CAP.min(self.budget);
        // distribute up to `budget` insertions over the gaps
        let mut lengths = vec![0usize; gaps];
        loop {
            let total: usize = lengths.iter().sum();
            if total <= self.budget {
                if self.try_expansion(a, i, j, &lengths, &fillers)? {
                    return Ok(true);
                }
            }
            // odometer over gap lengths
            let mut pos = 0;
            loop {
                if pos == gaps {
                    return Ok(false);
                }
                lengths[pos] += 1;
                if lengths[pos] > per_gap {
                    lengths[pos] = 0;
                    pos += 1;
                } else {
                    break;
                }
            }
        }
    }

    fn try_expansion(
        &mut self,
        a: &Formula,
        i: usize,
        j: usize,
        lengths: &[usize],
        fillers: &[Letter],
    ) -> Result<bool, EvalError> {
        let total: usize = lengths.iter().sum();
        if total == 0 {
            let letters: Vec<Letter> = self.w.letters[i..=j].to_vec();
            let hi = letters.len() - 1;
            let w2 = Window { vocab: self.w.vocab.clone(), letters };
            let mut sub = Evaluator { w: &w2, budget: self.budget, memo: HashMap::new() };
            return sub.eval(a, 0, hi);
        }
        if fillers.is_empty() {
            return Ok(false);
        }
        // enumerate filler letters for all inserted positions
        let mut choice = vec![0usize; total];
        loop {
            let mut letters = Vec::with_capacity(j - i + 1 + total);
            let mut c = 0;
            for (g, &glen) in lengths.iter().enumerate() {
                for _ in 0..glen {
                    letters.push(fillers[choice[c]]);
                    c += 1;
                }
                if g < lengths.len() - 1 {
                    letters.push(self.w.letters[i + g]);
                }
            }
            let hi = letters.len() - 1;
            let w2 = Window { vocab: self.w.vocab.clone(), letters };
            let mut sub = Evaluator { w: &w2, budget: self.budget, memo: HashMap::new() };
            if sub.eval(a, 0, hi)? {
                return Ok(true);
            }
            // odometer over filler choices
            let mut pos = 0;
            loop {
                if pos == total {
                    return Ok(false);
                }
                choice[pos] += 1;
                if choice[pos] == fillers.len() {
                    choice[pos] = 0;
                    pos += 1;
                } else {
                    break;
                }
            }
        }
    }
}

// ---------------------------------------------------------------------------
// lasso evaluation for the future fragment

/// Evaluates a future formula at the initial point of the omega-word: the
/// degenerate interval at position zero. Exact for the whole future fragment.
pub fn eval_lasso(f: &Formula, lw: &LassoWindow) -> Result<bool, EvalError> {
    // rewrite [r] into ~<r>~ so the only modal nodes are <r>
    fn norm(f: &Formula) -> Formula {
        if f.is_introspective() {
            return f.clone();
        }
        match f {
            Formula::BoxR(a) => Formula::not(Formula::diamond_r(Formula::not(norm(a)))),
            Formula::DiamondR(a) => Formula::diamond_r(norm(a)),
            Formula::Not(a) => Formula::not(norm(a)),
            Formula::And(a, b) => Formula::and(norm(a), norm(b)),
            Formula::Or(a, b) => Formula::or(norm(a), norm(b)),
            Formula::Imp(a, b) => Formula::imp(norm(a), norm(b)),
            Formula::Iff(a, b) => Formula::iff(norm(a), norm(b)),
            other => other.clone(),
        }
    }
    let f = norm(f);
    if !f.is_future() {
        return Err(EvalError::NotFuture(f));
    }
    let mut ev = LassoEvaluator::new(lw)?;
    // collect <r>-operands innermost first
    let mut operands: Vec<Formula> = Vec::new();
    collect_diamonds(&f, &mut operands);
    operands.sort_by_key(|g| g.size());
    operands.dedup();
    for g in &operands {
        ev.tabulate(g)?;
    }
    // the top level holds at the one-state interval at position zero
    let first = lw.lasso.letter_at(0);
    ev.eval_structure(&f, |ev, atom| ev.intro_accepts_word(atom, &[first]), 0)
}

fn collect_diamonds(f: &Formula, out: &mut Vec<Formula>) {
    if f.is_introspective() {
        return;
    }
    match f {
        Formula::DiamondR(g) => {
            collect_diamonds(g, out);
            if !out.contains(g) {
                out.push((**g).clone());
            }
        }
        _ => {
            for c in f.children() {
                collect_diamonds(c, out);
            }
        }
    }
}

struct LassoEvaluator<'a> {
    lw: &'a LassoWindow,
    /// number of position classes: stem positions, then one per cycle offset
    classes: usize,
    /// canonical DFA per introspective atom
    dfas: BTreeMap<Formula, Dfa>,
    /// per diamond operand: truth of `<r> g` anchored at each class
    tables: BTreeMap<Formula, Vec<bool>>,
}

impl<'a> LassoEvaluator<'a> {
    fn new(lw: &'a LassoWindow) -> Result<Self, EvalError> {
        Ok(LassoEvaluator {
            lw,
            classes: lw.lasso.stem.len() + lw.lasso.cycle.len(),
            dfas: BTreeMap::new(),
            tables: BTreeMap::new(),
        })
    }

    fn class_of(&self, pos: usize) -> usize {
        let stem = self.lw.lasso.stem.len();
        if pos < stem {
            pos
        } else {
            stem + (pos - stem) % self.lw.lasso.cycle.len()
        }
    }

    fn dfa_of(&mut self, atom: &Formula) -> Result<&Dfa, EvalError> {
        if !self.dfas.contains_key(atom) {
            let d = itl_to_dfa(atom, &self.lw.vocab)?;
            self.dfas.insert(atom.clone(), d);
        }
        Ok(&self.dfas[atom])
    }

    fn intro_accepts_word(&mut self, atom: &Formula, word: &[Letter]) -> Result<bool, EvalError> {
        let d = self.dfa_of(atom)?;
        Ok(d.accepts(word))
    }

    /// Evaluates the Boolean structure of a future formula; introspective
    /// atoms via `intro`, diamond atoms via the tabulated class value at
    /// `anchor_class`.
    fn eval_structure<F>(&mut self, f: &Formula, mut intro: F, anchor_class: usize) -> Result<bool, EvalError>
    where
        F: FnMut(&mut Self, &Formula) -> Result<bool, EvalError>,
    {
        self.eval_structure_inner(f, &mut intro, anchor_class)
    }

    fn eval_structure_inner<F>(
        &mut self,
        f: &Formula,
        intro: &mut F,
        anchor_class: usize,
    ) -> Result<bool, EvalError>
    where
        F: FnMut(&mut Self, &Formula) -> Result<bool, EvalError>,
    {
        if f.is_introspective() {
            return match f {
                Formula::True => Ok(true),
                Formula::False => Ok(false),
                _ => intro(self, f),
            };
        }
        Ok(match f {
            Formula::DiamondR(g) => self.tables[&**g][anchor_class],
            Formula::Not(a) => !self.eval_structure_inner(a, intro, anchor_class)?,
            Formula::And(a, b) => {
                self.eval_structure_inner(a, intro, anchor_class)?
                    && self.eval_structure_inner(b, intro, anchor_class)?
            }
            Formula::Or(a, b) => {
                self.eval_structure_inner(a, intro, anchor_class)?
                    || self.eval_structure_inner(b, intro, anchor_class)?
            }
            Formula::Imp(a, b) => {
                !self.eval_structure_inner(a, intro, anchor_class)?
                    || self.eval_structure_inner(b, intro, anchor_class)?
            }
            Formula::Iff(a, b) => {
                self.eval_structure_inner(a, intro, anchor_class)?
                    == self.eval_structure_inner(b, intro, anchor_class)?
            }
            other => return Err(EvalError::NotFuture(other.clone())),
        })
    }

    /// Computes, for every anchor class `j`, whether some interval `(j, k)`
    /// satisfies `g`; inner diamond tables must already be present.
    fn tabulate(&mut self, g: &Formula) -> Result<(), EvalError> {
        // the introspective atoms of g, in a stable order
        let mut atoms: Vec<Formula> = Vec::new();
        collect_intro_atoms(g, &mut atoms);
        for a in &atoms {
            self.dfa_of(a)?;
        }
        let mut table = vec![false; self.classes];
        for class in 0..self.classes {
            table[class] = self.reach_from(g, &atoms, class)?;
        }
        self.tables.insert(g.clone(), table);
        Ok(())
    }

    /// Does some interval starting at the representative position of
    /// `start_class` satisfy `g`? Iterates the end point forward, tracking
    /// the DFA states of all introspective atoms; stops when the combined
    /// (states, class) signature repeats.
    fn reach_from(&mut self, g: &Formula, atoms: &[Formula], start_class: usize) -> Result<bool, EvalError> {
        let start_pos = start_class; // classes are indexed by representative position
        let mut states: Vec<usize> = Vec::with_capacity(atoms.len());
        let first = self.lw.lasso.letter_at(start_pos);
        for a in atoms {
            let d = self.dfa_of(a)?;
            states.push(d.step(d.initial, first));
        }
        let mut seen: BTreeSet<(Vec<usize>, usize)> = BTreeSet::new();
        let mut k = start_pos;
        loop {
            let kc = self.class_of(k);
            if !seen.insert((states.clone(), kc)) {
                return Ok(false);
            }
            // evaluate g on the interval (start_pos, k)
            let verdict = {
                let snapshot: BTreeMap<Formula, bool> = atoms
                    .iter()
                    .zip(states.iter())
                    .map(|(a, &q)| {
                        let d = &self.dfas[a];
                        (a.clone(), d.accepting.contains(&q))
                    })
                    .collect();
                self.eval_structure(g, |_, atom| Ok(snapshot[atom]), kc)?
            };
            if verdict {
                return Ok(true);
            }
            k += 1;
            let letter = self.lw.lasso.letter_at(k);
            for (a, q) in atoms.iter().zip(states.iter_mut()) {
                let d = &self.dfas[a];
                *q = d.step(*q, letter);
            }
        }
    }
}

fn collect_intro_atoms(f: &Formula, out: &mut Vec<Formula>) {
    if f.is_introspective() {
        if !matches!(f, Formula::True | Formula::False) && !out.contains(f) {
            out.push(f.clone());
        }
        return;
    }
    match f {
        Formula::DiamondR(_) => {}
        _ => {
            for c in f.children() {
                collect_intro_atoms(c, out);
            }
        }
    }
}

// ---------------------------------------------------------------------------
// model enumeration and bounded equivalence

/// Iterates all windows over `vocab` of length 1 through `max_len`, shortest
/// first, letters in lexicographic order (first state most significant).
pub struct WindowIter {
    vocab: Vocabulary,
    max_len: usize,
    len: usize,
    odometer: Vec<Letter>,
    fresh: bool,
}

pub fn enumerate_windows(vocab: &Vocabulary, max_len: usize) -> WindowIter {
    WindowIter { vocab: vocab.clone(), max_len, len: 1, odometer: vec![0], fresh: true }
}

impl Iterator for WindowIter {
    type Item = Window;

    fn next(&mut self) -> Option<Window> {
        if self.len > self.max_len {
            return None;
        }
        if self.fresh {
            self.fresh = false;
            return Some(Window { vocab: self.vocab.clone(), letters: self.odometer.clone() });
        }
        let k = 1u32 << self.vocab.len();
        // increment from the last position (least significant)
        let mut pos = self.len;
        loop {
            if pos == 0 {
                self.len += 1;
                if self.len > self.max_len {
                    return None;
                }
                self.odometer = vec![0; self.len];
                break;
            }
            pos -= 1;
            self.odometer[pos] += 1;
            if self.odometer[pos] == k {
                self.odometer[pos] = 0;
            } else {
                break;
            }
        }
        Some(Window { vocab: self.vocab.clone(), letters: self.odometer.clone() })
    }
}

/// Number of (window, interval) checks a survey up to `max_len` performs.
pub fn survey_size(vocab: &Vocabulary, max_len: usize) -> u128 {
    let k = (1u128) << vocab.len();
    let mut total = 0u128;
    let mut pow = 1u128;
    for len in 1..=max_len {
        pow *= k;
        total += pow * (len as u128) * (len as u128 + 1) / 2;
    }
    total
}

/// A point where two formulas disagree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Counterexample {
    pub window: Window,
    pub i: usize,
    pub j: usize,
    pub lhs: bool,
    pub rhs: bool,
}

/// Compares two formulas on every interval of every window up to `max_len`
/// and returns the first disagreement in enumeration order.
pub fn bounded_equiv_check(
    a: &Formula,
    b: &Formula,
    vocab: &Vocabulary,
    max_len: usize,
) -> Result<Option<Counterexample>, EvalError> {
    for w in enumerate_windows(vocab, max_len) {
        let va = eval_window_all_pairs(a, &w, DEFAULT_INSERTION_BUDGET)?;
        let vb = eval_window_all_pairs(b, &w, DEFAULT_INSERTION_BUDGET)?;
        for i in 0..w.len() {
            for j in i..w.len() {
                if va[i][j - i] != vb[i][j - i] {
                    return Ok(Some(Counterexample {
                        window: w.clone(),
                        i,
                        j,
                        lhs: va[i][j - i],
                        rhs: vb[i][j - i],
                    }));
                }
            }
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::automata::nba_accepts_lasso;
    use crate::compile::future_to_nba;
    use crate::syntax::parse;
    use rand::prelude::*;

    fn vocab() -> Vocabulary {
        Vocabulary::new(["p", "q"]).unwrap()
    }

    fn win(letters: &[Letter]) -> Window {
        Window::new(vocab(), letters.to_vec()).unwrap()
    }

    fn ev(src: &str, w: &Window, i: usize, j: usize) -> bool {
        let f = parse(src, &vocab()).unwrap();
        eval_window(&f, w, i, j).unwrap().holds
    }

    #[test]
    fn basic_connectives() {
        let w = win(&[0b01, 0b10, 0b11]);
        assert!(ev("p", &w, 0, 2));
        assert!(!ev("p", &w, 1, 2));
        assert!(ev("next q", &w, 0, 1));
        assert!(!ev("next q", &w, 0, 0));
        assert!(ev("empty", &w, 1, 1));
        assert!(!ev("empty", &w, 0, 1));
        assert!(ev("skip", &w, 0, 1));
        assert!(ev("p ; q", &w, 0, 2)); // split at 1: p at 0, q at 1
        assert!(!ev("q ; p", &w, 0, 0));
        assert!(ev("q ; p", &w, 1, 2)); // q at 1, p at shared state 2
    }

    #[test]
    fn chop_star_chains() {
        let w = win(&[0b01, 0b01, 0b00]);
        assert!(ev("(p & skip)*", &w, 0, 2));
        assert!(ev("(p & skip)*", &w, 0, 0));
        assert!(!ev("(p & skip)*", &w, 1, 1) == false); // single point always true
        let w2 = win(&[0b01, 0b00, 0b00]);
        assert!(!ev("(p & skip)*", &w2, 0, 2));
    }

    #[test]
    fn neighbourhood_within_window() {
        let w = win(&[0b01, 0b00, 0b10]);
        // <l> looks left of the interval start
        assert!(ev("<l> p", &w, 1, 2)); // interval (0,1) satisfies p
        assert!(!ev("<l> q", &w, 1, 2));
        // <r> looks right of the interval end
        assert!(ev("<r> (fin q)", &w, 0, 1));
        assert!(!ev("<r> (fin p)", &w, 1, 1));
        // dia_a finds p somewhere
        assert!(ev("dia_a (p & empty)", &w, 1, 1));
        assert!(!ev("dia_a (p & q & empty)", &w, 1, 1));
        // box_a: every interval has at most 3 states
        assert!(ev("box_a ~(next next next true)", &w, 1, 1));
    }

    #[test]
    fn exists_relabels_freely() {
        let w = win(&[0b10, 0b10]);
        // some relabeling of p makes p hold now and fail next
        assert!(ev("exists p. p & next ~p", &w, 0, 1));
        // but p & ~p is still impossible
        assert!(!ev("exists p. p & ~p", &w, 0, 1));
        // quantifying a variable outside the vocabulary works too
        let f = parse("exists z. z & next ~z", &vocab()).unwrap();
        assert!(eval_window(&f, &w, 0, 1).unwrap().holds);
    }

    #[test]
    fn proj_filters_states() {
        let w = win(&[0b01, 0b10, 0b11]);
        // p-states: positions 0 and 2; on them q holds at the second
        assert!(ev("proj(p, next (q & empty))", &w, 0, 2));
        assert!(!ev("proj(p, q)", &w, 0, 2));
        // no selected state at all
        assert!(!ev("proj(p & q, true)", &w, 0, 1));
    }

    #[test]
    fn projinv_respects_budget() {
        let w = win(&[0b01]);
        let f = parse("projinv(p, skip)", &vocab()).unwrap();
        assert!(eval_window_budgeted(&f, &w, 0, 0, 1).unwrap().holds);
        assert!(!eval_window_budgeted(&f, &w, 0, 0, 0).unwrap().holds);
        // flagged as inexact
        assert!(!eval_window(&f, &w, 0, 0).unwrap().exact);
        // selected states must satisfy the selector
        let w2 = win(&[0b10]);
        assert!(!eval_window(&f, &w2, 0, 0).unwrap().holds);
    }

    #[test]
    fn window_verdicts_match_compiled_automata() {
        let v = vocab();
        let formulas = [
            "p", "empty", "skip", "p ; q", "(p & skip)*", "next p", "~(p ; q)",
            "fin p", "box (p -> q)", "proj(p, q)", "p & q | next next empty",
        ];
        for src in formulas {
            let f = parse(src, &v).unwrap();
            let d = itl_to_dfa(&f, &v).unwrap();
            for w in enumerate_windows(&v, 3) {
                let pairs = eval_window_all_pairs(&f, &w, DEFAULT_INSERTION_BUDGET).unwrap();
                for i in 0..w.len() {
                    for j in i..w.len() {
                        let expected = d.accepts(&w.letters()[i..=j]);
                        assert_eq!(
                            pairs[i][j - i],
                            expected,
                            "`{src}` at ({i},{j}) of {:?}",
                            w.letters()
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn lasso_eventually_and_always() {
        let v = vocab();
        let ev_p = parse("<r> (fin p)", &v).unwrap();
        let never_p = parse("[r] ~(fin p)", &v).unwrap();
        let lw = |stem: &[Letter], cycle: &[Letter]| {
            LassoWindow::new(v.clone(), stem.to_vec(), cycle.to_vec()).unwrap()
        };
        assert!(eval_lasso(&ev_p, &lw(&[], &[0b01])).unwrap());
        assert!(eval_lasso(&ev_p, &lw(&[0b00, 0b00], &[0b01, 0b00])).unwrap());
        assert!(!eval_lasso(&ev_p, &lw(&[], &[0b00])).unwrap());
        assert!(!eval_lasso(&ev_p, &lw(&[0b10], &[0b00, 0b10])).unwrap());
        assert!(eval_lasso(&never_p, &lw(&[], &[0b00])).unwrap());
        assert!(!eval_lasso(&never_p, &lw(&[0b00, 0b01], &[0b00])).unwrap());
        // initial-state formula
        let q0 = parse("q", &v).unwrap();
        assert!(eval_lasso(&q0, &lw(&[0b10], &[0b00])).unwrap());
        assert!(!eval_lasso(&q0, &lw(&[0b00], &[0b10])).unwrap());
    }

    #[test]
    fn lasso_agrees_with_buchi_translation() {
        let v = vocab();
        let formulas = [
            "<r> (fin p)",
            "[r] ~(fin p)",
            "<r> (fin q & <r> (fin p))",
            "q | <r> ((p ; q) & <r> (fin (p & q)))",
            "[r] (fin p -> <r> (fin q))",
            "~(<r> (fin p & fin q))",
        ];
        let mut rng = StdRng::seed_from_u64(11);
        for src in formulas {
            let f = parse(src, &v).unwrap();
            let nba = future_to_nba(&f, &v).unwrap();
            for _ in 0..60 {
                let stem_len = rng.gen_range(0..3);
                let cyc_len = rng.gen_range(1..4);
                let stem: Vec<Letter> = (0..stem_len).map(|_| rng.gen_range(0..4)).collect();
                let cycle: Vec<Letter> = (0..cyc_len).map(|_| rng.gen_range(0..4)).collect();
                let lw = LassoWindow::new(v.clone(), stem.clone(), cycle.clone()).unwrap();
                let direct = eval_lasso(&f, &lw).unwrap();
                let via_nba = nba_accepts_lasso(&nba, lw.lasso());
                assert_eq!(
                    direct, via_nba,
                    "`{src}` on stem {stem:?} cycle {cycle:?}"
                );
            }
        }
    }

    #[test]
    fn enumeration_order_and_sizes() {
        let v = Vocabulary::new(["p"]).unwrap();
        let all: Vec<Vec<Letter>> =
            enumerate_windows(&v, 2).map(|w| w.letters().to_vec()).collect();
        assert_eq!(
            all,
            vec![vec![0], vec![1], vec![0, 0], vec![0, 1], vec![1, 0], vec![1, 1]]
        );
        assert_eq!(survey_size(&v, 2), 2 * 1 + 4 * 3);
    }

    #[test]
    fn bounded_equivalence_finds_differences() {
        let v = vocab();
        let a = parse("p ; q", &v).unwrap();
        let b = parse("q ; p", &v).unwrap();
        let cx = bounded_equiv_check(&a, &b, &v, 2).unwrap().unwrap();
        assert_ne!(cx.lhs, cx.rhs);
        let c = parse("~~p", &v).unwrap();
        let d = parse("p", &v).unwrap();
        assert!(bounded_equiv_check(&c, &d, &v, 3).unwrap().is_none());
    }
}
