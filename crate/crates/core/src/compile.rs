//! Compilation between formulas and automata.
//!
//! Introspective formulas (optionally with quantifiers and projections over
//! introspective operands) compile to canonical minimal DFAs over the window
//! alphabet. The reverse direction extracts a regular expression from a DFA
//! by state elimination and renders it back as a formula. Future formulas
//! translate to Buchi automata over omega-words anchored at the initial
//! point.

use crate::automata::{
    canonical_min, determinize, dfa_combine, dfa_complement, dpa_to_nba, dpa_complement,
    fusion_concat, fusion_omega, fusion_star, insertion_closure_nfa, letter_count, letters,
    nba_determinize, nba_intersection, nba_trim, nba_union, nfa_from_dfa,
    nfa_relabel_dont_care, project_onto_letters, AutomataError, BoolOp, Dfa, Letter, Nba,
};
use crate::syntax::{Formula, Vocabulary};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CompileError {
    UnknownVar(String),
    /// The node has no window-only reading (neighbourhood modalities).
    NotCompilable(Formula),
    NotStateFormula(Formula),
    NotFuture(Formula),
    TooManyAtoms { atoms: usize, limit: usize },
    Automata(AutomataError),
}

impl fmt::Display for CompileError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CompileError::UnknownVar(p) => write!(f, "variable `{p}` is not in the vocabulary"),
            CompileError::NotCompilable(a) => {
                write!(f, "`{a}` has no window automaton (neighbourhood operators reach outside)")
            }
            CompileError::NotStateFormula(a) => write!(f, "`{a}` is not a state formula"),
            CompileError::NotFuture(a) => write!(f, "`{a}` is not a future formula"),
            CompileError::TooManyAtoms { atoms, limit } => {
                write!(f, "{atoms} modal atoms exceed the limit of {limit}")
            }
            CompileError::Automata(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for CompileError {}

impl From<AutomataError> for CompileError {
    fn from(e: AutomataError) -> Self {
        CompileError::Automata(e)
    }
}

// ---------------------------------------------------------------------------
// state formulas and letters

/// Does the valuation `letter` satisfy the state formula?
pub fn letter_satisfies(f: &Formula, letter: Letter, vocab: &Vocabulary) -> Result<bool, CompileError> {
    match f {
        Formula::False => Ok(false),
        Formula::True => Ok(true),
        Formula::Var(p) => match vocab.index_of(p) {
            Some(i) => Ok(letter & (1 << i) != 0),
            None => Err(CompileError::UnknownVar(p.clone())),
        },
        Formula::Not(a) => Ok(!letter_satisfies(a, letter, vocab)?),
        Formula::And(a, b) => {
            Ok(letter_satisfies(a, letter, vocab)? && letter_satisfies(b, letter, vocab)?)
        }
        Formula::Or(a, b) => {
            Ok(letter_satisfies(a, letter, vocab)? || letter_satisfies(b, letter, vocab)?)
        }
        Formula::Imp(a, b) => {
            Ok(!letter_satisfies(a, letter, vocab)? || letter_satisfies(b, letter, vocab)?)
        }
        Formula::Iff(a, b) => {
            Ok(letter_satisfies(a, letter, vocab)? == letter_satisfies(b, letter, vocab)?)
        }
        _ => Err(CompileError::NotStateFormula(f.clone())),
    }
}

/// All letters satisfying the state formula.
pub fn state_letters(f: &Formula, vocab: &Vocabulary) -> Result<BTreeSet<Letter>, CompileError> {
    let mut out = BTreeSet::new();
    for s in letters(vocab) {
        if letter_satisfies(f, s, vocab)? {
            out.insert(s);
        }
    }
    Ok(out)
}

/// State formula satisfied by exactly the letter `s`: the conjunction of all
/// variables set in `s` and the negations of the rest.
pub fn chi(s: Letter, vocab: &Vocabulary) -> Formula {
    Formula::and_all(vocab.names().iter().enumerate().map(|(i, name)| {
        if s & (1 << i) != 0 {
            Formula::var(name.clone())
        } else {
            Formula::not(Formula::var(name.clone()))
        }
    }))
}

/// State formula satisfied by exactly the given letters (sum of `chi`).
pub fn chi_set(set: &BTreeSet<Letter>, vocab: &Vocabulary) -> Formula {
    if set.len() == letter_count(vocab) {
        return Formula::True;
    }
    Formula::or_all(set.iter().map(|&s| chi(s, vocab)))
}

// ---------------------------------------------------------------------------
// formula -> DFA

/// Compiles a formula to the canonical minimal DFA of its window language.
/// Succeeds for introspective formulas and for quantifiers/projections over
/// compilable operands; neighbourhood modalities have no window language and
/// are rejected.
pub fn itl_to_dfa(f: &Formula, vocab: &Vocabulary) -> Result<Dfa, CompileError> {
    let dfa = compile_basic(&f.desugar(), vocab)?;
    Ok(canonical_min(&dfa))
}

fn compile_basic(f: &Formula, vocab: &Vocabulary) -> Result<Dfa, CompileError> {
    let k = letter_count(vocab);
    match f {
        Formula::False => Ok(Dfa {
            vocab: vocab.clone(),
            trans: vec![vec![0; k]],
            initial: 0,
            accepting: BTreeSet::new(),
        }),
        Formula::Var(p) => {
            let i = vocab.index_of(p).ok_or_else(|| CompileError::UnknownVar(p.clone()))?;
            // a variable constrains the first state of the window
            let mut trans = vec![vec![0; k]; 3];
            for s in 0..k {
                let holds = s & (1 << i) != 0;
                trans[0][s] = if holds { 1 } else { 2 };
                trans[1][s] = 1;
                trans[2][s] = 2;
            }
            Ok(Dfa { vocab: vocab.clone(), trans, initial: 0, accepting: BTreeSet::from([1]) })
        }
        Formula::Imp(a, b) => {
            let da = compile_basic(a, vocab)?;
            let db = compile_basic(b, vocab)?;
            Ok(canonical_min(&dfa_combine(&dfa_complement(&da), &db, BoolOp::Or)?))
        }
        Formula::Next(a) => {
            let da = canonical_min(&compile_basic(a, vocab)?);
            // prepend one unconstrained letter
            let fresh = da.n_states();
            let mut trans = da.trans.clone();
            trans.push(vec![da.initial; k]);
            Ok(Dfa { vocab: vocab.clone(), trans, initial: fresh, accepting: da.accepting })
        }
        Formula::Chop(a, b) => {
            let da = canonical_min(&compile_basic(a, vocab)?);
            let db = canonical_min(&compile_basic(b, vocab)?);
            Ok(canonical_min(&determinize(&fusion_concat(&da, &db)?)?))
        }
        Formula::ChopStar(a) => {
            let da = canonical_min(&compile_basic(a, vocab)?);
            Ok(canonical_min(&determinize(&fusion_star(&da)?)?))
        }
        Formula::Exists(p, a) => {
            match vocab.index_of(p) {
                Some(i) => {
                    let da = canonical_min(&compile_basic(a, vocab)?);
                    let relabeled = nfa_relabel_dont_care(&nfa_from_dfa(&da), i);
                    Ok(canonical_min(&determinize(&relabeled)?))
                }
                // the bound variable is outside the vocabulary: occurrences
                // of it in the body fail by themselves, otherwise the
                // quantifier is vacuous
                None => compile_basic(a, vocab),
            }
        }
        Formula::Proj(w, a) => {
            let ws = state_letters(w, vocab)?;
            let da = canonical_min(&compile_basic(a, vocab)?);
            Ok(canonical_min(&project_onto_letters(&da, &ws)))
        }
        Formula::ProjInv(w, a) => {
            let ws = state_letters(w, vocab)?;
            let da = canonical_min(&compile_basic(a, vocab)?);
            Ok(canonical_min(&determinize(&insertion_closure_nfa(&da, &ws))?))
        }
        other => Err(CompileError::NotCompilable(other.clone())),
    }
}

/// Window-language equality of two compilable formulas.
pub fn equivalent_on_windows(a: &Formula, b: &Formula, vocab: &Vocabulary) -> Result<bool, CompileError> {
    let da = itl_to_dfa(a, vocab)?;
    let db = itl_to_dfa(b, vocab)?;
    Ok(crate::automata::dfa_equivalent(&da, &db)?)
}

// ---------------------------------------------------------------------------
// DFA -> formula, via regular expression extraction

#[derive(Debug, Clone, PartialEq, Eq)]
enum Reg {
    Empty,
    Eps,
    Letter(Letter),
    Alt(Box<Reg>, Box<Reg>),
    Cat(Box<Reg>, Box<Reg>),
    Star(Box<Reg>),
}

impl Reg {
    fn alt(a: Reg, b: Reg) -> Reg {
        match (a, b) {
            (Reg::Empty, b) => b,
            (a, Reg::Empty) => a,
            (a, b) if a == b => a,
            (a, b) => Reg::Alt(Box::new(a), Box::new(b)),
        }
    }

    fn cat(a: Reg, b: Reg) -> Reg {
        match (a, b) {
            (Reg::Empty, _) | (_, Reg::Empty) => Reg::Empty,
            (Reg::Eps, b) => b,
            (a, Reg::Eps) => a,
            (a, b) => Reg::Cat(Box::new(a), Box::new(b)),
        }
    }

    fn star(a: Reg) -> Reg {
        match a {
            Reg::Empty | Reg::Eps => Reg::Eps,
            s @ Reg::Star(_) => s,
            a => Reg::Star(Box::new(a)),
        }
    }
}

/// State elimination over a generalized automaton graph.
fn dfa_to_regex(d: &Dfa) -> Reg {
    let d = canonical_min(d);
    let n = d.n_states();
    let init = n;
    let fin = n + 1;
    let mut edges: BTreeMap<(usize, usize), Reg> = BTreeMap::new();
    let add = |edges: &mut BTreeMap<(usize, usize), Reg>, from: usize, to: usize, r: Reg| {
        if matches!(r, Reg::Empty) {
            return;
        }
        let slot = edges.entry((from, to)).or_insert(Reg::Empty);
        let prev = std::mem::replace(slot, Reg::Empty);
        *slot = Reg::alt(prev, r);
    };
    for q in 0..n {
        for s in letters(&d.vocab) {
            add(&mut edges, q, d.step(q, s), Reg::Letter(s));
        }
    }
    add(&mut edges, init, d.initial, Reg::Eps);
    for &q in &d.accepting {
        add(&mut edges, q, fin, Reg::Eps);
    }
    let mut alive: BTreeSet<usize> = (0..n).collect();
    while !alive.is_empty() {
        // eliminate the state with the fewest incident edge pairs first
        let v = *alive
            .iter()
            .min_by_key(|&&v| {
                let ins = edges.keys().filter(|&&(a, b)| b == v && a != v).count();
                let outs = edges.keys().filter(|&&(a, b)| a == v && b != v).count();
                (ins * outs, v)
            })
            .expect("nonempty");
        alive.remove(&v);
        let self_loop = edges.remove(&(v, v));
        let loop_reg = self_loop.map(Reg::star).unwrap_or(Reg::Eps);
        let ins: Vec<(usize, Reg)> = edges
            .iter()
            .filter(|(&(a, b), _)| b == v && a != v)
            .map(|(&(a, _), r)| (a, r.clone()))
            .collect();
        let outs: Vec<(usize, Reg)> = edges
            .iter()
            .filter(|(&(a, b), _)| a == v && b != v)
            .map(|(&(_, b), r)| (b, r.clone()))
            .collect();
        edges.retain(|&(a, b), _| a != v && b != v);
        for (u, ru) in &ins {
            for (w, rw) in &outs {
                let r = Reg::cat(ru.clone(), Reg::cat(loop_reg.clone(), rw.clone()));
                add(&mut edges, *u, *w, r);
            }
        }
    }
    edges.remove(&(init, fin)).unwrap_or(Reg::Empty)
}

/// Formula for the non-empty-word part of `r`, plus whether `r` accepts the
/// empty word. Word concatenation is `; skip ;`, iteration of a language `K`
/// is rendered as `(K ; skip)* ; K`.
fn reg_to_formula(r: &Reg, vocab: &Vocabulary) -> (Option<Formula>, bool) {
    match r {
        Reg::Empty => (None, false),
        Reg::Eps => (None, true),
        Reg::Letter(s) => (Some(Formula::and_all([chi(*s, vocab), Formula::Empty])), false),
        Reg::Alt(a, b) => {
            let (fa, ea) = reg_to_formula(a, vocab);
            let (fb, eb) = reg_to_formula(b, vocab);
            let f = match (fa, fb) {
                (Some(x), Some(y)) => Some(Formula::or(x, y)),
                (Some(x), None) | (None, Some(x)) => Some(x),
                (None, None) => None,
            };
            (f, ea || eb)
        }
        Reg::Cat(a, b) => {
            let (fa, ea) = reg_to_formula(a, vocab);
            let (fb, eb) = reg_to_formula(b, vocab);
            let mut parts = Vec::new();
            if let (Some(x), Some(y)) = (&fa, &fb) {
                parts.push(Formula::chop(x.clone(), Formula::chop(Formula::Skip, y.clone())));
            }
            if ea {
                if let Some(y) = &fb {
                    parts.push(y.clone());
                }
            }
            if eb {
                if let Some(x) = &fa {
                    parts.push(x.clone());
                }
            }
            let f = if parts.is_empty() { None } else { Some(Formula::or_all(parts)) };
            (f, ea && eb)
        }
        Reg::Star(a) => {
            let (fa, _) = reg_to_formula(a, vocab);
            match fa {
                None => (None, true),
                Some(x) => {
                    // non-empty iterates of x under word concatenation
                    let plus = Formula::chop(
                        Formula::chop_star(Formula::chop(x.clone(), Formula::Skip)),
                        x,
                    );
                    (Some(plus), true)
                }
            }
        }
    }
}

/// Renders the language of `d` (over non-empty words) as a formula. The
/// result is introspective and compiles back to the same canonical DFA.
pub fn dfa_to_formula(d: &Dfa) -> Formula {
    let reg = dfa_to_regex(d);
    let (f, _eps) = reg_to_formula(&reg, &d.vocab);
    f.unwrap_or(Formula::False)
}

// ---------------------------------------------------------------------------
// future formulas -> Buchi automata

/// Disjunctive decomposition of a future formula over its modal atoms: each
/// disjunct is a conjunction of introspective literals plus signed
/// `<r>`-atoms.
struct FutureDisjunct {
    intro: Formula,
    modal: Vec<(bool, Formula)>,
}

pub const FUTURE_ATOM_LIMIT: usize = 12;

fn future_dnf(f: &Formula) -> Result<Vec<FutureDisjunct>, CompileError> {
    // normalize [r] into ~<r>~ so atoms are <r> only
    fn norm(f: &Formula) -> Formula {
        if f.is_introspective() {
            return f.clone();
        }
        match f {
            Formula::BoxR(a) => {
                Formula::not(Formula::diamond_r(Formula::not(norm(a))))
            }
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
    let mut atoms: Vec<Formula> = Vec::new();
    fn collect(f: &Formula, atoms: &mut Vec<Formula>) -> Result<(), CompileError> {
        if f.is_introspective() {
            if !matches!(f, Formula::True | Formula::False) && !atoms.contains(f) {
                atoms.push(f.clone());
            }
            return Ok(());
        }
        match f {
            Formula::DiamondR(_) => {
                if !atoms.contains(f) {
                    atoms.push(f.clone());
                }
                Ok(())
            }
            Formula::Not(a) => collect(a, atoms),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Imp(a, b) | Formula::Iff(a, b) => {
                collect(a, atoms)?;
                collect(b, atoms)
            }
            other => Err(CompileError::NotFuture(other.clone())),
        }
    }
    collect(&f, &mut atoms)?;
    if atoms.len() > FUTURE_ATOM_LIMIT {
        return Err(CompileError::TooManyAtoms { atoms: atoms.len(), limit: FUTURE_ATOM_LIMIT });
    }
    fn eval(f: &Formula, atoms: &[Formula], mask: u32) -> bool {
        if let Some(i) = atoms.iter().position(|a| a == f) {
            return mask & (1 << i) != 0;
        }
        match f {
            Formula::True => true,
            Formula::False => false,
            Formula::Not(a) => !eval(a, atoms, mask),
            Formula::And(a, b) => eval(a, atoms, mask) && eval(b, atoms, mask),
            Formula::Or(a, b) => eval(a, atoms, mask) || eval(b, atoms, mask),
            Formula::Imp(a, b) => !eval(a, atoms, mask) || eval(b, atoms, mask),
            Formula::Iff(a, b) => eval(a, atoms, mask) == eval(b, atoms, mask),
            _ => unreachable!("non-atom in future evaluation"),
        }
    }
    let mut out = Vec::new();
    for mask in 0u32..(1u32 << atoms.len()) {
        if !eval(&f, &atoms, mask) {
            continue;
        }
        let mut intro = Vec::new();
        let mut modal = Vec::new();
        for (i, a) in atoms.iter().enumerate() {
            let pos = mask & (1 << i) != 0;
            match a {
                Formula::DiamondR(g) => modal.push((pos, (**g).clone())),
                _ => intro.push(if pos { a.clone() } else { Formula::not(a.clone()) }),
            }
        }
        out.push(FutureDisjunct { intro: Formula::and_all(intro), modal });
    }
    Ok(out)
}

/// Buchi automaton of omega-words on which `<r> g` holds at the starting
/// point: some finite prefix interval satisfies `g`.
fn reach_nba(g: &Formula, vocab: &Vocabulary) -> Result<Nba, CompileError> {
    let disjuncts = future_dnf(g)?;
    let mut parts: Vec<Nba> = Vec::new();
    for d in disjuncts {
        let prefix = itl_to_dfa(&d.intro, vocab)?;
        let suffix = modal_suffix_nba(&d.modal, vocab)?;
        parts.push(fusion_omega(&prefix, &suffix)?);
    }
    Ok(union_all(parts, vocab))
}

/// Union of Buchi automata over the same vocabulary; empty language for an
/// empty list.
fn union_all(parts: Vec<Nba>, vocab: &Vocabulary) -> Nba {
    parts
        .into_iter()
        .reduce(|a, b| nba_union(&a, &b).expect("same vocabulary"))
        .unwrap_or_else(|| Nba {
            vocab: vocab.clone(),
            n_states: 1,
            initial: BTreeSet::from([0]),
            accepting: BTreeSet::new(),
            trans: BTreeMap::new(),
        })
}

/// Intersection of the signed `<r>`-atom automata; universal when empty.
fn modal_suffix_nba(modal: &[(bool, Formula)], vocab: &Vocabulary) -> Result<Nba, CompileError> {
    let mut acc: Option<Nba> = None;
    for (pos, g) in modal {
        let base = nba_trim(&reach_nba(g, vocab)?);
        let part = if *pos {
            base
        } else {
            let dpa = nba_determinize(&base)?;
            nba_trim(&dpa_to_nba(&dpa_complement(&dpa)))
        };
        acc = Some(match acc {
            None => part,
            Some(a) => nba_trim(&nba_intersection(&a, &part)?),
        });
    }
    Ok(acc.unwrap_or_else(|| {
        crate::automata::nba_all_letters(vocab, &letters(vocab).collect())
    }))
}

/// Buchi automaton of the omega-words on which the future formula holds at
/// the initial point (the degenerate interval at position zero).
pub fn future_to_nba(f: &Formula, vocab: &Vocabulary) -> Result<Nba, CompileError> {
    let disjuncts = future_dnf(f)?;
    let mut parts: Vec<Nba> = Vec::new();
    for d in disjuncts {
        // the introspective part constrains the one-state interval at the
        // starting point, hence the first letter
        let intro_dfa = itl_to_dfa(&d.intro, vocab)?;
        let first: BTreeSet<Letter> =
            letters(vocab).filter(|&s| intro_dfa.accepts(&[s])).collect();
        let suffix = modal_suffix_nba(&d.modal, vocab)?;
        // gate the suffix automaton on an accepted first letter
        let mut gated = Nba {
            vocab: vocab.clone(),
            n_states: suffix.n_states + 1,
            initial: BTreeSet::from([suffix.n_states]),
            accepting: suffix.accepting.clone(),
            trans: suffix.trans.clone(),
        };
        let fresh = suffix.n_states;
        for &s in &first {
            for &i in &suffix.initial {
                if let Some(ts) = suffix.successors(i, s) {
                    for &t in ts {
                        gated.add_edge(fresh, s, t);
                    }
                }
            }
        }
        parts.push(gated);
    }
    Ok(union_all(parts, vocab))
}
