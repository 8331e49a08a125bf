//! Omega-side constructions: prefix-finiteness formulas, the reactivity
//! normal form of an omega-regular language, elimination of propositional
//! quantifiers, strongest consequences, uniform interpolation, explicit
//! definitions for implicitly defined variables, and a decision procedure
//! for the separated fragment.
//!
//! The bridge between finite intervals and omega-words is the `Fin` shape:
//! "only finitely many prefixes of the word from here on lie in a given
//! regular language". Conjunctions of implications between such statements
//! capture exactly the omega-regular conditions produced by parity
//! determinization, which is what makes the eliminations below expressible
//! inside the logic itself.

use std::collections::BTreeSet;
use std::error::Error;
use std::fmt;

use crate::automata::{
    canonical_min, determinize, dfa_combine, dpa_prefix_dfa, letter_count, nba_determinize,
    nba_relabel_dont_care, nba_trim, nba_witness, nfa_from_dfa, nfa_relabel_dont_care,
    AutomataError, BoolOp, Dfa, Lasso, Letter, Nba, StateId,
};
use crate::compile::{dfa_to_formula, future_to_nba, itl_to_dfa, CompileError};
use crate::normal_forms::{full_system_chop, ChopFlavor, NfError};
use crate::semantics::{
    enumerate_windows, eval_window_all_pairs, Counterexample, EvalError, Window,
    DEFAULT_INSERTION_BUDGET,
};
use crate::syntax::{separated_dnf, Formula, SeparationError, Vocabulary};

/// Window length bound for falsification searches outside the decidable
/// fragment. Deliberately small: the search is exhaustive over all windows
/// and all reference intervals.
pub const BOUNDED_VALIDITY_WINDOW: usize = 3;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OmegaError {
    Separation(SeparationError),
    Compile(CompileError),
    NormalForm(NfError),
    Automata(AutomataError),
    Eval(EvalError),
    /// An implication check failed with an exact countermodel.
    ImplicationInvalid(Box<SeparatedWitness>),
    /// An implication check failed on a concrete finite window.
    ImplicationFalsified(Box<Counterexample>),
    /// Two relabellings of the candidate variable satisfy the premise while
    /// disagreeing on the variable: no implicit definition exists.
    NotImplicitlyDefined(Box<Counterexample>),
    /// The recovered definition failed its final equivalence check.
    DefinitionFailed(Box<Counterexample>),
    /// The variable to define does not occur in the formula.
    MissingVariable(String),
    /// A mandatory internal consistency check failed.
    VerificationFailed(&'static str),
    Internal(&'static str),
}

impl fmt::Display for OmegaError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OmegaError::Separation(e) => write!(f, "{e}"),
            OmegaError::Compile(e) => write!(f, "{e}"),
            OmegaError::NormalForm(e) => write!(f, "{e}"),
            OmegaError::Automata(e) => write!(f, "{e}"),
            OmegaError::Eval(e) => write!(f, "{e}"),
            OmegaError::ImplicationInvalid(w) => {
                write!(f, "implication invalid: countermodel on a {}-state window", w.window.len())
            }
            OmegaError::ImplicationFalsified(cx) => write!(
                f,
                "implication falsified on a {}-state window at ({}, {})",
                cx.window.len(),
                cx.i,
                cx.j
            ),
            OmegaError::NotImplicitlyDefined(cx) => write!(
                f,
                "variable is not implicitly defined: relabellings disagree on a {}-state window",
                cx.window.len()
            ),
            OmegaError::DefinitionFailed(cx) => write!(
                f,
                "recovered definition failed verification on a {}-state window at ({}, {})",
                cx.window.len(),
                cx.i,
                cx.j
            ),
            OmegaError::MissingVariable(p) => {
                write!(f, "variable {p} does not occur in the formula")
            }
            OmegaError::VerificationFailed(what) => write!(f, "verification failed: {what}"),
            OmegaError::Internal(what) => write!(f, "internal error: {what}"),
        }
    }
}

impl Error for OmegaError {}

impl From<SeparationError> for OmegaError {
    fn from(e: SeparationError) -> Self {
        OmegaError::Separation(e)
    }
}

impl From<CompileError> for OmegaError {
    fn from(e: CompileError) -> Self {
        OmegaError::Compile(e)
    }
}

impl From<NfError> for OmegaError {
    fn from(e: NfError) -> Self {
        OmegaError::NormalForm(e)
    }
}

impl From<AutomataError> for OmegaError {
    fn from(e: AutomataError) -> Self {
        OmegaError::Automata(e)
    }
}

impl From<EvalError> for OmegaError {
    fn from(e: EvalError) -> Self {
        OmegaError::Eval(e)
    }
}

// ---------------------------------------------------------------------------
// prefix finiteness

/// Exact reference check: does the ultimately periodic word described by
/// `lasso` have only finitely many prefixes in the language of `x`? Decided
/// by running `x` along the lasso until the (cycle position, state) pair
/// repeats; an accepting state inside the repeating segment means infinitely
/// many accepted prefixes.
pub fn lasso_prefix_count_is_finite(x: &Dfa, lasso: &Lasso) -> bool {
    assert!(!lasso.cycle.is_empty());
    let mut q = x.initial;
    for &s in &lasso.stem {
        q = x.step(q, s);
    }
    // prefixes ending inside the stem are finitely many; only recurrence in
    // the cycle matters
    let mut seen: std::collections::BTreeMap<(usize, StateId), usize> =
        std::collections::BTreeMap::new();
    let mut flags: Vec<bool> = Vec::new();
    let mut pos = 0usize;
    loop {
        if let Some(&first) = seen.get(&(pos, q)) {
            return !flags[first..].iter().any(|&b| b);
        }
        seen.insert((pos, q), flags.len());
        q = x.step(q, lasso.cycle[pos]);
        flags.push(x.accepting.contains(&q));
        pos = (pos + 1) % lasso.cycle.len();
    }
}

/// Formula expressing, at a point on an omega-word, that only finitely many
/// prefixes of the word from that point on belong to the language of `x`.
///
/// Shape: the word has a prefix whose class forbids every continuation into
/// the language. The classes come from the nonstrict full-system chop of the
/// language's defining formula: the left components partition all nonempty
/// words by the automaton state they reach, and the paired right component is
/// exactly the continuations (sharing the boundary letter) that would land in
/// the language again.
pub fn fin_formula(x: &Dfa) -> Result<Formula, OmegaError> {
    let base = dfa_to_formula(&canonical_min(x));
    let sys = full_system_chop(&base, ChopFlavor::Nonstrict, &x.vocab)?;
    let parts: Vec<Formula> = sys
        .pairs
        .iter()
        .map(|(class, cont)| {
            Formula::and(class.clone(), Formula::box_r(Formula::not(cont.clone())))
        })
        .collect();
    let out = Formula::diamond_r(Formula::or_all(parts));
    debug_assert!(out.is_future());
    Ok(out)
}

// ---------------------------------------------------------------------------
// reactivity normal form

/// One conjunct of the reactivity normal form, read as: if only finitely many
/// prefixes reach the rescue set, then only finitely many reach the forbidden
/// set.
#[derive(Debug, Clone)]
pub struct ReactivityPair {
    /// Prefix words whose infinite recurrence rescues the pair.
    pub rescue: Dfa,
    /// Prefix words that must stop recurring once the rescue dries up.
    pub forbidden: Dfa,
}

impl ReactivityPair {
    pub fn to_formula(&self) -> Result<Formula, OmegaError> {
        Ok(Formula::imp(fin_formula(&self.rescue)?, fin_formula(&self.forbidden)?))
    }
}

/// Conjunction of [`ReactivityPair`]s characterizing an omega-regular
/// language on ultimately periodic words.
#[derive(Debug, Clone)]
pub struct ReactivityForm {
    pub pairs: Vec<ReactivityPair>,
}

impl ReactivityForm {
    /// The rendered formula; a future formula, true on exactly the lassos the
    /// source automaton accepts.
    pub fn to_formula(&self) -> Result<Formula, OmegaError> {
        let mut parts = Vec::with_capacity(self.pairs.len());
        for p in &self.pairs {
            parts.push(p.to_formula()?);
        }
        Ok(Formula::and_all(parts))
    }
}

/// Characterizes the language of `n` as a conjunction of prefix-finiteness
/// implications. The automaton is determinized to a parity automaton; under
/// min-even acceptance a run is accepting iff for every odd priority `c`,
/// visiting priority-`c` states infinitely often implies visiting some state
/// of priority below `c` infinitely often. Each such constraint becomes a
/// pair of prefix languages.
pub fn reactivity_normal_form(n: &Nba) -> Result<ReactivityForm, OmegaError> {
    let dpa = nba_determinize(&nba_trim(n))?;
    let odd: BTreeSet<u32> = dpa.priority.iter().copied().filter(|p| p % 2 == 1).collect();
    let mut pairs = Vec::new();
    for c in odd {
        let forbidden_states: BTreeSet<StateId> =
            (0..dpa.n_states()).filter(|&q| dpa.priority[q] == c).collect();
        let forbidden = dpa_prefix_dfa(&dpa, &forbidden_states);
        if forbidden.is_empty_language() {
            // the priority is never reached; the constraint is vacuous
            continue;
        }
        let rescue_states: BTreeSet<StateId> =
            (0..dpa.n_states()).filter(|&q| dpa.priority[q] < c).collect();
        let rescue = dpa_prefix_dfa(&dpa, &rescue_states);
        pairs.push(ReactivityPair { rescue, forbidden });
    }
    Ok(ReactivityForm { pairs })
}

// ---------------------------------------------------------------------------
// propositional quantifier elimination

/// Removes variable `var` from the vocabulary of `d`. The language of `d`
/// must be insensitive to the variable (closed under flipping it in any
/// letter); on the canonical automaton the two variants of every letter then
/// drive identical transitions, so the projected automaton accepts exactly
/// the same words with the variable's bit erased.
fn drop_var_dfa(d: &Dfa, var: usize) -> Result<Dfa, OmegaError> {
    let d = canonical_min(d);
    let mask: Letter = 1 << var;
    let low = mask - 1;
    let names: Vec<String> = d
        .vocab
        .names()
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != var)
        .map(|(_, n)| n.clone())
        .collect();
    let vocab2 =
        Vocabulary::new(names).map_err(|_| OmegaError::Internal("vocabulary reduction"))?;
    let k2 = letter_count(&vocab2);
    let embed = |s2: Letter| (s2 & low) | ((s2 & !low) << 1);
    let mut trans = Vec::with_capacity(d.n_states());
    for q in 0..d.n_states() {
        let mut row = Vec::with_capacity(k2);
        for s2 in 0..k2 as Letter {
            let s = embed(s2);
            if d.step(q, s) != d.step(q, s | mask) {
                return Err(OmegaError::Internal("language is sensitive to a dropped variable"));
            }
            row.push(d.step(q, s));
        }
        trans.push(row);
    }
    Ok(canonical_min(&Dfa {
        vocab: vocab2,
        trans,
        initial: d.initial,
        accepting: d.accepting.clone(),
    }))
}

/// Eliminates `∃p` from an introspective formula. The language of the result
/// is the closure of the input's language under relabelling `p`, realized by
/// making the automaton ignore the variable and re-determinizing; the
/// variable is then dropped from the vocabulary so it cannot reappear in the
/// rendered formula.
pub fn exists_elim_introspective(
    p: &str,
    a: &Formula,
    vocab: &Vocabulary,
) -> Result<Formula, OmegaError> {
    let Some(idx) = vocab.index_of(p) else {
        return Ok(a.clone());
    };
    let d = itl_to_dfa(a, vocab)?;
    let closed = canonical_min(&determinize(&nfa_relabel_dont_care(&nfa_from_dfa(&d), idx))?);
    let dropped = drop_var_dfa(&closed, idx)?;
    let out = dfa_to_formula(&dropped);
    debug_assert!(!out.vars().free.contains(p));
    Ok(out)
}

/// Splits a conjunction of signed `<r>(skip ; F)` literals into its signed
/// bodies; `None` when the formula has any other shape.
fn future_literals(f: &Formula) -> Option<Vec<(bool, Formula)>> {
    fn body(f: &Formula) -> Option<Formula> {
        if let Formula::DiamondR(inner) = f {
            if let Formula::Chop(a, b) = &**inner {
                if matches!(**a, Formula::Skip) {
                    return Some((**b).clone());
                }
            }
        }
        None
    }
    fn walk(f: &Formula, out: &mut Vec<(bool, Formula)>) -> bool {
        match f {
            Formula::True => true,
            Formula::And(a, b) => walk(a, out) && walk(b, out),
            Formula::Not(a) => match body(a) {
                Some(g) => {
                    out.push((false, g));
                    true
                }
                None => false,
            },
            _ => match body(f) {
                Some(g) => {
                    out.push((true, g));
                    true
                }
                None => false,
            },
        }
    }
    let mut out = Vec::new();
    walk(f, &mut out).then_some(out)
}

/// A strictly future component at a reference interval constrains only the
/// positions strictly after it: `<r>(skip ; F)` at `(i, j)` holds iff `<r>F`
/// holds at the point `j + 1`. This converts a signed conjunction of such
/// literals into the point-anchored formula over the remaining omega-word.
fn point_form(lits: &[(bool, Formula)]) -> Formula {
    Formula::and_all(lits.iter().map(|(pos, body)| {
        let atom = Formula::diamond_r(body.clone());
        if *pos {
            atom
        } else {
            Formula::not(atom)
        }
    }))
}

/// Re-anchors a point formula as a strictly future atom: `<r>(skip ;
/// (empty ∧ H))` at `(i, j)` holds iff `H` holds at the point `j + 1`.
fn reanchor_future(h: Formula) -> Formula {
    Formula::diamond_r(Formula::chop(Formula::Skip, Formula::and(Formula::Empty, h)))
}

/// Eliminates `∃p` from a strictly future component: translate the
/// point-anchored conjunction to a Buchi automaton, close its language under
/// relabelling `p`, re-express the closure as a reactivity formula with the
/// variable dropped from every prefix automaton, and re-anchor.
fn eliminate_future_component(
    fk: &Formula,
    idx: usize,
    vocab: &Vocabulary,
) -> Result<Formula, OmegaError> {
    let Some(lits) = future_literals(fk) else {
        return Err(OmegaError::Separation(SeparationError::NotSeparated(fk.clone())));
    };
    if lits.is_empty() {
        return Ok(Formula::True);
    }
    let nba = future_to_nba(&point_form(&lits), vocab)?;
    let closed = nba_relabel_dont_care(&nba_trim(&nba), idx);
    let react = reactivity_normal_form(&closed)?;
    let mut parts = Vec::with_capacity(react.pairs.len());
    for pr in &react.pairs {
        let rescue = fin_formula(&drop_var_dfa(&pr.rescue, idx)?)?;
        let forbidden = fin_formula(&drop_var_dfa(&pr.forbidden, idx)?)?;
        parts.push(Formula::imp(rescue, forbidden));
    }
    Ok(reanchor_future(Formula::and_all(parts)))
}

/// Eliminates the propositional quantifier `∃p` from a formula of the
/// separated fragment. The quantifier distributes over each disjunct's
/// (past, introspective, future) triple because the three components
/// constrain pairwise disjoint stretches of the trace; each component is
/// closed under relabelling independently. The result contains neither
/// quantifiers nor the variable.
pub fn exists_elim(p: &str, a: &Formula, vocab: &Vocabulary) -> Result<Formula, OmegaError> {
    let Some(idx) = vocab.index_of(p) else {
        return Ok(a.clone());
    };
    if !a.vars().free.contains(p) {
        return Ok(a.clone());
    }
    if a.is_introspective() {
        return exists_elim_introspective(p, a, vocab);
    }
    let sep = separated_dnf(a)?;
    let mut out = Vec::new();
    for d in &sep.disjuncts {
        let intro = if d.introspective.vars().free.contains(p) {
            exists_elim_introspective(p, &d.introspective, vocab)?
        } else {
            d.introspective.clone()
        };
        let future = if d.future.vars().free.contains(p) {
            eliminate_future_component(&d.future, idx, vocab)?
        } else {
            d.future.clone()
        };
        let past = if d.past.vars().free.contains(p) {
            let rev = d
                .past
                .time_reverse()
                .map_err(|_| OmegaError::Internal("past component reversal"))?;
            eliminate_future_component(&rev, idx, vocab)?
                .time_reverse()
                .map_err(|_| OmegaError::Internal("past component reversal"))?
        } else {
            d.past.clone()
        };
        out.push(Formula::and_all([past, intro, future]));
    }
    let result = Formula::or_all(out);
    debug_assert!(!result.vars().free.contains(p));
    Ok(result)
}

/// Iterated quantifier elimination: the strongest consequence of `a` whose
/// variables avoid `hide`. For introspective input the result's language is
/// exactly the relabelling closure, hence strongest; in general it is a sound
/// consequence with the variable containment guarantee.
///
/// The vocabulary shrinks as variables are eliminated: rendering each
/// intermediate result over the reduced vocabulary is what keeps eliminated
/// variables from reappearing as vacuous literals in later renderings.
pub fn strongest_consequence(
    a: &Formula,
    hide: &BTreeSet<String>,
    vocab: &Vocabulary,
) -> Result<Formula, OmegaError> {
    let mut out = a.clone();
    let mut voc = vocab.clone();
    for p in hide {
        out = exists_elim(p, &out, &voc)?;
        if voc.index_of(p).is_some() {
            let names: Vec<String> =
                voc.names().iter().filter(|n| n.as_str() != p).cloned().collect();
            voc = Vocabulary::new(names)
                .map_err(|_| OmegaError::Internal("vocabulary reduction"))?;
        }
    }
    // containment is structural for the closure construction; keep an exact
    // guard where it is cheap to decide
    if a.is_introspective() && out.is_introspective() {
        let da = itl_to_dfa(a, vocab)?;
        let dc = itl_to_dfa(&out, vocab)?;
        if !dfa_combine(&da, &dc, BoolOp::Diff)?.is_empty_language() {
            return Err(OmegaError::VerificationFailed("consequence containment"));
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// bounded falsification

/// Exhaustive search for a window and reference interval falsifying `f`
/// under the finite-window semantics, up to `max_len` states. `None` means no
/// counterexample within the bound — evidence, not a validity proof.
pub fn bounded_falsify(
    f: &Formula,
    vocab: &Vocabulary,
    max_len: usize,
) -> Result<Option<Counterexample>, OmegaError> {
    for w in enumerate_windows(vocab, max_len) {
        let table = eval_window_all_pairs(f, &w, DEFAULT_INSERTION_BUDGET)?;
        for i in 0..w.len() {
            for j in i..w.len() {
                if !table[i][j - i] {
                    return Ok(Some(Counterexample { window: w, i, j, lhs: false, rhs: true }));
                }
            }
        }
    }
    Ok(None)
}

/// Outcome of a validity check that prefers the exact decision procedure and
/// falls back to bounded falsification outside its fragment.
enum Verdict {
    ExactValid,
    /// No counterexample up to the bound; not a proof.
    Bounded,
    ExactCounter(SeparatedWitness),
    BoundedCounter(Counterexample),
}

fn validity_verdict(
    f: &Formula,
    vocab: &Vocabulary,
    max_len: usize,
) -> Result<Verdict, OmegaError> {
    match decide_separated(Query::Valid, f, vocab) {
        Ok(d) => {
            if d.holds {
                Ok(Verdict::ExactValid)
            } else {
                let w = d.witness.ok_or(OmegaError::Internal("missing countermodel"))?;
                Ok(Verdict::ExactCounter(w))
            }
        }
        // outside the separated fragment, or over the construction guards:
        // fall back to the bounded search
        Err(OmegaError::Separation(_)) | Err(OmegaError::Automata(_)) => {
            match bounded_falsify(f, vocab, max_len)? {
                Some(cx) => Ok(Verdict::BoundedCounter(cx)),
                None => Ok(Verdict::Bounded),
            }
        }
        Err(e) => Err(e),
    }
}

// ---------------------------------------------------------------------------
// interpolation and definability

/// An interpolant together with the strength of its verification.
#[derive(Debug, Clone)]
pub struct Interpolant {
    pub formula: Formula,
    /// Both implication checks were decided exactly; `false` means at least
    /// one check was only a bounded falsification search that found nothing.
    pub exact: bool,
}

/// Uniform interpolation: a formula `C` over the shared variables with
/// `A → C` and `C → B`, computed from `A` alone. Every vocabulary variable
/// outside the shared set is hidden — for variables free in `A` this is a
/// genuine quantification, for the rest a no-op on the language that merely
/// keeps them out of the rendered result. Fails when `A → B` (or, impossibly
/// for sound eliminations, `C → B`) has a countermodel.
pub fn interpolate(a: &Formula, b: &Formula, vocab: &Vocabulary) -> Result<Interpolant, OmegaError> {
    let mut exact = true;
    check_implication(&Formula::imp(a.clone(), b.clone()), vocab, &mut exact)?;
    let shared: BTreeSet<String> =
        a.vars().free.intersection(&b.vars().free).cloned().collect();
    let hide: BTreeSet<String> = vocab
        .names()
        .iter()
        .filter(|n| !shared.contains(n.as_str()))
        .cloned()
        .collect();
    let c = strongest_consequence(a, &hide, vocab)?;
    if !c.vars().free.is_subset(&shared) {
        return Err(OmegaError::VerificationFailed("interpolant variable containment"));
    }
    check_implication(&Formula::imp(a.clone(), c.clone()), vocab, &mut exact)?;
    check_implication(&Formula::imp(c.clone(), b.clone()), vocab, &mut exact)?;
    Ok(Interpolant { formula: c, exact })
}

fn check_implication(
    f: &Formula,
    vocab: &Vocabulary,
    exact: &mut bool,
) -> Result<(), OmegaError> {
    match validity_verdict(f, vocab, BOUNDED_VALIDITY_WINDOW)? {
        Verdict::ExactValid => Ok(()),
        Verdict::Bounded => {
            *exact = false;
            Ok(())
        }
        Verdict::ExactCounter(w) => Err(OmegaError::ImplicationInvalid(Box::new(w))),
        Verdict::BoundedCounter(cx) => Err(OmegaError::ImplicationFalsified(Box::new(cx))),
    }
}

/// An explicit definition together with the strength of its verification.
#[derive(Debug, Clone)]
pub struct BethDefinition {
    pub formula: Formula,
    /// The definability premise and the final equivalence were decided
    /// exactly rather than by bounded search.
    pub exact: bool,
}

fn witness_to_counterexample(
    w: &SeparatedWitness,
    vocab: &Vocabulary,
) -> Result<Counterexample, OmegaError> {
    let window = Window::new(vocab.clone(), w.window.clone())
        .map_err(|_| OmegaError::Internal("empty witness window"))?;
    let j = window.len() - 1;
    Ok(Counterexample { window, i: 0, j, lhs: false, rhs: true })
}

/// If `a` determines the truth of `p` at every interval of every model —
/// checked as: `a` holding everywhere for two labellings of `p` forces the
/// labellings to agree — then `p` has an explicit definition in the remaining
/// variables. The definition is the strongest `p`-free consequence of
/// `a ∧ p`, and is verified against `a` before being returned.
pub fn beth_define(a: &Formula, p: &str, vocab: &Vocabulary) -> Result<BethDefinition, OmegaError> {
    if !a.vars().free.contains(p) {
        return Err(OmegaError::MissingVariable(p.to_string()));
    }
    let (vocab2, p2) = vocab.with_fresh(p);
    let a2 = a
        .substitute_var(p, &p2)
        .map_err(|_| OmegaError::Internal("fresh variable renaming"))?;
    let everywhere = |f: Formula| Formula::BoxA(Box::new(f));
    let premise = Formula::imp(
        Formula::and(everywhere(a.clone()), everywhere(a2)),
        Formula::iff(Formula::var(p), Formula::var(&p2)),
    );
    let mut exact = true;
    match validity_verdict(&premise, &vocab2, BOUNDED_VALIDITY_WINDOW)? {
        Verdict::ExactValid => {}
        Verdict::Bounded => exact = false,
        Verdict::ExactCounter(w) => {
            let cx = witness_to_counterexample(&w, &vocab2)?;
            return Err(OmegaError::NotImplicitlyDefined(Box::new(cx)));
        }
        Verdict::BoundedCounter(cx) => {
            return Err(OmegaError::NotImplicitlyDefined(Box::new(cx)));
        }
    }
    let c = strongest_consequence(
        &Formula::and(a.clone(), Formula::var(p)),
        &BTreeSet::from([p.to_string()]),
        vocab,
    )?;
    if c.vars().free.contains(p) || c.vars().free.contains(&p2) {
        return Err(OmegaError::VerificationFailed("definition variable containment"));
    }
    let goal = Formula::imp(
        everywhere(a.clone()),
        Formula::iff(Formula::var(p), c.clone()),
    );
    match validity_verdict(&goal, vocab, BOUNDED_VALIDITY_WINDOW)? {
        Verdict::ExactValid => {}
        Verdict::Bounded => exact = false,
        Verdict::ExactCounter(w) => {
            let cx = witness_to_counterexample(&w, vocab)?;
            return Err(OmegaError::DefinitionFailed(Box::new(cx)));
        }
        Verdict::BoundedCounter(cx) => {
            return Err(OmegaError::DefinitionFailed(Box::new(cx)));
        }
    }
    Ok(BethDefinition { formula: c, exact })
}

// ---------------------------------------------------------------------------
// decision procedure for the separated fragment

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Query {
    Sat,
    Valid,
}

/// Model evidence for a separated formula: a finite window on which the
/// introspective component holds, an ultimately periodic continuation to the
/// right of the window, and an ultimately periodic continuation read leftward
/// from just before the window (its letters listed walking away from the
/// window). `None` contexts are unconstrained.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeparatedWitness {
    pub window: Vec<Letter>,
    pub future_context: Option<Lasso>,
    pub past_context: Option<Lasso>,
}

#[derive(Debug, Clone)]
pub struct Decision {
    pub holds: bool,
    /// For `Sat`: a model when satisfiable. For `Valid`: a countermodel when
    /// invalid.
    pub witness: Option<SeparatedWitness>,
}

/// Decides satisfiability or validity of a separated formula. Each disjunct
/// of its separated form is satisfiable iff its three components are, because
/// they constrain pairwise disjoint stretches of the trace: the introspective
/// component is checked by automaton emptiness over finite words, and each
/// strictly future (resp. past) component by Buchi emptiness over the
/// omega-word beyond (resp. before) the reference interval.
pub fn decide_separated(
    query: Query,
    a: &Formula,
    vocab: &Vocabulary,
) -> Result<Decision, OmegaError> {
    match query {
        Query::Sat => {
            let model = separated_model(a, vocab)?;
            Ok(Decision { holds: model.is_some(), witness: model })
        }
        Query::Valid => {
            let counter = separated_model(&Formula::not(a.clone()), vocab)?;
            Ok(Decision { holds: counter.is_none(), witness: counter })
        }
    }
}

/// Satisfiability witness for one strictly future (or reversed past)
/// component: `Ok(None)` means unsatisfiable, `Ok(Some(None))` unconstrained,
/// `Ok(Some(Some(lasso)))` a concrete omega-continuation.
#[allow(clippy::option_option)]
fn component_witness(
    fk: &Formula,
    vocab: &Vocabulary,
) -> Result<Option<Option<Lasso>>, OmegaError> {
    let Some(lits) = future_literals(fk) else {
        return Err(OmegaError::Separation(SeparationError::NotSeparated(fk.clone())));
    };
    if lits.is_empty() {
        return Ok(Some(None));
    }
    let nba = nba_trim(&future_to_nba(&point_form(&lits), vocab)?);
    Ok(nba_witness(&nba).map(Some))
}

fn separated_model(
    a: &Formula,
    vocab: &Vocabulary,
) -> Result<Option<SeparatedWitness>, OmegaError> {
    let sep = separated_dnf(a)?;
    for d in &sep.disjuncts {
        let intro = itl_to_dfa(&d.introspective, vocab)?;
        let Some(window) = intro.shortest_accepted() else {
            continue;
        };
        let Some(future_context) = component_witness(&d.future, vocab)? else {
            continue;
        };
        let past_rev = d
            .past
            .time_reverse()
            .map_err(|_| OmegaError::Internal("past component reversal"))?;
        let Some(past_context) = component_witness(&past_rev, vocab)? else {
            continue;
        };
        return Ok(Some(SeparatedWitness { window, future_context, past_context }));
    }
    Ok(None)
}
