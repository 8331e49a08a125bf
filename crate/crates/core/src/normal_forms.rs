//! Guarded normal forms, full-system chop decompositions (shared-state,
//! strict and mirrored), closure systems relative to a state condition,
//! canonical equation solving, and the block normal form together with its
//! grammar conformance checkers.
//!
//! Every constructor in this module verifies its result against the source
//! formula by exact automaton equivalence before returning; a verification
//! failure is reported as an error and never silently ignored.

use crate::automata::{
    canonical_min, determinize, dfa_equivalent, dfa_reverse, letter_count, prefix_to,
    suffix_after_shared, AutomataError, Dfa, Letter, StateId,
};
use crate::compile::{chi_set, dfa_to_formula, itl_to_dfa, state_letters, CompileError};
use crate::syntax::{Formula, Vocabulary};
use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NfError {
    NotIntrospective(Formula),
    NotStateFormula(Formula),
    WrongFlavor,
    VerificationFailed(&'static str),
    TooLarge { what: &'static str, size: usize, limit: usize },
    Internal(&'static str),
    Compile(CompileError),
}

impl fmt::Display for NfError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NfError::NotIntrospective(a) => write!(f, "`{a}` is not an introspective formula"),
            NfError::NotStateFormula(a) => write!(f, "`{a}` is not a state formula"),
            NfError::WrongFlavor => write!(f, "decomposition has the wrong flavor for this step"),
            NfError::VerificationFailed(what) => {
                write!(f, "internal check failed while building the {what}; this is a bug")
            }
            NfError::TooLarge { what, size, limit } => {
                write!(f, "{what} grew to {size}, past the limit {limit}")
            }
            NfError::Internal(what) => write!(f, "internal error: {what}"),
            NfError::Compile(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for NfError {}

impl From<CompileError> for NfError {
    fn from(e: CompileError) -> Self {
        NfError::Compile(e)
    }
}

impl From<AutomataError> for NfError {
    fn from(e: AutomataError) -> Self {
        NfError::Compile(e.into())
    }
}

pub(crate) fn compile_checked(f: &Formula, vocab: &Vocabulary) -> Result<Dfa, NfError> {
    match itl_to_dfa(f, vocab) {
        Ok(d) => Ok(d),
        Err(CompileError::NotCompilable(g)) => Err(NfError::NotIntrospective(g)),
        Err(e) => Err(NfError::Compile(e)),
    }
}

/// Are the guards pairwise unsatisfiable and jointly valid? Checked by exact
/// automaton algebra, so it works for interval guards as well as state ones.
pub fn guards_full_system(guards: &[Formula], vocab: &Vocabulary) -> Result<bool, NfError> {
    let union = itl_to_dfa(&Formula::or_all(guards.to_vec()), vocab)?;
    let top = itl_to_dfa(&Formula::True, vocab)?;
    if !dfa_equivalent(&union, &top)? {
        return Ok(false);
    }
    for i in 0..guards.len() {
        for j in (i + 1)..guards.len() {
            let both = itl_to_dfa(&Formula::and(guards[i].clone(), guards[j].clone()), vocab)?;
            if !both.is_empty_language() {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

// ---------------------------------------------------------------------------
// guarded normal form

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GnfDirection {
    Future,
    Past,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GnfBranch {
    /// State formula selecting the first (future) or last (past) state.
    pub guard: Formula,
    /// What must hold on the rest of the interval after peeling one state.
    pub continuation: Formula,
}

/// Case distinction on the first (or last) state of an interval: the point
/// case plus one branch per class of states with equivalent continuations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Gnf {
    pub direction: GnfDirection,
    pub empty_part: Formula,
    pub branches: Vec<GnfBranch>,
}

impl Gnf {
    pub fn to_formula(&self) -> Formula {
        let mut parts = vec![Formula::and(self.empty_part.clone(), Formula::Empty)];
        for b in &self.branches {
            parts.push(match self.direction {
                GnfDirection::Future => {
                    Formula::and(b.guard.clone(), Formula::next(b.continuation.clone()))
                }
                GnfDirection::Past => {
                    Formula::and(Formula::prev(b.continuation.clone()), Formula::fin(b.guard.clone()))
                }
            });
        }
        Formula::or_all(parts)
    }

    /// The dual reading: guards cover every state, so each branch can be
    /// stated as an implication.
    pub fn to_universal_formula(&self) -> Formula {
        let mut parts = vec![Formula::imp(Formula::Empty, self.empty_part.clone())];
        for b in &self.branches {
            parts.push(match self.direction {
                GnfDirection::Future => Formula::imp(
                    Formula::and(b.guard.clone(), Formula::not(Formula::Empty)),
                    Formula::next(b.continuation.clone()),
                ),
                GnfDirection::Past => Formula::imp(
                    Formula::and(Formula::fin(b.guard.clone()), Formula::not(Formula::Empty)),
                    Formula::prev(b.continuation.clone()),
                ),
            });
        }
        Formula::and_all(parts)
    }
}

/// Coarsest guarded normal form of a compilable formula: branches are the
/// classes of first (future direction) or last (past direction) states with
/// language-equal continuations; states with no continuation at all share a
/// `false` branch, so the guards always partition the alphabet.
pub fn gnf(f: &Formula, direction: GnfDirection, vocab: &Vocabulary) -> Result<Gnf, NfError> {
    let d = compile_checked(f, vocab)?;
    let base = match direction {
        GnfDirection::Future => d.clone(),
        GnfDirection::Past => canonical_min(&determinize(&dfa_reverse(&d))?),
    };
    let k = letter_count(vocab);
    let mut point_letters = BTreeSet::new();
    for s in 0..k as Letter {
        if base.accepting.contains(&base.step(base.initial, s)) {
            point_letters.insert(s);
        }
    }
    let empty_part = chi_set(&point_letters, vocab);
    // group letters by the residual language after reading them
    let mut groups: Vec<(Dfa, Vec<Letter>)> = Vec::new();
    for s in 0..k as Letter {
        let res = canonical_min(&base.rerooted(base.step(base.initial, s)));
        let mut placed = false;
        for (g, ls) in groups.iter_mut() {
            if dfa_equivalent(g, &res)? {
                ls.push(s);
                placed = true;
                break;
            }
        }
        if !placed {
            groups.push((res, vec![s]));
        }
    }
    let mut branches = Vec::with_capacity(groups.len());
    for (res, ls) in groups {
        let guard = chi_set(&ls.into_iter().collect(), vocab);
        let cont = dfa_to_formula(&res);
        let continuation = match direction {
            GnfDirection::Future => cont,
            GnfDirection::Past => cont
                .time_reverse()
                .map_err(|_| NfError::Internal("irreversible continuation"))?,
        };
        branches.push(GnfBranch { guard, continuation });
    }
    let out = Gnf { direction, empty_part, branches };
    let rebuilt = itl_to_dfa(&out.to_formula(), vocab)?;
    if !dfa_equivalent(&rebuilt, &d)? {
        return Err(NfError::VerificationFailed("guarded normal form"));
    }
    let universal = itl_to_dfa(&out.to_universal_formula(), vocab)?;
    if !dfa_equivalent(&universal, &d)? {
        return Err(NfError::VerificationFailed("universal guarded normal form"));
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// full-system chop decompositions

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChopFlavor {
    /// `A ≡ ⋁ A_k;A_k'` — the chop witnesses share their midpoint state.
    Nonstrict,
    /// `A ≡ A_e∧empty ∨ ⋁ A_k;skip;A_k'` — disjoint prefix and suffix.
    Strict,
    /// `A ≡ ⋁ A_k';A_k` — decomposition anchored at the suffix side.
    Mirror,
}

/// A chop decomposition whose anchor-side components form a full system, so
/// both the disjunctive and the conjunctive readings are exact.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChopSystem {
    pub flavor: ChopFlavor,
    /// Point-interval case; present only for the strict flavor.
    pub empty_part: Option<Formula>,
    pub pairs: Vec<(Formula, Formula)>,
}

impl ChopSystem {
    /// The components that form a full system: the left sides, except for the
    /// mirror flavor which anchors on the right.
    pub fn guards(&self) -> Vec<Formula> {
        self.pairs
            .iter()
            .map(|(a, b)| match self.flavor {
                ChopFlavor::Mirror => b.clone(),
                _ => a.clone(),
            })
            .collect()
    }

    pub fn to_formula(&self) -> Formula {
        let mut parts = Vec::new();
        if let Some(e) = &self.empty_part {
            parts.push(Formula::and(e.clone(), Formula::Empty));
        }
        for (a, b) in &self.pairs {
            parts.push(match self.flavor {
                ChopFlavor::Nonstrict | ChopFlavor::Mirror => Formula::chop(a.clone(), b.clone()),
                ChopFlavor::Strict => {
                    Formula::chop(a.clone(), Formula::chop(Formula::Skip, b.clone()))
                }
            });
        }
        Formula::or_all(parts)
    }

    /// The dual reading: no split may pair an anchor component with the
    /// negation of its partner.
    pub fn to_conjunctive_formula(&self) -> Formula {
        let mut parts = Vec::new();
        if let Some(e) = &self.empty_part {
            parts.push(Formula::imp(Formula::Empty, e.clone()));
        }
        for (a, b) in &self.pairs {
            parts.push(Formula::not(match self.flavor {
                ChopFlavor::Nonstrict => Formula::chop(a.clone(), Formula::not(b.clone())),
                ChopFlavor::Mirror => Formula::chop(Formula::not(a.clone()), b.clone()),
                ChopFlavor::Strict => Formula::chop(
                    a.clone(),
                    Formula::chop(Formula::Skip, Formula::not(b.clone())),
                ),
            }));
        }
        Formula::and_all(parts)
    }
}

fn verify_chop_system(sys: &ChopSystem, d: &Dfa, vocab: &Vocabulary) -> Result<(), NfError> {
    let dis = itl_to_dfa(&sys.to_formula(), vocab)?;
    if !dfa_equivalent(&dis, d)? {
        return Err(NfError::VerificationFailed("chop decomposition"));
    }
    let con = itl_to_dfa(&sys.to_conjunctive_formula(), vocab)?;
    if !dfa_equivalent(&con, d)? {
        return Err(NfError::VerificationFailed("conjunctive chop decomposition"));
    }
    Ok(())
}

fn build_nonstrict(d: &Dfa) -> ChopSystem {
    let mut pairs = Vec::new();
    for q in 0..d.n_states() {
        let pre = prefix_to(d, q);
        if pre.is_empty_language() {
            continue;
        }
        let left = dfa_to_formula(&canonical_min(&pre));
        // suffix from q, with the first letter free: it is the state shared
        // with the prefix and was already consumed on the way to q
        let right = dfa_to_formula(&canonical_min(&suffix_after_shared(d, q)));
        pairs.push((left, right));
    }
    ChopSystem { flavor: ChopFlavor::Nonstrict, empty_part: None, pairs }
}

fn build_strict(d: &Dfa, vocab: &Vocabulary) -> ChopSystem {
    let k = letter_count(vocab);
    let mut point_letters = BTreeSet::new();
    for s in 0..k as Letter {
        if d.accepting.contains(&d.step(d.initial, s)) {
            point_letters.insert(s);
        }
    }
    let empty_part = chi_set(&point_letters, vocab);
    let mut pairs = Vec::new();
    for q in 0..d.n_states() {
        let pre = prefix_to(d, q);
        if pre.is_empty_language() {
            continue;
        }
        let left = dfa_to_formula(&canonical_min(&pre));
        let right = dfa_to_formula(&canonical_min(&d.rerooted(q)));
        pairs.push((left, right));
    }
    ChopSystem { flavor: ChopFlavor::Strict, empty_part: Some(empty_part), pairs }
}

/// Decomposes a compilable formula over the states of its minimal automaton:
/// for each state, the language of prefixes reaching it and the language of
/// completions from it. Determinism makes the prefix components a full
/// system, and both the disjunctive and conjunctive readings are verified
/// exactly before returning.
pub fn full_system_chop(
    f: &Formula,
    flavor: ChopFlavor,
    vocab: &Vocabulary,
) -> Result<ChopSystem, NfError> {
    let d = compile_checked(f, vocab)?;
    let sys = match flavor {
        ChopFlavor::Nonstrict => build_nonstrict(&d),
        ChopFlavor::Strict => build_strict(&d, vocab),
        ChopFlavor::Mirror => {
            let rd = canonical_min(&determinize(&dfa_reverse(&d))?);
            let rev_sys = build_nonstrict(&rd);
            let mut pairs = Vec::with_capacity(rev_sys.pairs.len());
            for (a, b) in rev_sys.pairs {
                let left = b
                    .time_reverse()
                    .map_err(|_| NfError::Internal("irreversible mirror component"))?;
                let right = a
                    .time_reverse()
                    .map_err(|_| NfError::Internal("irreversible mirror component"))?;
                pairs.push((left, right));
            }
            ChopSystem { flavor: ChopFlavor::Mirror, empty_part: None, pairs }
        }
    };
    verify_chop_system(&sys, &d, vocab)?;
    Ok(sys)
}

// ---------------------------------------------------------------------------
// syntactic strictification

pub const STRICTIFY_COMPONENT_LIMIT: usize = 24;
pub const PRODUCT_STATE_LIMIT: usize = 200_000;

/// Membership profiles of non-empty words across a family of automata,
/// restricted to reachable ones (a breadth-first search over the product).
fn reachable_profiles(ds: &[Dfa]) -> Result<BTreeSet<Vec<bool>>, NfError> {
    let mut profiles = BTreeSet::new();
    if ds.is_empty() {
        profiles.insert(Vec::new());
        return Ok(profiles);
    }
    let k = letter_count(&ds[0].vocab);
    let start: Vec<StateId> = ds.iter().map(|d| d.initial).collect();
    let mut seen: BTreeSet<Vec<StateId>> = BTreeSet::new();
    seen.insert(start.clone());
    let mut queue = VecDeque::from([start]);
    while let Some(t) = queue.pop_front() {
        for s in 0..k as Letter {
            let t2: Vec<StateId> = t.iter().zip(ds).map(|(&q, d)| d.step(q, s)).collect();
            profiles.insert(t2.iter().zip(ds).map(|(&q, d)| d.accepting.contains(&q)).collect());
            if seen.insert(t2.clone()) {
                if seen.len() > PRODUCT_STATE_LIMIT {
                    return Err(NfError::TooLarge {
                        what: "component product",
                        size: seen.len(),
                        limit: PRODUCT_STATE_LIMIT,
                    });
                }
                queue.push_back(t2);
            }
        }
    }
    Ok(profiles)
}

/// Turns a verified shared-state decomposition into a strict one by purely
/// syntactic means: peel the last state of each prefix component (normal
/// form of its time reversal) and the first state of each suffix component,
/// regroup around the shared state, and restore a full system by taking all
/// the satisfiable elementary conjunctions of the left components. The
/// result is verified exactly, which also establishes agreement with the
/// automaton-route strict decomposition.
pub fn strictify_syntactic(
    f: &Formula,
    dec: &ChopSystem,
    vocab: &Vocabulary,
) -> Result<ChopSystem, NfError> {
    if dec.flavor != ChopFlavor::Nonstrict {
        return Err(NfError::WrongFlavor);
    }
    let d = compile_checked(f, vocab)?;
    let mut empty_parts = Vec::new();
    let mut raw: Vec<(Formula, Formula)> = Vec::new();
    for (ak, akp) in &dec.pairs {
        let gp = gnf(ak, GnfDirection::Past, vocab)?;
        let gf = gnf(akp, GnfDirection::Future, vocab)?;
        empty_parts.push(Formula::and(gp.empty_part.clone(), gf.empty_part.clone()));
        // shared state is the last of the prefix component: its interval
        // ends the split, and the suffix component holds at that point
        for b in &gp.branches {
            raw.push((
                b.continuation.clone(),
                Formula::and(
                    Formula::and(b.guard.clone(), gf.empty_part.clone()),
                    Formula::Empty,
                ),
            ));
        }
        // shared state is the first of the suffix component
        for b in &gf.branches {
            raw.push((
                Formula::and(ak.clone(), Formula::fin(b.guard.clone())),
                b.continuation.clone(),
            ));
        }
    }
    let empty_part = Formula::or_all(empty_parts);
    // drop unsatisfiable left components and merge language-equal ones
    let mut comps: Vec<(Dfa, Formula, Vec<Formula>)> = Vec::new();
    for (x, y) in raw {
        let dx = itl_to_dfa(&x, vocab)?;
        if dx.is_empty_language() {
            continue;
        }
        let mut placed = false;
        for (g, _, ys) in comps.iter_mut() {
            if dfa_equivalent(g, &dx)? {
                ys.push(y.clone());
                placed = true;
                break;
            }
        }
        if !placed {
            comps.push((dx, x, vec![y]));
        }
    }
    if comps.len() > STRICTIFY_COMPONENT_LIMIT {
        return Err(NfError::TooLarge {
            what: "strictification components",
            size: comps.len(),
            limit: STRICTIFY_COMPONENT_LIMIT,
        });
    }
    let dfas: Vec<Dfa> = comps.iter().map(|(g, _, _)| g.clone()).collect();
    let profiles = reachable_profiles(&dfas)?;
    let mut pairs = Vec::new();
    for z in profiles {
        let mut guard_parts = Vec::with_capacity(comps.len());
        let mut tail_parts = Vec::new();
        for (n, (_, x, ys)) in comps.iter().enumerate() {
            if z[n] {
                guard_parts.push(x.clone());
                tail_parts.extend(ys.iter().cloned());
            } else {
                guard_parts.push(Formula::not(x.clone()));
            }
        }
        pairs.push((Formula::and_all(guard_parts), Formula::or_all(tail_parts)));
    }
    let sys = ChopSystem { flavor: ChopFlavor::Strict, empty_part: Some(empty_part), pairs };
    verify_chop_system(&sys, &d, vocab)?;
    Ok(sys)
}

// ---------------------------------------------------------------------------
// closure system relative to a state condition

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WTransition {
    /// Left block of the transition, already in head shape (`…∧box εw`);
    /// guaranteed satisfiable.
    pub block: Formula,
    /// Index of the member (of the opposite phase) the transition leads to.
    pub target: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WMember {
    /// `true` for the positive phase (`B∧w`), `false` for `B∧¬w`.
    pub phase: bool,
    /// The member formula B.
    pub base: Formula,
    /// Homogeneous part in head shape, absent when no all-phase word exists.
    pub homogeneous: Option<Formula>,
    pub transitions: Vec<WTransition>,
}

/// Equations describing a formula by the maximal leading blocks of states
/// agreeing on a state condition: one member per phase and residual
/// language, each with a homogeneous part and strict transitions into the
/// opposite phase.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WBlockSystem {
    pub vocab: Vocabulary,
    pub w: Formula,
    pub members: Vec<WMember>,
    pub root_pos: usize,
    pub root_neg: usize,
    /// Every head-shaped block of the system with its phase, for grammar
    /// conformance checking.
    pub registry: Vec<(Formula, bool)>,
}

impl WBlockSystem {
    pub fn phase_formula(&self, phase: bool) -> Formula {
        if phase {
            self.w.clone()
        } else {
            Formula::not(self.w.clone())
        }
    }

    /// Left-hand side of a member's equation: `base ∧ εw`.
    pub fn member_lhs(&self, idx: usize) -> Formula {
        let m = &self.members[idx];
        Formula::and(m.base.clone(), self.phase_formula(m.phase))
    }

    /// Right-hand side of a member's equation: homogeneous part plus one
    /// strict transition per reachable opposite-phase member.
    pub fn member_rhs(&self, idx: usize) -> Formula {
        let m = &self.members[idx];
        let mut parts: Vec<Formula> = m.homogeneous.iter().cloned().collect();
        for t in &m.transitions {
            parts.push(Formula::chop(
                t.block.clone(),
                Formula::chop(Formula::Skip, self.member_lhs(t.target)),
            ));
        }
        Formula::or_all(parts)
    }
}

/// Is there an accepted word from `q` that starts with one of `first`?
fn live_with_first_letters(d: &Dfa, q: StateId, first: &BTreeSet<Letter>) -> bool {
    first.iter().any(|&s| {
        let q2 = d.step(q, s);
        d.accepting.contains(&q2) || !d.rerooted(q2).is_empty_language()
    })
}

/// Builds the closure system of a compilable formula relative to the state
/// condition `w`. Members are deduplicated by residual language, transition
/// blocks are pruned when unsatisfiable or when their target phase cannot
/// start the residual, and every equation is verified exactly.
pub fn w_closure_system(
    f: &Formula,
    w: &Formula,
    vocab: &Vocabulary,
) -> Result<WBlockSystem, NfError> {
    if !w.is_state_formula() {
        return Err(NfError::NotStateFormula(w.clone()));
    }
    let d = compile_checked(f, vocab)?;
    let k = letter_count(vocab);
    let w_letters = state_letters(w, vocab)?;
    let not_w_letters: BTreeSet<Letter> =
        (0..k as Letter).filter(|s| !w_letters.contains(s)).collect();
    let phase_letters =
        |ph: bool| if ph { w_letters.clone() } else { not_w_letters.clone() };
    let canon: Vec<Dfa> = (0..d.n_states()).map(|q| canonical_min(&d.rerooted(q))).collect();

    let w_pos = w.clone();
    let w_neg = Formula::not(w.clone());
    let box_phase = |ph: bool| {
        Formula::box_dia(if ph { w_pos.clone() } else { w_neg.clone() })
    };

    let mut members: Vec<WMember> = Vec::new();
    let mut keys: Vec<(bool, StateId)> = Vec::new();
    let mut queue: VecDeque<usize> = VecDeque::new();
    let find_or_insert = |phase: bool,
                          q: StateId,
                          members: &mut Vec<WMember>,
                          keys: &mut Vec<(bool, StateId)>,
                          queue: &mut VecDeque<usize>|
     -> Result<usize, NfError> {
        for (idx, &(ph, rep)) in keys.iter().enumerate() {
            if ph == phase && dfa_equivalent(&canon[rep], &canon[q])? {
                return Ok(idx);
            }
        }
        members.push(WMember {
            phase,
            base: dfa_to_formula(&canon[q]),
            homogeneous: None,
            transitions: Vec::new(),
        });
        keys.push((phase, q));
        queue.push_back(members.len() - 1);
        Ok(members.len() - 1)
    };

    let root_pos = find_or_insert(true, d.initial, &mut members, &mut keys, &mut queue)?;
    let root_neg = find_or_insert(false, d.initial, &mut members, &mut keys, &mut queue)?;

    while let Some(m) = queue.pop_front() {
        let (phase, q) = keys[m];
        let eps = phase_letters(phase);
        let opposite = phase_letters(!phase);
        let restricted = d.rerooted(q).restrict_letters(&eps);
        // homogeneous part: completions staying in the phase throughout
        let hd = canonical_min(&restricted);
        if !hd.is_empty_language() {
            members[m].homogeneous =
                Some(Formula::and(dfa_to_formula(&hd), box_phase(phase)));
        }
        // one transition per state reachable by a pure phase block whose
        // residual can continue in the opposite phase
        for q2 in 0..d.n_states() {
            let bd = prefix_to(&restricted, q2);
            if bd.is_empty_language() {
                continue;
            }
            if !live_with_first_letters(&d, q2, &opposite) {
                continue;
            }
            let block = Formula::and(dfa_to_formula(&canonical_min(&bd)), box_phase(phase));
            let target = find_or_insert(!phase, q2, &mut members, &mut keys, &mut queue)?;
            members[m].transitions.push(WTransition { block, target });
        }
    }

    let mut registry = Vec::new();
    for m in &members {
        if let Some(h) = &m.homogeneous {
            registry.push((h.clone(), m.phase));
        }
        for t in &m.transitions {
            registry.push((t.block.clone(), m.phase));
        }
    }
    let sys = WBlockSystem { vocab: vocab.clone(), w: w.clone(), members, root_pos, root_neg, registry };
    for idx in 0..sys.members.len() {
        let lhs = itl_to_dfa(&sys.member_lhs(idx), vocab)?;
        let rhs = itl_to_dfa(&sys.member_rhs(idx), vocab)?;
        if !dfa_equivalent(&lhs, &rhs)? {
            return Err(NfError::VerificationFailed("closure equation"));
        }
    }
    Ok(sys)
}

// ---------------------------------------------------------------------------
// canonical equations and their solution

/// One equation `unknown ≡ closed ∨ ⋁ coefficient;(unknown_l)`, with the
/// coefficients in prefix shape (head blocks chained through `;skip`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Equation {
    pub closed: Option<Formula>,
    pub terms: Vec<(Formula, usize)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EquationSystem {
    pub vocab: Vocabulary,
    pub equations: Vec<Equation>,
}

/// The equations of a closure system, with tail unknowns in place of the
/// opposite-phase member formulas.
pub fn equations_from_blocks(sys: &WBlockSystem) -> EquationSystem {
    let equations = sys
        .members
        .iter()
        .map(|m| Equation {
            closed: m.homogeneous.clone(),
            terms: m
                .transitions
                .iter()
                .map(|t| (Formula::chop(t.block.clone(), Formula::Skip), t.target))
                .collect(),
        })
        .collect();
    EquationSystem { vocab: sys.vocab.clone(), equations }
}

/// `coefficient ; closed`, distributing over top-level disjunctions so the
/// result keeps the closed-part shape.
fn compose_closed(coeff: &Formula, closed: &Formula) -> Formula {
    match closed {
        Formula::Or(a, b) => {
            Formula::or(compose_closed(coeff, a), compose_closed(coeff, b))
        }
        other => Formula::chop(coeff.clone(), other.clone()),
    }
}

fn merge_terms(terms: Vec<(Formula, usize)>) -> Vec<(Formula, usize)> {
    let mut out: Vec<(Formula, usize)> = Vec::new();
    let mut index: BTreeMap<usize, usize> = BTreeMap::new();
    for (c, t) in terms {
        match index.get(&t) {
            Some(&pos) => {
                let old = out[pos].0.clone();
                out[pos].0 = Formula::or(old, c);
            }
            None => {
                index.insert(t, out.len());
                out.push((c, t));
            }
        }
    }
    out
}

fn or_opt(a: Option<Formula>, b: Option<Formula>) -> Option<Formula> {
    match (a, b) {
        (None, x) | (x, None) => x,
        (Some(x), Some(y)) => Some(Formula::or(x, y)),
    }
}

/// Gaussian elimination over the equations: self-loops are removed by
/// star-prefixing the remaining terms, then the solved unknown is
/// substituted away with chop distributed over the disjunctions, restoring
/// the canonical shape at every step. Unknowns with the fewest distinct
/// dependencies are eliminated first (ties by index); solutions for all
/// unknowns are returned.
pub fn solve_equations(sys: &EquationSystem) -> Result<Vec<Formula>, NfError> {
    let n = sys.equations.len();
    let mut eqs: Vec<Equation> = sys
        .equations
        .iter()
        .map(|e| Equation { closed: e.closed.clone(), terms: merge_terms(e.terms.clone()) })
        .collect();
    let mut active = vec![true; n];
    let mut order = Vec::with_capacity(n);
    for _ in 0..n {
        let u = (0..n)
            .filter(|&i| active[i])
            .min_by_key(|&i| (eqs[i].terms.len(), i))
            .expect("an active unknown remains");
        // remove the self-loop, if any
        let (self_terms, rest): (Vec<_>, Vec<_>) =
            eqs[u].terms.drain(..).partition(|(_, t)| *t == u);
        if !self_terms.is_empty() {
            let loop_coeff =
                Formula::or_all(self_terms.into_iter().map(|(c, _)| c));
            let star = Formula::chop_star(loop_coeff);
            eqs[u].closed = eqs[u].closed.take().map(|c| compose_closed(&star, &c));
            eqs[u].terms = rest
                .into_iter()
                .map(|(c, t)| (Formula::chop(star.clone(), c), t))
                .collect();
        } else {
            eqs[u].terms = rest;
        }
        // substitute into every remaining equation
        let solved = eqs[u].clone();
        for v in 0..n {
            if v == u || !active[v] {
                continue;
            }
            let (hits, keep): (Vec<_>, Vec<_>) =
                eqs[v].terms.drain(..).partition(|(_, t)| *t == u);
            eqs[v].terms = keep;
            for (c, _) in hits {
                if let Some(r) = &solved.closed {
                    eqs[v].closed = or_opt(eqs[v].closed.take(), Some(compose_closed(&c, r)));
                }
                for (s, t) in &solved.terms {
                    eqs[v].terms.push((Formula::chop(c.clone(), s.clone()), *t));
                }
            }
            eqs[v].terms = merge_terms(std::mem::take(&mut eqs[v].terms));
        }
        active[u] = false;
        order.push(u);
    }
    // resolve in reverse elimination order
    let mut sol: Vec<Option<Formula>> = vec![None; n];
    for &u in order.iter().rev() {
        let mut parts: Vec<Formula> = eqs[u].closed.clone().into_iter().collect();
        for (c, t) in &eqs[u].terms {
            let st = sol[*t].clone().ok_or(NfError::Internal("unresolved unknown"))?;
            if st != Formula::False {
                parts.push(compose_closed(c, &st));
            }
        }
        sol[u] = Some(Formula::or_all(parts));
    }
    Ok(sol.into_iter().map(|s| s.expect("all unknowns resolved")).collect())
}

// ---------------------------------------------------------------------------
// block normal form and grammar conformance

/// Rewrites a compilable formula as a disjunction of block chains: head
/// blocks homogeneous in `w` or `¬w`, joined by `;skip;` with the phase
/// flipping at every junction, with chop-star over phase-returning chains.
/// The result is verified exactly equivalent and grammar-conformant.
pub fn w_block_normal_form(
    f: &Formula,
    w: &Formula,
    vocab: &Vocabulary,
) -> Result<Formula, NfError> {
    let sys = w_closure_system(f, w, vocab)?;
    let eqs = equations_from_blocks(&sys);
    let sol = solve_equations(&eqs)?;
    let out = Formula::or_all([sol[sys.root_pos].clone(), sol[sys.root_neg].clone()]);
    let rebuilt = itl_to_dfa(&out, vocab)?;
    let source = itl_to_dfa(f, vocab)?;
    if !dfa_equivalent(&rebuilt, &source)? {
        return Err(NfError::VerificationFailed("block normal form"));
    }
    if !conforms_to_block_grammar(&out, &sys) {
        return Err(NfError::VerificationFailed("block grammar conformance"));
    }
    Ok(out)
}

fn head_phase(f: &Formula, registry: &[(Formula, bool)]) -> Option<bool> {
    registry.iter().find(|(h, _)| h == f).map(|&(_, ph)| ph)
}

fn prefix_typed(f: &Formula, a: bool, b: bool, registry: &[(Formula, bool)]) -> bool {
    match f {
        Formula::Chop(x, y) if **y == Formula::Skip => {
            head_phase(x, registry) == Some(a) && a == b
        }
        Formula::Or(x, y) => {
            prefix_typed(x, a, b, registry) && prefix_typed(y, a, b, registry)
        }
        Formula::Chop(x, y) => [true, false].iter().any(|&mid| {
            prefix_typed(x, a, mid, registry) && prefix_typed(y, !mid, b, registry)
        }),
        Formula::ChopStar(x) => b == !a && prefix_typed(x, a, b, registry),
        _ => false,
    }
}

fn closed_typed(f: &Formula, a: bool, b: bool, registry: &[(Formula, bool)]) -> bool {
    if let Some(ph) = head_phase(f, registry) {
        return a == ph && b == ph;
    }
    match f {
        Formula::Or(x, y) => {
            closed_typed(x, a, b, registry) && closed_typed(y, a, b, registry)
        }
        Formula::Chop(x, y) => [true, false].iter().any(|&mid| {
            prefix_typed(x, a, mid, registry) && closed_typed(y, !mid, b, registry)
        }),
        _ => false,
    }
}

/// Phase-typed grammar membership for block normal forms: every disjunct
/// must be a head block or a `;skip;`-chain of them with the phase flipping
/// at each junction, star restricted to phase-flipping chains. Accepts the
/// grammar up to chop associativity; `false` stands for the empty
/// disjunction.
pub fn conforms_to_block_grammar(f: &Formula, sys: &WBlockSystem) -> bool {
    fn parts(f: &Formula, out: &mut Vec<Formula>) {
        match f {
            Formula::Or(a, b) => {
                parts(a, out);
                parts(b, out);
            }
            other => out.push(other.clone()),
        }
    }
    if *f == Formula::False {
        return true;
    }
    let mut ps = Vec::new();
    parts(f, &mut ps);
    ps.iter().all(|p| {
        [(true, true), (true, false), (false, true), (false, false)]
            .iter()
            .any(|&(a, b)| closed_typed(p, a, b, &sys.registry))
    })
}

fn prefix_untyped(f: &Formula, registry: &[Formula]) -> bool {
    match f {
        Formula::Chop(x, y) if **y == Formula::Skip => registry.contains(x),
        Formula::Or(x, y) => prefix_untyped(x, registry) && prefix_untyped(y, registry),
        Formula::Chop(x, y) => prefix_untyped(x, registry) && prefix_untyped(y, registry),
        Formula::ChopStar(x) => prefix_untyped(x, registry),
        _ => false,
    }
}

fn closed_untyped(f: &Formula, registry: &[Formula]) -> bool {
    if registry.contains(f) {
        return true;
    }
    match f {
        Formula::Or(x, y) => closed_untyped(x, registry) && closed_untyped(y, registry),
        Formula::Chop(x, y) => prefix_untyped(x, registry) && closed_untyped(y, registry),
        _ => false,
    }
}

/// Untyped block-grammar membership: disjunctions of head blocks and of
/// prefix chains (head;skip compositions, with star) ending in a head block.
/// `false` stands for the empty disjunction.
pub fn conforms_to_prefix_grammar(f: &Formula, registry: &[Formula]) -> bool {
    if *f == Formula::False {
        return true;
    }
    match f {
        Formula::Or(a, b) => {
            conforms_to_prefix_grammar(a, registry) && conforms_to_prefix_grammar(b, registry)
        }
        other => closed_untyped(other, registry),
    }
}
