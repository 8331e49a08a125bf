//! Inverse projection. `w proj_inv A` asks whether the reference interval is
//! the `w`-state subsequence of some model of `A`. This module provides an
//! exact automaton oracle for that language and an equation-based
//! elimination that rewrites the operator away, verified against the oracle.

use crate::automata::{
    canonical_min, determinize, dfa_equivalent, insertion_closure_nfa, Dfa,
};
use crate::compile::{itl_to_dfa, state_letters};
use crate::normal_forms::{
    compile_checked, conforms_to_prefix_grammar, solve_equations, w_closure_system, Equation,
    EquationSystem, NfError,
};
use crate::syntax::{Formula, Vocabulary};
use std::collections::{BTreeMap, BTreeSet};

/// Exact oracle: the language of `w`-letter words that embed into a model of
/// `a` by inserting non-`w` letters anywhere, including before the first and
/// after the last kept state. Always a subset of the `w`-letter words.
pub fn pi_inverse_dfa(w: &Formula, a: &Formula, vocab: &Vocabulary) -> Result<Dfa, NfError> {
    if !w.is_state_formula() {
        return Err(NfError::NotStateFormula(w.clone()));
    }
    let d = compile_checked(a, vocab)?;
    let w_letters = state_letters(w, vocab)?;
    Ok(canonical_min(&determinize(&insertion_closure_nfa(&d, &w_letters))?))
}

/// Rewrites `w proj_inv a` into an equivalent operator-free formula: build
/// the closure system of `a` relative to `w`, turn each kept-phase equation
/// into one over the projected unknowns — homogeneous parts and left blocks
/// survive unchanged, a transition contributes its block alone when the
/// continuation can consist of erased states only, and erased-phase unknowns
/// degenerate to disjunctions of their continuations — then solve. The
/// result is checked to conform to the prefix grammar over the system's
/// kept-phase blocks and to be language-equal to [`pi_inverse_dfa`].
pub fn pi_inverse_eliminate(
    w: &Formula,
    a: &Formula,
    vocab: &Vocabulary,
) -> Result<Formula, NfError> {
    let sys = w_closure_system(a, w, vocab)?;
    let pos: Vec<usize> = (0..sys.members.len()).filter(|&i| sys.members[i].phase).collect();
    let pos_index: BTreeMap<usize, usize> =
        pos.iter().enumerate().map(|(i, &m)| (m, i)).collect();
    let mut equations = Vec::with_capacity(pos.len());
    for &m in &pos {
        let member = &sys.members[m];
        let mut closed_parts: Vec<Formula> = member.homogeneous.iter().cloned().collect();
        let mut terms: Vec<(Formula, usize)> = Vec::new();
        for t in &member.transitions {
            let target = &sys.members[t.target];
            // the erased continuation may have no kept state at all, leaving
            // the block as the final part of the projection
            if target.homogeneous.is_some() {
                closed_parts.push(t.block.clone());
            }
            // otherwise the projection resumes at the continuation's first
            // kept block, one strict step after this one
            for t2 in &target.transitions {
                terms.push((
                    Formula::chop(t.block.clone(), Formula::Skip),
                    pos_index[&t2.target],
                ));
            }
        }
        equations.push(Equation {
            closed: if closed_parts.is_empty() {
                None
            } else {
                Some(Formula::or_all(closed_parts))
            },
            terms,
        });
    }
    let sol = solve_equations(&EquationSystem { vocab: vocab.clone(), equations })?;
    // the erased-phase root contributes the unknowns of its continuations
    let mut parts = vec![sol[pos_index[&sys.root_pos]].clone()];
    let mut seen = BTreeSet::from([sys.root_pos]);
    for t in &sys.members[sys.root_neg].transitions {
        if seen.insert(t.target) {
            parts.push(sol[pos_index[&t.target]].clone());
        }
    }
    let out = Formula::or_all(parts);
    let oracle = pi_inverse_dfa(w, a, vocab)?;
    let mine = itl_to_dfa(&out, vocab)?;
    if !dfa_equivalent(&mine, &oracle)? {
        return Err(NfError::VerificationFailed("inverse projection elimination"));
    }
    let registry: Vec<Formula> =
        sys.registry.iter().filter(|(_, ph)| *ph).map(|(h, _)| h.clone()).collect();
    if !conforms_to_prefix_grammar(&out, &registry) {
        return Err(NfError::VerificationFailed("inverse projection grammar"));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::automata::{dfa_combine, BoolOp};
    use crate::compile::dfa_to_formula;
    use crate::corpus;
    use crate::syntax::parse;

    fn vocab() -> Vocabulary {
        Vocabulary::new(["p", "q"]).unwrap()
    }

    fn lang_eq(a: &Formula, b: &Formula, v: &Vocabulary) -> bool {
        dfa_equivalent(&itl_to_dfa(a, v).unwrap(), &itl_to_dfa(b, v).unwrap()).unwrap()
    }

    #[test]
    fn oracle_examples() {
        let v = vocab();
        let w = parse("p", &v).unwrap();
        let all_kept = parse("box p", &v).unwrap();
        let d = pi_inverse_dfa(&w, &all_kept, &v).unwrap();
        assert!(dfa_equivalent(&d, &itl_to_dfa(&all_kept, &v).unwrap()).unwrap());

        let all_erased = parse("q & box ~p", &v).unwrap();
        assert!(pi_inverse_dfa(&w, &all_erased, &v).unwrap().is_empty_language());

        let two = parse("skip", &v).unwrap();
        let expected = parse("(p & empty) | (box p & skip)", &v).unwrap();
        let d = pi_inverse_dfa(&w, &two, &v).unwrap();
        assert!(dfa_equivalent(&d, &itl_to_dfa(&expected, &v).unwrap()).unwrap());
    }

    #[test]
    fn oracle_rejects_interval_selector() {
        let v = vocab();
        let w = parse("next p", &v).unwrap();
        assert!(matches!(
            pi_inverse_dfa(&w, &Formula::True, &v),
            Err(NfError::NotStateFormula(_))
        ));
    }

    #[test]
    fn oracle_satisfies_projection_laws() {
        let v = vocab();
        let mut rng = corpus::rng(29);
        for _ in 0..15 {
            let w = corpus::gen_state_condition(&mut rng, &v);
            let b = corpus::gen_introspective(&mut rng, &v, 3);
            let a = corpus::gen_introspective(&mut rng, &v, 3);
            let box_w = Formula::box_dia(w.clone());
            let box_not_w = Formula::box_dia(Formula::not(w.clone()));

            // projection of an all-kept formula is the formula itself
            let kept = Formula::and(b.clone(), box_w.clone());
            let d = pi_inverse_dfa(&w, &kept, &v).unwrap();
            assert!(dfa_equivalent(&d, &itl_to_dfa(&kept, &v).unwrap()).unwrap());

            // projection of an all-erased formula is empty
            let erased = Formula::and(b.clone(), box_not_w.clone());
            assert!(pi_inverse_dfa(&w, &erased, &v).unwrap().is_empty_language());

            // an erased block before a kept continuation drops out, if possible
            let lead = Formula::chop(
                erased.clone(),
                Formula::chop(Formula::Skip, Formula::and(a.clone(), w.clone())),
            );
            let d = pi_inverse_dfa(&w, &lead, &v).unwrap();
            if itl_to_dfa(&erased, &v).unwrap().is_empty_language() {
                assert!(d.is_empty_language());
            } else {
                let tail =
                    pi_inverse_dfa(&w, &Formula::and(a.clone(), w.clone()), &v).unwrap();
                assert!(dfa_equivalent(&d, &tail).unwrap());
            }

            // projection distributes over disjunction
            let a2 = corpus::gen_introspective(&mut rng, &v, 3);
            let union = pi_inverse_dfa(&w, &Formula::or(a.clone(), a2.clone()), &v).unwrap();
            let d1 = pi_inverse_dfa(&w, &a, &v).unwrap();
            let d2 = pi_inverse_dfa(&w, &a2, &v).unwrap();
            let merged = dfa_combine(&d1, &d2, BoolOp::Or).unwrap();
            assert!(dfa_equivalent(&union, &merged).unwrap());
        }
    }

    #[test]
    fn eliminate_examples() {
        let v = vocab();
        let w = parse("p", &v).unwrap();

        let out = pi_inverse_eliminate(&w, &parse("q & box ~p", &v).unwrap(), &v).unwrap();
        assert!(lang_eq(&out, &Formula::False, &v));

        let out = pi_inverse_eliminate(&w, &parse("skip", &v).unwrap(), &v).unwrap();
        assert!(lang_eq(&out, &parse("(p & empty) | (box p & skip)", &v).unwrap(), &v));

        let kept = parse("(q ; box q) & box p", &v).unwrap();
        let out = pi_inverse_eliminate(&w, &kept, &v).unwrap();
        assert!(lang_eq(&out, &kept, &v));
    }

    #[test]
    fn eliminate_keeps_trailing_erasure() {
        // models ending in erased states must still project to their kept part
        let v = vocab();
        let w = parse("p", &v).unwrap();
        let a = parse("p & skip", &v).unwrap();
        let out = pi_inverse_eliminate(&w, &a, &v).unwrap();
        let expected = parse("(p & empty) | (box p & skip)", &v).unwrap();
        assert!(lang_eq(&out, &expected, &v));
    }

    #[test]
    fn eliminate_agrees_with_oracle_sweep() {
        let v = vocab();
        let mut rng = corpus::rng(31);
        for i in 0..40 {
            let w = corpus::gen_state_condition(&mut rng, &v);
            let a = corpus::gen_introspective(&mut rng, &v, 4);
            // agreement with the oracle is enforced internally
            let out = pi_inverse_eliminate(&w, &a, &v)
                .unwrap_or_else(|e| panic!("case {i}: {w} / {a}: {e}"));
            assert!(out.is_introspective());
        }
    }

    #[test]
    fn relativized_round_trips() {
        let v = vocab();
        let mut rng = corpus::rng(37);
        for _ in 0..15 {
            let w = corpus::gen_state_condition(&mut rng, &v);
            let a = corpus::gen_introspective(&mut rng, &v, 3);
            // projecting and then asking for an expansion recovers exactly
            // the all-kept models
            let back =
                pi_inverse_dfa(&w, &Formula::proj(w.clone(), a.clone()), &v).unwrap();
            let relativized =
                itl_to_dfa(&Formula::and(a.clone(), Formula::box_dia(w.clone())), &v).unwrap();
            assert!(dfa_equivalent(&back, &relativized).unwrap());

            // a model with at least one kept state projects to a window that
            // admits an expansion
            let lhs =
                itl_to_dfa(&Formula::and(a.clone(), Formula::diamond(w.clone())), &v).unwrap();
            let oracle = pi_inverse_dfa(&w, &a, &v).unwrap();
            let rhs = itl_to_dfa(
                &Formula::proj(w.clone(), dfa_to_formula(&oracle)),
                &v,
            )
            .unwrap();
            let gap = dfa_combine(&lhs, &rhs, BoolOp::Diff).unwrap();
            assert!(gap.is_empty_language(), "w = {w}, a = {a}");
        }
    }

    #[test]
    fn unrelativized_composition_fails() {
        // the converse of the second round trip is not valid: expanding and
        // projecting keeps no information about the erased states
        let v = vocab();
        let w = parse("p", &v).unwrap();
        let a = parse("box p", &v).unwrap();
        let oracle = pi_inverse_dfa(&w, &a, &v).unwrap();
        let composed =
            itl_to_dfa(&Formula::proj(w.clone(), dfa_to_formula(&oracle)), &v).unwrap();
        // window [{p}, {}] as letters over vocabulary {p, q}
        let word = [1u32, 0u32];
        assert!(composed.accepts(&word));
        assert!(!itl_to_dfa(&a, &v).unwrap().accepts(&word));
    }
}
