//! Seeded random generators for formulas, automata and lassos. The test
//! suites and the acceptance harness draw their inputs from here so that
//! every run sees the same corpus.

use crate::automata::{canonical_min, letter_count, Dfa, Lasso, Letter, Nba, StateId};
use crate::syntax::{Formula, Vocabulary};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

fn var(rng: &mut StdRng, vocab: &Vocabulary) -> Formula {
    let names = vocab.names();
    Formula::var(&names[rng.gen_range(0..names.len())])
}

/// Random propositional formula over the vocabulary.
pub fn gen_state_formula(rng: &mut StdRng, vocab: &Vocabulary, depth: usize) -> Formula {
    if depth == 0 || rng.gen_bool(0.3) {
        return match rng.gen_range(0..8) {
            0 => Formula::True,
            1 => Formula::False,
            _ => var(rng, vocab),
        };
    }
    match rng.gen_range(0..4) {
        0 => Formula::not(gen_state_formula(rng, vocab, depth - 1)),
        1 => Formula::and(
            gen_state_formula(rng, vocab, depth - 1),
            gen_state_formula(rng, vocab, depth - 1),
        ),
        2 => Formula::or(
            gen_state_formula(rng, vocab, depth - 1),
            gen_state_formula(rng, vocab, depth - 1),
        ),
        _ => Formula::imp(
            gen_state_formula(rng, vocab, depth - 1),
            gen_state_formula(rng, vocab, depth - 1),
        ),
    }
}

/// Random satisfiable state formula: a variable, a negated variable, or a
/// disjunction of such literals.
pub fn gen_state_condition(rng: &mut StdRng, vocab: &Vocabulary) -> Formula {
    let lit = |rng: &mut StdRng, vocab: &Vocabulary| {
        let v = var(rng, vocab);
        if rng.gen_bool(0.5) {
            v
        } else {
            Formula::not(v)
        }
    };
    let first = lit(rng, vocab);
    if rng.gen_bool(0.3) {
        Formula::or(first, lit(rng, vocab))
    } else {
        first
    }
}

/// Random introspective formula (no neighbourhood operators, quantifiers or
/// projections), built from the point, length-two and propositional atoms.
pub fn gen_introspective(rng: &mut StdRng, vocab: &Vocabulary, depth: usize) -> Formula {
    if depth == 0 || rng.gen_bool(0.2) {
        return match rng.gen_range(0..6) {
            0 => Formula::Empty,
            1 => Formula::Skip,
            2 => Formula::True,
            _ => var(rng, vocab),
        };
    }
    match rng.gen_range(0..12) {
        0 => Formula::not(gen_introspective(rng, vocab, depth - 1)),
        1 => Formula::and(
            gen_introspective(rng, vocab, depth - 1),
            gen_introspective(rng, vocab, depth - 1),
        ),
        2 => Formula::or(
            gen_introspective(rng, vocab, depth - 1),
            gen_introspective(rng, vocab, depth - 1),
        ),
        3 => Formula::imp(
            gen_introspective(rng, vocab, depth - 1),
            gen_introspective(rng, vocab, depth - 1),
        ),
        4 => Formula::next(gen_introspective(rng, vocab, depth - 1)),
        5 => Formula::prev(gen_introspective(rng, vocab, depth - 1)),
        6 => Formula::chop(
            gen_introspective(rng, vocab, depth - 1),
            gen_introspective(rng, vocab, depth - 1),
        ),
        7 => Formula::chop_star(gen_introspective(rng, vocab, depth - 1)),
        8 => Formula::diamond(gen_introspective(rng, vocab, depth - 1)),
        9 => Formula::box_dia(gen_state_formula(rng, vocab, depth.min(2))),
        10 => Formula::di(gen_introspective(rng, vocab, depth - 1)),
        _ => Formula::fin(gen_introspective(rng, vocab, depth - 1)),
    }
}

/// Random future formula: introspective material with right-neighbourhood
/// operators layered in.
pub fn gen_future(rng: &mut StdRng, vocab: &Vocabulary, depth: usize) -> Formula {
    if depth == 0 || rng.gen_bool(0.25) {
        return gen_introspective(rng, vocab, depth.min(2));
    }
    match rng.gen_range(0..6) {
        0 => Formula::diamond_r(gen_future(rng, vocab, depth - 1)),
        1 => Formula::box_r(gen_future(rng, vocab, depth - 1)),
        2 => Formula::not(gen_future(rng, vocab, depth - 1)),
        3 => Formula::and(
            gen_future(rng, vocab, depth - 1),
            gen_future(rng, vocab, depth - 1),
        ),
        4 => Formula::or(
            gen_future(rng, vocab, depth - 1),
            gen_future(rng, vocab, depth - 1),
        ),
        _ => gen_introspective(rng, vocab, depth),
    }
}

/// Random Boolean combination of strictly past, introspective and future
/// formulas, as accepted by the separation splitter.
pub fn gen_separated(rng: &mut StdRng, vocab: &Vocabulary, depth: usize) -> Formula {
    let atom = |rng: &mut StdRng| -> Formula {
        let strict_future = |rng: &mut StdRng| {
            Formula::diamond_r(Formula::chop(Formula::Skip, gen_future(rng, vocab, 2)))
        };
        match rng.gen_range(0..5) {
            0 | 1 => gen_introspective(rng, vocab, 2),
            2 => strict_future(rng),
            3 => Formula::not(strict_future(rng)),
            _ => strict_future(rng)
                .time_reverse()
                .expect("future formulas reverse cleanly"),
        }
    };
    if depth == 0 || rng.gen_bool(0.3) {
        return atom(rng);
    }
    match rng.gen_range(0..3) {
        0 => Formula::not(gen_separated(rng, vocab, depth - 1)),
        1 => Formula::and(
            gen_separated(rng, vocab, depth - 1),
            gen_separated(rng, vocab, depth - 1),
        ),
        _ => Formula::or(
            gen_separated(rng, vocab, depth - 1),
            gen_separated(rng, vocab, depth - 1),
        ),
    }
}

/// Random minimal automaton with at most `max_states` states before
/// minimization.
pub fn gen_dfa(rng: &mut StdRng, vocab: &Vocabulary, max_states: usize) -> Dfa {
    let k = letter_count(vocab);
    let n = rng.gen_range(1..=max_states.max(1));
    let trans: Vec<Vec<StateId>> =
        (0..n).map(|_| (0..k).map(|_| rng.gen_range(0..n)).collect()).collect();
    let accepting = (0..n).filter(|_| rng.gen_bool(0.4)).collect();
    canonical_min(&Dfa { vocab: vocab.clone(), trans, initial: 0, accepting })
}

/// Random Buchi automaton with at most `max_states` states; edge density is
/// tuned so that both empty and universal languages stay rare.
pub fn gen_nba(rng: &mut StdRng, vocab: &Vocabulary, max_states: usize) -> Nba {
    let k = letter_count(vocab);
    let n = rng.gen_range(1..=max_states.max(1));
    let mut nba = Nba {
        vocab: vocab.clone(),
        n_states: n,
        initial: std::iter::once(rng.gen_range(0..n)).collect(),
        accepting: (0..n).filter(|_| rng.gen_bool(0.5)).collect(),
        trans: std::collections::BTreeMap::new(),
    };
    if nba.accepting.is_empty() {
        nba.accepting.insert(rng.gen_range(0..n));
    }
    for q in 0..n {
        for s in 0..k as Letter {
            for t in 0..n {
                if rng.gen_bool(0.35) {
                    nba.add_edge(q, s, t);
                }
            }
        }
    }
    nba
}

/// Random ultimately periodic word with the given bounds (letters drawn from
/// the full alphabet; the cycle is non-empty).
pub fn gen_lasso(
    rng: &mut StdRng,
    vocab: &Vocabulary,
    max_stem: usize,
    max_cycle: usize,
) -> Lasso {
    let k = letter_count(vocab) as Letter;
    let stem_len = rng.gen_range(0..=max_stem);
    let cycle_len = rng.gen_range(1..=max_cycle.max(1));
    Lasso {
        stem: (0..stem_len).map(|_| rng.gen_range(0..k)).collect(),
        cycle: (0..cycle_len).map(|_| rng.gen_range(0..k)).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compile::itl_to_dfa;

    #[test]
    fn generators_are_deterministic() {
        let v = Vocabulary::new(["p", "q"]).unwrap();
        let mut r1 = rng(7);
        let mut r2 = rng(7);
        for _ in 0..20 {
            assert_eq!(
                gen_introspective(&mut r1, &v, 4),
                gen_introspective(&mut r2, &v, 4)
            );
        }
    }

    #[test]
    fn introspective_samples_compile() {
        let v = Vocabulary::new(["p", "q"]).unwrap();
        let mut r = rng(13);
        for _ in 0..50 {
            let f = gen_introspective(&mut r, &v, 4);
            assert!(f.is_introspective(), "{f}");
            itl_to_dfa(&f, &v).unwrap();
        }
    }

    #[test]
    fn future_samples_are_future() {
        let v = Vocabulary::new(["p", "q"]).unwrap();
        let mut r = rng(17);
        for _ in 0..50 {
            let f = gen_future(&mut r, &v, 3);
            assert!(f.is_future(), "{f}");
        }
    }

    #[test]
    fn dfa_samples_are_minimal() {
        let v = Vocabulary::new(["p"]).unwrap();
        let mut r = rng(23);
        for _ in 0..30 {
            let d = gen_dfa(&mut r, &v, 5);
            let again = canonical_min(&d);
            assert_eq!(d, again);
        }
    }
}
