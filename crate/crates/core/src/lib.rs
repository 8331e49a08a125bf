//! Symbolic toolkit for a discrete-time interval temporal logic with
//! neighbourhood modalities, projection and chop-based normal forms.
//!
//! The crate is organised bottom-up:
//!
//! * [`syntax`] — formulas, parsing, printing, time reversal, separation.
//! * [`semantics`] — ground-truth evaluation on finite windows and lassos.
//! * [`automata`] — letters, NFA/DFA algebra, Buechi and parity automata.
//! * [`compile`] — formulas to automata and back.
//! * [`normal_forms`] — guarded, full-system-chop and w-block normal forms.
//! * [`projection`] — inverse projection, symbolically and as an automaton.
//! * [`omega`] — Fin formulas, reactivity forms, quantifier elimination,
//!   interpolation and definability.
//! * [`corpus`] — seeded random generators used by the test sweeps.

pub mod automata;
pub mod compile;
pub mod corpus;
pub mod normal_forms;
pub mod omega;
pub mod projection;
pub mod semantics;
pub mod syntax;
