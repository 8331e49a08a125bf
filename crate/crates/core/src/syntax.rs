//! Formula syntax: abstract syntax, parsing, printing, variable bookkeeping,
//! time reversal and the separated disjunctive normal form.
//!
//! The basic connectives are `false`, variables, implication, `next`, chop,
//! chop-star and the two neighbourhood modalities `<l>`/`<r>`. Everything
//! else is kept in the tree as a derived kind and expanded by [`Formula::desugar`].

use std::collections::BTreeSet;
use std::fmt;

/// An ordered list of propositional variable names. Letters of the alphabet
/// are subsets of this list; the order is fixed for the lifetime of a session.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Vocabulary {
    names: Vec<String>,
}

/// Words reserved by the concrete grammar; these can never name a variable.
pub const RESERVED: &[&str] = &[
    "false", "true", "empty", "skip", "next", "prev", "dia", "di", "box", "bi", "fin", "box_a",
    "dia_a", "exists", "proj", "projinv",
];

fn valid_ident(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_lowercase() => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_lowercase() || c.is_ascii_digit())
}

impl Vocabulary {
    /// Builds a vocabulary, rejecting duplicates, reserved words and
    /// non-identifier names.
    pub fn new<I, S>(names: I) -> Result<Vocabulary, VocabError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut out: Vec<String> = Vec::new();
        for n in names {
            let n = n.into();
            if !valid_ident(&n) {
                return Err(VocabError::BadName(n));
            }
            if RESERVED.contains(&n.as_str()) {
                return Err(VocabError::Reserved(n));
            }
            if out.contains(&n) {
                return Err(VocabError::Duplicate(n));
            }
            out.push(n);
        }
        Ok(Vocabulary { names: out })
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.index_of(name).is_some()
    }

    /// Extends the vocabulary with a fresh variable derived from `base`.
    /// Used internally when a renamed copy of a variable is required.
    pub fn with_fresh(&self, base: &str) -> (Vocabulary, String) {
        let mut candidate = format!("{base}0");
        let mut i = 0u32;
        while self.contains(&candidate) {
            i += 1;
            candidate = format!("{base}{i}");
        }
        let mut names = self.names.clone();
        names.push(candidate.clone());
        (Vocabulary { names }, candidate)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum VocabError {
    BadName(String),
    Reserved(String),
    Duplicate(String),
}

impl fmt::Display for VocabError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VocabError::BadName(n) => write!(f, "invalid variable name `{n}`"),
            VocabError::Reserved(n) => write!(f, "`{n}` is a reserved word"),
            VocabError::Duplicate(n) => write!(f, "duplicate variable `{n}`"),
        }
    }
}

impl std::error::Error for VocabError {}

/// Interval temporal logic formulas with neighbourhood modalities.
///
/// `False`, `Var`, `Imp`, `Next`, `Chop`, `ChopStar`, `DiamondL` and
/// `DiamondR` are the basic kinds; the remaining connectives are derived and
/// are expanded by [`Formula::desugar`]. `Exists`, `Proj` and `ProjInv` are
/// accepted on input and handled by dedicated operations.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Formula {
    // basic
    False,
    Var(String),
    Imp(Box<Formula>, Box<Formula>),
    Next(Box<Formula>),
    Chop(Box<Formula>, Box<Formula>),
    ChopStar(Box<Formula>),
    /// `<l> A`: A holds on some interval ending at the left reference point.
    DiamondL(Box<Formula>),
    /// `<r> A`: A holds on some interval starting at the right reference point.
    DiamondR(Box<Formula>),
    // derived
    True,
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Iff(Box<Formula>, Box<Formula>),
    /// One-state interval.
    Empty,
    /// Two-state interval.
    Skip,
    /// `prev A` is `A ; skip`.
    Prev(Box<Formula>),
    /// `dia A` is `true ; A`: A holds on some suffix subinterval.
    Diamond(Box<Formula>),
    /// `di A` is `A ; true`: A holds on some prefix subinterval.
    Di(Box<Formula>),
    /// `box A`: A holds on every suffix subinterval.
    BoxDia(Box<Formula>),
    /// `bi A`: A holds on every prefix subinterval.
    Bi(Box<Formula>),
    BoxL(Box<Formula>),
    BoxR(Box<Formula>),
    /// `fin A`: A holds at the one-state suffix interval.
    Fin(Box<Formula>),
    /// `dia_a A`: A holds on some interval anywhere.
    DiamondA(Box<Formula>),
    /// `box_a A`: A holds on every interval anywhere.
    BoxA(Box<Formula>),
    // input-only
    Exists(String, Box<Formula>),
    /// `proj(w, A)`: A holds on the subsequence of states satisfying `w`.
    Proj(Box<Formula>, Box<Formula>),
    /// `projinv(w, A)`: some expansion by non-`w` states satisfies A.
    ProjInv(Box<Formula>, Box<Formula>),
}

use Formula::*;

impl Formula {
    pub fn var(name: impl Into<String>) -> Formula {
        Var(name.into())
    }

    pub fn imp(a: Formula, b: Formula) -> Formula {
        Imp(Box::new(a), Box::new(b))
    }

    pub fn next(a: Formula) -> Formula {
        Next(Box::new(a))
    }

    pub fn chop(a: Formula, b: Formula) -> Formula {
        Chop(Box::new(a), Box::new(b))
    }

    pub fn chop_star(a: Formula) -> Formula {
        ChopStar(Box::new(a))
    }

    pub fn diamond_l(a: Formula) -> Formula {
        DiamondL(Box::new(a))
    }

    pub fn diamond_r(a: Formula) -> Formula {
        DiamondR(Box::new(a))
    }

    pub fn not(a: Formula) -> Formula {
        Not(Box::new(a))
    }

    pub fn and(a: Formula, b: Formula) -> Formula {
        And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Formula, b: Formula) -> Formula {
        Or(Box::new(a), Box::new(b))
    }

    pub fn iff(a: Formula, b: Formula) -> Formula {
        Iff(Box::new(a), Box::new(b))
    }

    pub fn prev(a: Formula) -> Formula {
        Prev(Box::new(a))
    }

    pub fn diamond(a: Formula) -> Formula {
        Diamond(Box::new(a))
    }

    pub fn di(a: Formula) -> Formula {
        Di(Box::new(a))
    }

    pub fn box_dia(a: Formula) -> Formula {
        BoxDia(Box::new(a))
    }

    pub fn bi(a: Formula) -> Formula {
        Bi(Box::new(a))
    }

    pub fn box_l(a: Formula) -> Formula {
        BoxL(Box::new(a))
    }

    pub fn box_r(a: Formula) -> Formula {
        BoxR(Box::new(a))
    }

    pub fn fin(a: Formula) -> Formula {
        Fin(Box::new(a))
    }

    pub fn exists(p: impl Into<String>, a: Formula) -> Formula {
        Exists(p.into(), Box::new(a))
    }

    pub fn proj(w: Formula, a: Formula) -> Formula {
        Proj(Box::new(w), Box::new(a))
    }

    pub fn proj_inv(w: Formula, a: Formula) -> Formula {
        ProjInv(Box::new(w), Box::new(a))
    }

    /// Disjunction of a sequence with constant folding; `false` for empty input.
    pub fn or_all<I: IntoIterator<Item = Formula>>(items: I) -> Formula {
        let mut out: Option<Formula> = None;
        for x in items {
            match x {
                False => {}
                True => return True,
                x => {
                    out = Some(match out {
                        None => x,
                        Some(acc) => Formula::or(acc, x),
                    })
                }
            }
        }
        out.unwrap_or(False)
    }

    /// Conjunction of a sequence with constant folding; `true` for empty input.
    pub fn and_all<I: IntoIterator<Item = Formula>>(items: I) -> Formula {
        let mut out: Option<Formula> = None;
        for x in items {
            match x {
                True => {}
                False => return False,
                x => {
                    out = Some(match out {
                        None => x,
                        Some(acc) => Formula::and(acc, x),
                    })
                }
            }
        }
        out.unwrap_or(True)
    }

    /// Expands every derived connective, leaving only the basic kinds plus
    /// `Exists`/`Proj`/`ProjInv` with desugared operands.
    pub fn desugar(&self) -> Formula {
        match self {
            False => False,
            Var(p) => Var(p.clone()),
            Imp(a, b) => Formula::imp(a.desugar(), b.desugar()),
            Next(a) => Formula::next(a.desugar()),
            Chop(a, b) => Formula::chop(a.desugar(), b.desugar()),
            ChopStar(a) => Formula::chop_star(a.desugar()),
            DiamondL(a) => Formula::diamond_l(a.desugar()),
            DiamondR(a) => Formula::diamond_r(a.desugar()),
            True => Formula::imp(False, False),
            Not(a) => Formula::imp(a.desugar(), False),
            And(a, b) => {
                // ~(a -> ~b)
                let inner = Formula::imp(a.desugar(), Formula::imp(b.desugar(), False));
                Formula::imp(inner, False)
            }
            Or(a, b) => Formula::imp(Formula::imp(a.desugar(), False), b.desugar()),
            Iff(a, b) => Formula::and(
                Formula::imp((**a).clone(), (**b).clone()),
                Formula::imp((**b).clone(), (**a).clone()),
            )
            .desugar(),
            Empty => Formula::imp(Formula::next(True.desugar()), False),
            Skip => Formula::next(Empty.desugar()),
            Prev(a) => Formula::chop(a.desugar(), Skip.desugar()),
            Diamond(a) => Formula::chop(True.desugar(), a.desugar()),
            Di(a) => Formula::chop(a.desugar(), True.desugar()),
            BoxDia(a) => Formula::not(Formula::diamond(Formula::not((**a).clone()))).desugar(),
            Bi(a) => Formula::not(Formula::di(Formula::not((**a).clone()))).desugar(),
            BoxL(a) => Formula::not(Formula::diamond_l(Formula::not((**a).clone()))).desugar(),
            BoxR(a) => Formula::not(Formula::diamond_r(Formula::not((**a).clone()))).desugar(),
            Fin(a) => Formula::box_dia(Formula::imp(Empty, (**a).clone())).desugar(),
            DiamondA(a) => Formula::diamond_r(Formula::diamond_r(Formula::diamond_l(
                Formula::diamond_l(a.desugar()),
            ))),
            BoxA(a) => Formula::not(Formula::diamond_a(Formula::not((**a).clone()))).desugar(),
            Exists(p, a) => Exists(p.clone(), Box::new(a.desugar())),
            Proj(w, a) => Formula::proj(w.desugar(), a.desugar()),
            ProjInv(w, a) => Formula::proj_inv(w.desugar(), a.desugar()),
        }
    }

    fn diamond_a(a: Formula) -> Formula {
        DiamondA(Box::new(a))
    }

    /// Immediate subformulas.
    pub fn children(&self) -> Vec<&Formula> {
        match self {
            False | True | Empty | Skip | Var(_) => vec![],
            Next(a) | ChopStar(a) | DiamondL(a) | DiamondR(a) | Not(a) | Prev(a) | Diamond(a)
            | Di(a) | BoxDia(a) | Bi(a) | BoxL(a) | BoxR(a) | Fin(a) | DiamondA(a) | BoxA(a) => {
                vec![a]
            }
            Imp(a, b) | Chop(a, b) | And(a, b) | Or(a, b) | Iff(a, b) => vec![a, b],
            Exists(_, a) => vec![a],
            Proj(w, a) | ProjInv(w, a) => vec![w, a],
        }
    }

    /// Free and bound variables of the formula.
    pub fn vars(&self) -> VarSets {
        let mut out = VarSets::default();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut VarSets) {
        match self {
            Var(p) => {
                out.free.insert(p.clone());
            }
            Exists(p, a) => {
                out.bound.insert(p.clone());
                let mut inner = VarSets::default();
                a.collect_vars(&mut inner);
                inner.free.remove(p);
                out.free.extend(inner.free);
                out.bound.extend(inner.bound);
            }
            _ => {
                for c in self.children() {
                    c.collect_vars(out);
                }
            }
        }
    }

    /// All free variables, as a sorted set.
    pub fn free_vars(&self) -> BTreeSet<String> {
        self.vars().free
    }

    /// True when the formula is a Boolean combination of variables and
    /// constants: no temporal connective at all.
    pub fn is_state_formula(&self) -> bool {
        match self {
            False | True | Var(_) => true,
            Imp(a, b) | And(a, b) | Or(a, b) | Iff(a, b) => {
                a.is_state_formula() && b.is_state_formula()
            }
            Not(a) => a.is_state_formula(),
            _ => false,
        }
    }

    /// True when the formula only looks inside its reference interval:
    /// no neighbourhood modality, quantifier or projection anywhere.
    pub fn is_introspective(&self) -> bool {
        match self {
            DiamondL(_) | DiamondR(_) | BoxL(_) | BoxR(_) | DiamondA(_) | BoxA(_)
            | Exists(..) | Proj(..) | ProjInv(..) => false,
            _ => self.children().iter().all(|c| c.is_introspective()),
        }
    }

    /// True for future formulas: Boolean combinations of introspective
    /// formulas and `<r>`-formulas whose operands are future again.
    pub fn is_future(&self) -> bool {
        if self.is_introspective() {
            return true;
        }
        match self {
            Not(a) => a.is_future(),
            And(a, b) | Or(a, b) | Imp(a, b) | Iff(a, b) => a.is_future() && b.is_future(),
            DiamondR(a) | BoxR(a) => a.is_future(),
            _ => false,
        }
    }

    /// Mirror image of [`Formula::is_future`].
    pub fn is_past(&self) -> bool {
        if self.is_introspective() {
            return true;
        }
        match self {
            Not(a) => a.is_past(),
            And(a, b) | Or(a, b) | Imp(a, b) | Iff(a, b) => a.is_past() && b.is_past(),
            DiamondL(a) | BoxL(a) => a.is_past(),
            _ => false,
        }
    }

    /// Renames free occurrences of `p` to `q`. Fails when `q` is captured by
    /// an enclosing quantifier of an occurrence of `p`.
    pub fn substitute_var(&self, p: &str, q: &str) -> Result<Formula, SubstError> {
        self.subst_rec(p, q, false)
    }

    fn subst_rec(&self, p: &str, q: &str, q_bound_here: bool) -> Result<Formula, SubstError> {
        match self {
            Var(name) if name == p => {
                if q_bound_here {
                    return Err(SubstError::Capture {
                        var: p.to_string(),
                        replacement: q.to_string(),
                    });
                }
                Ok(Var(q.to_string()))
            }
            Exists(name, a) => {
                if name == p {
                    // occurrences below are bound; nothing to substitute
                    Ok(self.clone())
                } else {
                    let inner = a.subst_rec(p, q, q_bound_here || name == q)?;
                    Ok(Exists(name.clone(), Box::new(inner)))
                }
            }
            _ => self.map_children(|c| c.subst_rec(p, q, q_bound_here)),
        }
    }

    fn map_children<F>(&self, mut f: F) -> Result<Formula, SubstError>
    where
        F: FnMut(&Formula) -> Result<Formula, SubstError>,
    {
        Ok(match self {
            False => False,
            True => True,
            Empty => Empty,
            Skip => Skip,
            Var(p) => Var(p.clone()),
            Imp(a, b) => Formula::imp(f(a)?, f(b)?),
            Next(a) => Formula::next(f(a)?),
            Chop(a, b) => Formula::chop(f(a)?, f(b)?),
            ChopStar(a) => Formula::chop_star(f(a)?),
            DiamondL(a) => Formula::diamond_l(f(a)?),
            DiamondR(a) => Formula::diamond_r(f(a)?),
            Not(a) => Formula::not(f(a)?),
            And(a, b) => Formula::and(f(a)?, f(b)?),
            Or(a, b) => Formula::or(f(a)?, f(b)?),
            Iff(a, b) => Formula::iff(f(a)?, f(b)?),
            Prev(a) => Formula::prev(f(a)?),
            Diamond(a) => Formula::diamond(f(a)?),
            Di(a) => Formula::di(f(a)?),
            BoxDia(a) => Formula::box_dia(f(a)?),
            Bi(a) => Formula::bi(f(a)?),
            BoxL(a) => Formula::box_l(f(a)?),
            BoxR(a) => Formula::box_r(f(a)?),
            Fin(a) => Formula::fin(f(a)?),
            DiamondA(a) => DiamondA(Box::new(f(a)?)),
            BoxA(a) => BoxA(Box::new(f(a)?)),
            Exists(p, a) => Exists(p.clone(), Box::new(f(a)?)),
            Proj(w, a) => Formula::proj(f(w)?, f(a)?),
            ProjInv(w, a) => Formula::proj_inv(f(w)?, f(a)?),
        })
    }

    /// Time reversal: swaps `next`/`prev` and `<l>`/`<r>`, exchanges chop
    /// operands and sends a variable `p` to `fin p`, so that the result holds
    /// on an interval exactly when the original holds on the reversed one.
    pub fn time_reverse(&self) -> Result<Formula, ReverseError> {
        Ok(match self {
            False => False,
            True => True,
            Empty => Empty,
            Skip => Skip,
            Var(p) => Formula::fin(Var(p.clone())),
            Imp(a, b) => Formula::imp(a.time_reverse()?, b.time_reverse()?),
            Not(a) => Formula::not(a.time_reverse()?),
            And(a, b) => Formula::and(a.time_reverse()?, b.time_reverse()?),
            Or(a, b) => Formula::or(a.time_reverse()?, b.time_reverse()?),
            Iff(a, b) => Formula::iff(a.time_reverse()?, b.time_reverse()?),
            Next(a) => Formula::prev(a.time_reverse()?),
            Prev(a) => Formula::next(a.time_reverse()?),
            Chop(a, b) => Formula::chop(b.time_reverse()?, a.time_reverse()?),
            ChopStar(a) => Formula::chop_star(a.time_reverse()?),
            DiamondL(a) => Formula::diamond_r(a.time_reverse()?),
            DiamondR(a) => Formula::diamond_l(a.time_reverse()?),
            BoxL(a) => Formula::box_r(a.time_reverse()?),
            BoxR(a) => Formula::box_l(a.time_reverse()?),
            Diamond(a) => Formula::di(a.time_reverse()?),
            Di(a) => Formula::diamond(a.time_reverse()?),
            BoxDia(a) => Formula::bi(a.time_reverse()?),
            Bi(a) => Formula::box_dia(a.time_reverse()?),
            // fin A pins the last state; reversed it pins the first one.
            Fin(a) => Formula::bi(Formula::imp(Empty, a.time_reverse()?)),
            // the anywhere modalities are invariant under reversal
            DiamondA(a) => DiamondA(Box::new(a.time_reverse()?)),
            BoxA(a) => BoxA(Box::new(a.time_reverse()?)),
            Exists(..) | Proj(..) | ProjInv(..) => {
                return Err(ReverseError::Unsupported(self.clone()))
            }
        })
    }

    /// Number of AST nodes; used by size guards and reports.
    pub fn size(&self) -> usize {
        1 + self.children().iter().map(|c| c.size()).sum::<usize>()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct VarSets {
    pub free: BTreeSet<String>,
    pub bound: BTreeSet<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SubstError {
    Capture { var: String, replacement: String },
}

impl fmt::Display for SubstError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SubstError::Capture { var, replacement } => {
                write!(f, "substituting `{replacement}` for `{var}` would be captured")
            }
        }
    }
}

impl std::error::Error for SubstError {}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ReverseError {
    Unsupported(Formula),
}

impl fmt::Display for ReverseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ReverseError::Unsupported(a) => {
                write!(f, "time reversal is not defined for `{}`", render(a))
            }
        }
    }
}

impl std::error::Error for ReverseError {}

// ---------------------------------------------------------------------------
// printing

fn prec(f: &Formula) -> u8 {
    match f {
        False | True | Empty | Skip | Var(_) | Proj(..) | ProjInv(..) => 100,
        ChopStar(_) => 90,
        Next(_) | Prev(_) | Not(_) | DiamondL(_) | DiamondR(_) | BoxL(_) | BoxR(_) | Diamond(_)
        | Di(_) | BoxDia(_) | Bi(_) | Fin(_) | DiamondA(_) | BoxA(_) => 80,
        Chop(..) => 70,
        And(..) => 60,
        Or(..) => 50,
        Imp(..) => 40,
        Iff(..) => 30,
        Exists(..) => 10,
    }
}

fn render_at(f: &Formula, min: u8, out: &mut String) {
    let p = prec(f);
    let parens = p < min;
    if parens {
        out.push('(');
    }
    match f {
        False => out.push_str("false"),
        True => out.push_str("true"),
        Empty => out.push_str("empty"),
        Skip => out.push_str("skip"),
        Var(name) => out.push_str(name),
        Not(a) => {
            out.push('~');
            render_at(a, 80, out);
        }
        Next(a) => unary("next", a, out),
        Prev(a) => unary("prev", a, out),
        DiamondL(a) => unary("<l>", a, out),
        DiamondR(a) => unary("<r>", a, out),
        BoxL(a) => unary("[l]", a, out),
        BoxR(a) => unary("[r]", a, out),
        Diamond(a) => unary("dia", a, out),
        Di(a) => unary("di", a, out),
        BoxDia(a) => unary("box", a, out),
        Bi(a) => unary("bi", a, out),
        Fin(a) => unary("fin", a, out),
        DiamondA(a) => unary("dia_a", a, out),
        BoxA(a) => unary("box_a", a, out),
        ChopStar(a) => {
            render_at(a, 91, out);
            out.push('*');
        }
        Chop(a, b) => {
            render_at(a, 71, out);
            out.push_str(" ; ");
            render_at(b, 70, out);
        }
        And(a, b) => {
            render_at(a, 61, out);
            out.push_str(" & ");
            render_at(b, 60, out);
        }
        Or(a, b) => {
            render_at(a, 51, out);
            out.push_str(" | ");
            render_at(b, 50, out);
        }
        Imp(a, b) => {
            render_at(a, 41, out);
            out.push_str(" -> ");
            render_at(b, 40, out);
        }
        Iff(a, b) => {
            render_at(a, 31, out);
            out.push_str(" <-> ");
            render_at(b, 30, out);
        }
        Exists(p, a) => {
            out.push_str("exists ");
            out.push_str(p);
            out.push_str(". ");
            render_at(a, 10, out);
        }
        Proj(w, a) => {
            out.push_str("proj(");
            render_at(w, 0, out);
            out.push_str(", ");
            render_at(a, 0, out);
            out.push(')');
        }
        ProjInv(w, a) => {
            out.push_str("projinv(");
            render_at(w, 0, out);
            out.push_str(", ");
            render_at(a, 0, out);
            out.push(')');
        }
    }
    if parens {
        out.push(')');
    }
}

fn unary(op: &str, a: &Formula, out: &mut String) {
    out.push_str(op);
    out.push(' ');
    render_at(a, 80, out);
}

/// Renders a formula in the concrete grammar with minimal parentheses.
/// `parse(render(f))` returns `f` unchanged for any tree produced by `parse`.
pub fn render(f: &Formula) -> String {
    let mut out = String::new();
    render_at(f, 0, &mut out);
    out
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&render(self))
    }
}

// ---------------------------------------------------------------------------
// parsing

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub pos: usize,
    pub msg: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "parse error at byte {}: {}", self.pos, self.msg)
    }
}

impl std::error::Error for ParseError {}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    KwFalse,
    KwTrue,
    KwEmpty,
    KwSkip,
    KwNext,
    KwPrev,
    KwDia,
    KwDi,
    KwBox,
    KwBi,
    KwFin,
    KwBoxA,
    KwDiaA,
    KwExists,
    KwProj,
    KwProjInv,
    Not,
    AndOp,
    OrOp,
    Arrow,
    DArrow,
    Semi,
    Star,
    LParen,
    RParen,
    DiaL,
    DiaR,
    BoxLTok,
    BoxRTok,
    Dot,
    Comma,
}

fn lex(input: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let b = input.as_bytes();
    let mut i = 0usize;
    let mut out = Vec::new();
    while i < b.len() {
        let c = b[i] as char;
        match c {
            ' ' | '\t' | '\n' | '\r' => i += 1,
            '~' => {
                out.push((Tok::Not, i));
                i += 1;
            }
            '&' => {
                out.push((Tok::AndOp, i));
                i += 1;
            }
            '|' => {
                out.push((Tok::OrOp, i));
                i += 1;
            }
            ';' => {
                out.push((Tok::Semi, i));
                i += 1;
            }
            '*' => {
                out.push((Tok::Star, i));
                i += 1;
            }
            '(' => {
                out.push((Tok::LParen, i));
                i += 1;
            }
            ')' => {
                out.push((Tok::RParen, i));
                i += 1;
            }
            '.' => {
                out.push((Tok::Dot, i));
                i += 1;
            }
            ',' => {
                out.push((Tok::Comma, i));
                i += 1;
            }
            '-' => {
                if input[i..].starts_with("->") {
                    out.push((Tok::Arrow, i));
                    i += 2;
                } else {
                    return Err(ParseError { pos: i, msg: "expected `->`".into() });
                }
            }
            '<' => {
                if input[i..].starts_with("<->") {
                    out.push((Tok::DArrow, i));
                    i += 3;
                } else if input[i..].starts_with("<l>") {
                    out.push((Tok::DiaL, i));
                    i += 3;
                } else if input[i..].starts_with("<r>") {
                    out.push((Tok::DiaR, i));
                    i += 3;
                } else {
                    return Err(ParseError {
                        pos: i,
                        msg: "expected `<->`, `<l>` or `<r>`".into(),
                    });
                }
            }
            '[' => {
                if input[i..].starts_with("[l]") {
                    out.push((Tok::BoxLTok, i));
                    i += 3;
                } else if input[i..].starts_with("[r]") {
                    out.push((Tok::BoxRTok, i));
                    i += 3;
                } else {
                    return Err(ParseError { pos: i, msg: "expected `[l]` or `[r]`".into() });
                }
            }
            c if c.is_ascii_lowercase() => {
                let start = i;
                while i < b.len()
                    && ((b[i] as char).is_ascii_lowercase()
                        || (b[i] as char).is_ascii_digit()
                        || b[i] == b'_')
                {
                    i += 1;
                }
                let word = &input[start..i];
                let tok = match word {
                    "false" => Tok::KwFalse,
                    "true" => Tok::KwTrue,
                    "empty" => Tok::KwEmpty,
                    "skip" => Tok::KwSkip,
                    "next" => Tok::KwNext,
                    "prev" => Tok::KwPrev,
                    "dia" => Tok::KwDia,
                    "di" => Tok::KwDi,
                    "box" => Tok::KwBox,
                    "bi" => Tok::KwBi,
                    "fin" => Tok::KwFin,
                    "box_a" => Tok::KwBoxA,
                    "dia_a" => Tok::KwDiaA,
                    "exists" => Tok::KwExists,
                    "proj" => Tok::KwProj,
                    "projinv" => Tok::KwProjInv,
                    w if w.contains('_') => {
                        return Err(ParseError {
                            pos: start,
                            msg: format!("unknown keyword `{w}`"),
                        })
                    }
                    _ => Tok::Ident(word.to_string()),
                };
                out.push((tok, start));
            }
            _ => {
                return Err(ParseError { pos: i, msg: format!("unexpected character `{c}`") });
            }
        }
    }
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    vocab: Option<&'a Vocabulary>,
    end: usize,
    /// variables bound by enclosing quantifiers; always usable
    bound: Vec<String>,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn here(&self) -> usize {
        self.toks.get(self.pos).map(|&(_, p)| p).unwrap_or(self.end)
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|(t, _)| t.clone());
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, t: Tok, what: &str) -> Result<(), ParseError> {
        if self.peek() == Some(&t) {
            self.pos += 1;
            Ok(())
        } else {
            Err(ParseError { pos: self.here(), msg: format!("expected {what}") })
        }
    }

    fn formula(&mut self) -> Result<Formula, ParseError> {
        self.iff()
    }

    fn iff(&mut self) -> Result<Formula, ParseError> {
        let lhs = self.imp()?;
        if self.peek() == Some(&Tok::DArrow) {
            self.pos += 1;
            let rhs = self.iff()?;
            Ok(Formula::iff(lhs, rhs))
        } else {
            Ok(lhs)
        }
    }

    fn imp(&mut self) -> Result<Formula, ParseError> {
        let lhs = self.disj()?;
        if self.peek() == Some(&Tok::Arrow) {
            self.pos += 1;
            let rhs = self.imp()?;
            Ok(Formula::imp(lhs, rhs))
        } else {
            Ok(lhs)
        }
    }

    fn disj(&mut self) -> Result<Formula, ParseError> {
        let mut lhs = self.conj()?;
        while self.peek() == Some(&Tok::OrOp) {
            self.pos += 1;
            let rhs = self.conj()?;
            lhs = Formula::or(lhs, rhs);
        }
        Ok(lhs)
    }

    fn conj(&mut self) -> Result<Formula, ParseError> {
        let mut lhs = self.chop()?;
        while self.peek() == Some(&Tok::AndOp) {
            self.pos += 1;
            let rhs = self.chop()?;
            lhs = Formula::and(lhs, rhs);
        }
        Ok(lhs)
    }

    fn chop(&mut self) -> Result<Formula, ParseError> {
        let lhs = self.unary()?;
        if self.peek() == Some(&Tok::Semi) {
            self.pos += 1;
            let rhs = self.chop()?;
            Ok(Formula::chop(lhs, rhs))
        } else {
            Ok(lhs)
        }
    }

    fn unary(&mut self) -> Result<Formula, ParseError> {
        macro_rules! un {
            ($ctor:expr) => {{
                self.pos += 1;
                let a = self.unary()?;
                Ok($ctor(a))
            }};
        }
        match self.peek() {
            Some(Tok::Not) => un!(Formula::not),
            Some(Tok::KwNext) => un!(Formula::next),
            Some(Tok::KwPrev) => un!(Formula::prev),
            Some(Tok::DiaL) => un!(Formula::diamond_l),
            Some(Tok::DiaR) => un!(Formula::diamond_r),
            Some(Tok::BoxLTok) => un!(Formula::box_l),
            Some(Tok::BoxRTok) => un!(Formula::box_r),
            Some(Tok::KwDia) => un!(Formula::diamond),
            Some(Tok::KwDi) => un!(Formula::di),
            Some(Tok::KwBox) => un!(Formula::box_dia),
            Some(Tok::KwBi) => un!(Formula::bi),
            Some(Tok::KwFin) => un!(Formula::fin),
            Some(Tok::KwDiaA) => un!(Formula::diamond_a),
            Some(Tok::KwBoxA) => un!(|a| BoxA(Box::new(a))),
            _ => self.postfix(),
        }
    }

    fn postfix(&mut self) -> Result<Formula, ParseError> {
        let mut f = self.primary()?;
        while self.peek() == Some(&Tok::Star) {
            self.pos += 1;
            f = Formula::chop_star(f);
        }
        Ok(f)
    }

    fn primary(&mut self) -> Result<Formula, ParseError> {
        let pos = self.here();
        match self.bump() {
            Some(Tok::KwFalse) => Ok(False),
            Some(Tok::KwTrue) => Ok(True),
            Some(Tok::KwEmpty) => Ok(Empty),
            Some(Tok::KwSkip) => Ok(Skip),
            Some(Tok::Ident(name)) => {
                if let Some(v) = self.vocab {
                    if !v.contains(&name) && !self.bound.contains(&name) {
                        return Err(ParseError {
                            pos,
                            msg: format!("variable `{name}` is not in the vocabulary"),
                        });
                    }
                }
                Ok(Var(name))
            }
            Some(Tok::LParen) => {
                let f = self.formula()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(f)
            }
            Some(Tok::KwExists) => {
                let var_pos = self.here();
                let name = match self.bump() {
                    Some(Tok::Ident(n)) => n,
                    _ => {
                        return Err(ParseError {
                            pos: var_pos,
                            msg: "expected a variable after `exists`".into(),
                        })
                    }
                };
                self.expect(Tok::Dot, "`.` after the quantified variable")?;
                self.bound.push(name.clone());
                let body = self.formula()?;
                self.bound.pop();
                Ok(Formula::exists(name, body))
            }
            Some(t @ (Tok::KwProj | Tok::KwProjInv)) => {
                self.expect(Tok::LParen, "`(`")?;
                let w = self.formula()?;
                self.expect(Tok::Comma, "`,` between projection arguments")?;
                let a = self.formula()?;
                self.expect(Tok::RParen, "`)`")?;
                if !w.is_state_formula() {
                    return Err(ParseError {
                        pos,
                        msg: "projection condition must be a state formula".into(),
                    });
                }
                if t == Tok::KwProj {
                    Ok(Formula::proj(w, a))
                } else {
                    Ok(Formula::proj_inv(w, a))
                }
            }
            Some(_) => Err(ParseError { pos, msg: "expected a formula".into() }),
            None => Err(ParseError { pos, msg: "unexpected end of input".into() }),
        }
    }
}

/// Parses a formula, checking every free identifier against `vocab`.
pub fn parse(input: &str, vocab: &Vocabulary) -> Result<Formula, ParseError> {
    parse_impl(input, Some(vocab))
}

/// Parses a formula without a vocabulary check.
pub fn parse_unchecked(input: &str) -> Result<Formula, ParseError> {
    parse_impl(input, None)
}

fn parse_impl(input: &str, vocab: Option<&Vocabulary>) -> Result<Formula, ParseError> {
    let toks = lex(input)?;
    let mut p = Parser { toks, pos: 0, vocab, end: input.len(), bound: Vec::new() };
    let f = p.formula()?;
    if p.pos != p.toks.len() {
        return Err(ParseError { pos: p.here(), msg: "trailing input after formula".into() });
    }
    Ok(f)
}

// ---------------------------------------------------------------------------
// separated disjunctive normal form

/// One disjunct of a separated normal form: a strictly past part, an
/// introspective part and a strictly future part, read conjunctively.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeparatedDisjunct {
    pub past: Formula,
    pub introspective: Formula,
    pub future: Formula,
}

/// Disjunction of [`SeparatedDisjunct`]s, Boolean-equivalent to the input
/// when modal atoms are treated as propositions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeparatedDnf {
    pub disjuncts: Vec<SeparatedDisjunct>,
}

impl SeparatedDnf {
    pub fn to_formula(&self) -> Formula {
        Formula::or_all(self.disjuncts.iter().map(|d| {
            Formula::and_all([d.past.clone(), d.introspective.clone(), d.future.clone()])
        }))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SeparationError {
    /// A `<l>`/`<r>` subformula that is not a strictly past/future atom.
    NotSeparated(Formula),
    /// More atoms than the guard allows.
    AtomGuard { atoms: usize, limit: usize },
    /// Quantifiers and projections are not part of the separated fragment.
    UnsupportedNode(Formula),
}

impl fmt::Display for SeparationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SeparationError::NotSeparated(a) => {
                write!(f, "subformula `{}` is not strictly past/future", render(a))
            }
            SeparationError::AtomGuard { atoms, limit } => {
                write!(f, "{atoms} modal/introspective atoms exceed the limit of {limit}")
            }
            SeparationError::UnsupportedNode(a) => {
                write!(f, "`{}` is outside the separated fragment", render(a))
            }
        }
    }
}

impl std::error::Error for SeparationError {}

pub const SEPARATED_ATOM_LIMIT: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq)]
enum AtomKind {
    Past,
    Intro,
    Future,
}

/// True when the formula is `<r> (skip ; F)` with `F` future.
fn strictly_future_atom(f: &Formula) -> bool {
    match f {
        DiamondR(inner) => match &**inner {
            Chop(a, b) => matches!(**a, Skip) && b.is_future(),
            _ => false,
        },
        _ => false,
    }
}

/// True when the formula is `<l> (P ; skip)` with `P` past.
fn strictly_past_atom(f: &Formula) -> bool {
    match f {
        DiamondL(inner) => match &**inner {
            Chop(a, b) => matches!(**b, Skip) && a.is_past(),
            _ => false,
        },
        _ => false,
    }
}

/// Splits a formula of the separated fragment into a disjunction of
/// (past, introspective, future) triples via a truth table over its atoms.
///
/// Atoms are the maximal introspective subformulas and the strictly past and
/// strictly future modal atoms; the Boolean structure above them is expanded
/// exhaustively, dropping assignments on which the formula is false.
pub fn separated_dnf(f: &Formula) -> Result<SeparatedDnf, SeparationError> {
    separated_dnf_guarded(f, SEPARATED_ATOM_LIMIT)
}

pub fn separated_dnf_guarded(
    f: &Formula,
    limit: usize,
) -> Result<SeparatedDnf, SeparationError> {
    let mut atoms: Vec<(Formula, AtomKind)> = Vec::new();
    collect_atoms(f, &mut atoms)?;
    if atoms.len() > limit {
        return Err(SeparationError::AtomGuard { atoms: atoms.len(), limit });
    }
    let n = atoms.len();
    let mut disjuncts = Vec::new();
    for mask in 0u32..(1u32 << n) {
        let assign = |g: &Formula| -> Option<bool> {
            atoms
                .iter()
                .position(|(a, _)| a == g)
                .map(|i| mask & (1 << i) != 0)
        };
        if !eval_bool(f, &assign) {
            continue;
        }
        let mut past = Vec::new();
        let mut intro = Vec::new();
        let mut future = Vec::new();
        for (i, (a, kind)) in atoms.iter().enumerate() {
            let pos = mask & (1 << i) != 0;
            let lit = if pos { a.clone() } else { Formula::not(a.clone()) };
            match kind {
                AtomKind::Past => past.push(lit),
                AtomKind::Intro => intro.push(lit),
                AtomKind::Future => future.push(lit),
            }
        }
        disjuncts.push(SeparatedDisjunct {
            past: Formula::and_all(past),
            introspective: Formula::and_all(intro),
            future: Formula::and_all(future),
        });
    }
    Ok(SeparatedDnf { disjuncts })
}

fn collect_atoms(
    f: &Formula,
    atoms: &mut Vec<(Formula, AtomKind)>,
) -> Result<(), SeparationError> {
    let push = |f: &Formula, kind: AtomKind, atoms: &mut Vec<(Formula, AtomKind)>| {
        if !atoms.iter().any(|(a, _)| a == f) {
            atoms.push((f.clone(), kind));
        }
    };
    if f.is_introspective() {
        if !matches!(f, True | False) {
            push(f, AtomKind::Intro, atoms);
        }
        return Ok(());
    }
    if strictly_future_atom(f) {
        push(f, AtomKind::Future, atoms);
        return Ok(());
    }
    if strictly_past_atom(f) {
        push(f, AtomKind::Past, atoms);
        return Ok(());
    }
    match f {
        Not(a) => collect_atoms(a, atoms),
        And(a, b) | Or(a, b) | Imp(a, b) | Iff(a, b) => {
            collect_atoms(a, atoms)?;
            collect_atoms(b, atoms)
        }
        Exists(..) | Proj(..) | ProjInv(..) => Err(SeparationError::UnsupportedNode(f.clone())),
        other => Err(SeparationError::NotSeparated(other.clone())),
    }
}

fn eval_bool<F: Fn(&Formula) -> Option<bool>>(f: &Formula, assign: &F) -> bool {
    if let Some(v) = assign(f) {
        return v;
    }
    match f {
        True => true,
        False => false,
        Not(a) => !eval_bool(a, assign),
        And(a, b) => eval_bool(a, assign) && eval_bool(b, assign),
        Or(a, b) => eval_bool(a, assign) || eval_bool(b, assign),
        Imp(a, b) => !eval_bool(a, assign) || eval_bool(b, assign),
        Iff(a, b) => eval_bool(a, assign) == eval_bool(b, assign),
        // collect_atoms guarantees every other node is an atom
        _ => unreachable!("non-atom leaked into separated evaluation"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vocab() -> Vocabulary {
        Vocabulary::new(["p", "q", "r"]).unwrap()
    }

    #[test]
    fn parses_chop_star_binding() {
        let v = vocab();
        let f = parse("p ; q*", &v).unwrap();
        assert_eq!(f, Formula::chop(Formula::var("p"), Formula::chop_star(Formula::var("q"))));
        let g = parse("(p ; q)*", &v).unwrap();
        assert_eq!(g, Formula::chop_star(Formula::chop(Formula::var("p"), Formula::var("q"))));
    }

    #[test]
    fn parses_precedence_examples() {
        let v = vocab();
        let f = parse("~p & q -> <r> (skip ; p)", &v).unwrap();
        let expected = Formula::imp(
            Formula::and(Formula::not(Formula::var("p")), Formula::var("q")),
            Formula::diamond_r(Formula::chop(Skip, Formula::var("p"))),
        );
        assert_eq!(f, expected);
        // `;` binds tighter than `&`
        let g = parse("p ; q & r", &v).unwrap();
        assert_eq!(
            g,
            Formula::and(Formula::chop(Formula::var("p"), Formula::var("q")), Formula::var("r"))
        );
    }

    #[test]
    fn star_binds_tighter_than_prefix_operators() {
        let v = vocab();
        assert_eq!(parse("~p*", &v).unwrap(), Formula::not(Formula::chop_star(Formula::var("p"))));
        assert_eq!(
            parse("next p*", &v).unwrap(),
            Formula::next(Formula::chop_star(Formula::var("p")))
        );
    }

    #[test]
    fn render_round_trips_structurally() {
        let v = vocab();
        let cases = [
            "p ; (q | r) ; empty",
            "(p ; q) ; r",
            "box (p -> <r> q)",
            "exists p. p & q",
            "fin p ; skip",
            "(~p)* & dia_a (p <-> q)",
            "proj(p | q, r ; r)",
            "projinv(p, skip)",
            "[l] p -> [r] q -> <l> (p ; skip)",
        ];
        for src in cases {
            let f = parse(src, &v).unwrap();
            let printed = render(&f);
            let again = parse(&printed, &v).unwrap();
            assert_eq!(f, again, "round trip failed for `{src}` printed as `{printed}`");
        }
    }

    #[test]
    fn rejects_undeclared_variables() {
        let v = Vocabulary::new(["p"]).unwrap();
        assert!(parse("q", &v).is_err());
        // quantified variables need no declaration
        assert!(parse("exists z. z & p", &v).is_ok());
    }

    #[test]
    fn rejects_trailing_input_and_bad_tokens() {
        let v = vocab();
        assert!(parse("p q", &v).is_err());
        assert!(parse("p @ q", &v).is_err());
        assert!(parse("<x> p", &v).is_err());
    }

    #[test]
    fn vocabulary_rejects_reserved_and_duplicates() {
        assert!(Vocabulary::new(["box"]).is_err());
        assert!(Vocabulary::new(["p", "p"]).is_err());
        assert!(Vocabulary::new(["P"]).is_err());
    }

    #[test]
    fn desugar_produces_basic_kinds_only() {
        fn basic_only(f: &Formula) -> bool {
            match f {
                False | Var(_) | Imp(..) | Next(_) | Chop(..) | ChopStar(_) | DiamondL(_)
                | DiamondR(_) => f.children().iter().all(|c| basic_only(c)),
                Exists(_, a) => basic_only(a),
                Proj(w, a) | ProjInv(w, a) => basic_only(w) && basic_only(a),
                _ => false,
            }
        }
        let v = vocab();
        let f = parse("box_a (p <-> q) | fin r & bi skip", &v).unwrap();
        assert!(basic_only(&f.desugar()));
    }

    #[test]
    fn vars_tracks_free_and_bound() {
        let v = vocab();
        let f = parse("exists p. p & q", &v).unwrap();
        let vs = f.vars();
        assert!(vs.free.contains("q"));
        assert!(!vs.free.contains("p"));
        assert!(vs.bound.contains("p"));
    }

    #[test]
    fn substitution_reports_capture() {
        let f = Formula::exists("q", Formula::and(Formula::var("p"), Formula::var("q")));
        assert!(matches!(f.substitute_var("p", "q"), Err(SubstError::Capture { .. })));
        let g = Formula::chop(Formula::var("p"), Formula::var("q"));
        assert_eq!(
            g.substitute_var("p", "r").unwrap(),
            Formula::chop(Formula::var("r"), Formula::var("q"))
        );
    }

    #[test]
    fn time_reverse_examples() {
        let f = Formula::next(Formula::var("p"));
        let r = f.time_reverse().unwrap();
        assert_eq!(r, Formula::prev(Formula::fin(Formula::var("p"))));
        let g = Formula::chop(Formula::var("p"), Formula::var("q"));
        let rg = g.time_reverse().unwrap();
        assert_eq!(
            rg,
            Formula::chop(Formula::fin(Formula::var("q")), Formula::fin(Formula::var("p")))
        );
        assert!(Formula::exists("p", Formula::var("p")).time_reverse().is_err());
    }

    #[test]
    fn separated_dnf_classifies_atoms() {
        let v = vocab();
        let f = parse("q & ~<r>(skip ; p) | <l>(box p ; skip)", &v).unwrap();
        let dnf = separated_dnf(&f).unwrap();
        assert!(!dnf.disjuncts.is_empty());
        for d in &dnf.disjuncts {
            assert!(d.introspective.is_introspective());
        }
        // a bare <r> p is not strictly future
        let bad = parse("<r> p", &v).unwrap();
        assert!(matches!(separated_dnf(&bad), Err(SeparationError::NotSeparated(_))));
    }

    #[test]
    fn separated_dnf_respects_guard() {
        let v = vocab();
        // three distinct atoms: one past, one introspective, one future
        let f = parse("<l>(p ; skip) & q & <r>(skip ; r)", &v).unwrap();
        assert!(matches!(
            separated_dnf_guarded(&f, 2),
            Err(SeparationError::AtomGuard { .. })
        ));
        assert!(separated_dnf_guarded(&f, 3).is_ok());
    }

    #[test]
    fn state_and_fragment_predicates() {
        let v = vocab();
        assert!(parse("p & ~q | r", &v).unwrap().is_state_formula());
        assert!(!parse("p ; q", &v).unwrap().is_state_formula());
        assert!(parse("p ; q* & box r", &v).unwrap().is_introspective());
        assert!(!parse("<r> p", &v).unwrap().is_introspective());
        assert!(parse("q & <r>(p ; q)", &v).unwrap().is_future());
        assert!(!parse("<l> p", &v).unwrap().is_future());
    }
}
