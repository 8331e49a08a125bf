//! `itl` — command-line front end for the interval temporal logic toolkit.
//!
//! Subcommands parse formulas, evaluate them on windows and lassos, compile
//! to automata, compute normal forms and decompositions, eliminate
//! quantifiers and projections, interpolate, and decide the separated
//! fragment. Every transformation prints its result followed by a
//! verification line; `exact` is only claimed when the result was checked by
//! automaton equivalence or a decision procedure. Output is deterministic
//! for fixed inputs and flags; wall-clock timings are opt-in (`--timings`).
//!
//! Exit codes: 0 success / positive verdict, 1 semantic negative (with a
//! witness printed), 2 usage or format error.

mod formats;

use std::collections::{BTreeMap, BTreeSet};
use std::io::Read;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};

use itl_core::automata::{
    determinize, dfa_combine, dfa_equivalent, dfa_reverse, letters, nba_accepts_lasso, BoolOp,
    Dfa, Lasso, Letter,
};
use itl_core::compile::{chi_set, dfa_to_formula, itl_to_dfa, CompileError};
use itl_core::normal_forms::{
    full_system_chop, gnf, strictify_syntactic, w_block_normal_form, w_closure_system, ChopFlavor,
    ChopSystem, GnfDirection,
};
use itl_core::omega::{
    beth_define, decide_separated, fin_formula, interpolate, lasso_prefix_count_is_finite,
    reactivity_normal_form, strongest_consequence, OmegaError, Query, SeparatedWitness,
    BOUNDED_VALIDITY_WINDOW,
};
use itl_core::projection::{pi_inverse_dfa, pi_inverse_eliminate};
use itl_core::semantics::{
    bounded_equiv_check, eval_lasso, eval_window_budgeted, LassoWindow, Window,
    DEFAULT_INSERTION_BUDGET,
};
use itl_core::syntax::{
    parse, parse_unchecked, render, separated_dnf, Formula, SeparationError, Vocabulary,
};

use formats::{
    letter_token_vars, parse_automaton_file, parse_lasso_file, parse_window_file,
    render_automaton, render_dot, render_letter, render_window, AutFile,
};

#[derive(Parser)]
#[command(name = "itl", version, about = "interval temporal logic toolkit")]
struct Cli {
    /// Vocabulary variables (comma or space separated); inferred from the
    /// inputs when omitted.
    #[arg(long, global = true)]
    vocab: Option<String>,
    /// Emit one machine-readable JSON object per line instead of text.
    #[arg(long, global = true)]
    machine: bool,
    /// Include wall-clock timings in the report (off by default so identical
    /// inputs give byte-identical output).
    #[arg(long, global = true)]
    timings: bool,
    /// Insertion budget for projection expansion during window evaluation.
    #[arg(long, global = true, default_value_t = DEFAULT_INSERTION_BUDGET)]
    budget: usize,
    /// Seed for randomized sweeps; accepted for reproducibility plumbing.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum Flavor {
    Nonstrict,
    Strict,
    Mirror,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum QueryArg {
    Sat,
    Valid,
}

#[derive(Subcommand)]
enum Cmd {
    /// Parse a formula and print it back with its variables and size.
    Parse { formula: String },
    /// Evaluate a formula on a window file at its reference interval.
    Eval {
        formula: String,
        #[arg(long)]
        window: String,
    },
    /// Evaluate a future formula at the start of an ultimately periodic word.
    EvalLasso {
        formula: String,
        #[arg(long)]
        lasso: String,
    },
    /// Compile a formula to its minimal automaton.
    Compile {
        formula: String,
        /// Print the automaton in DOT format.
        #[arg(long)]
        dot: bool,
    },
    /// Translate a finite-word automaton file back to a formula.
    ToFormula { file: String },
    /// Guarded normal form: case distinction on the first (or last) state.
    Gnf {
        formula: String,
        /// Peel the last state instead of the first.
        #[arg(long)]
        past: bool,
    },
    /// Full-system chop decomposition over the states of the automaton.
    Decompose {
        formula: String,
        #[arg(long, value_enum, default_value_t = Flavor::Nonstrict)]
        flavor: Flavor,
    },
    /// Strict decomposition computed syntactically from the nonstrict one.
    Strictify { formula: String },
    /// Maximal-block equations for a state condition.
    Wblocks {
        formula: String,
        /// State condition the blocks are homogeneous in.
        #[arg(long)]
        w: String,
    },
    /// Block normal form for a state condition.
    Wnf {
        formula: String,
        #[arg(long)]
        w: String,
    },
    /// Eliminate the inverse projection of a formula symbolically.
    Projinv {
        formula: String,
        #[arg(long)]
        w: String,
    },
    /// Strongest consequence hiding the given variables.
    Qelim {
        formula: String,
        #[arg(long = "hide", required = true)]
        hide: Vec<String>,
    },
    /// Strongest consequence onto the kept variables.
    Sc {
        formula: String,
        #[arg(long = "keep")]
        keep: Vec<String>,
    },
    /// Uniform interpolant between two formulas over their shared variables.
    Interpolate { a: String, b: String },
    /// Explicit definition of a variable the formula defines implicitly.
    Beth {
        formula: String,
        #[arg(long)]
        var: String,
    },
    /// Reactivity normal form of a Buchi automaton file.
    ReactivityNf { file: String },
    /// Prefix-finiteness formula of a finite-word automaton file.
    Fin { file: String },
    /// Equivalence check: exact via automata, or bounded with --max-len.
    CheckEquiv {
        a: String,
        b: String,
        /// Compare on every interval of every window up to this length
        /// instead of the exact automaton route.
        #[arg(long)]
        max_len: Option<usize>,
    },
    /// Decide satisfiability or validity in the separated fragment.
    Decide {
        #[arg(value_enum)]
        query: QueryArg,
        formula: String,
    },
    /// Report the syntactic classes a formula falls in.
    Classify { formula: String },
    /// Time-reverse a formula.
    Reverse { formula: String },
}

fn command_name(c: &Cmd) -> &'static str {
    match c {
        Cmd::Parse { .. } => "parse",
        Cmd::Eval { .. } => "eval",
        Cmd::EvalLasso { .. } => "eval-lasso",
        Cmd::Compile { .. } => "compile",
        Cmd::ToFormula { .. } => "to-formula",
        Cmd::Gnf { .. } => "gnf",
        Cmd::Decompose { .. } => "decompose",
        Cmd::Strictify { .. } => "strictify",
        Cmd::Wblocks { .. } => "wblocks",
        Cmd::Wnf { .. } => "wnf",
        Cmd::Projinv { .. } => "projinv",
        Cmd::Qelim { .. } => "qelim",
        Cmd::Sc { .. } => "sc",
        Cmd::Interpolate { .. } => "interpolate",
        Cmd::Beth { .. } => "beth",
        Cmd::ReactivityNf { .. } => "reactivity-nf",
        Cmd::Fin { .. } => "fin",
        Cmd::CheckEquiv { .. } => "check-equiv",
        Cmd::Decide { .. } => "decide",
        Cmd::Classify { .. } => "classify",
        Cmd::Reverse { .. } => "reverse",
    }
}

// ---------------------------------------------------------------------------
// outcome plumbing

struct Outcome {
    exit: i32,
    status: &'static str,
    lines: Vec<String>,
    error: Option<String>,
    result: Option<String>,
    witness: Option<String>,
    exact: Option<bool>,
    sizes: BTreeMap<String, u64>,
}

impl Outcome {
    fn new(status: &'static str, exit: i32) -> Outcome {
        Outcome {
            exit,
            status,
            lines: Vec::new(),
            error: None,
            result: None,
            witness: None,
            exact: None,
            sizes: BTreeMap::new(),
        }
    }

    fn usage(msg: impl Into<String>) -> Outcome {
        let mut o = Outcome::new("error", 2);
        o.error = Some(msg.into());
        o
    }

    fn internal(msg: impl Into<String>) -> Outcome {
        Outcome::usage(format!("internal verification failed: {}", msg.into()))
    }

    fn line(mut self, s: impl Into<String>) -> Outcome {
        self.lines.push(s.into());
        self
    }

    fn result(mut self, s: impl Into<String>) -> Outcome {
        self.result = Some(s.into());
        self
    }

    fn witness(mut self, s: impl Into<String>) -> Outcome {
        self.witness = Some(s.into());
        self
    }

    fn exact(mut self, e: bool) -> Outcome {
        self.exact = Some(e);
        self
    }

    fn size(mut self, key: &str, v: u64) -> Outcome {
        self.sizes.insert(key.to_string(), v);
        self
    }
}

// A closed pipe (e.g. `itl … | head -1`) must not turn the verdict into a
// panic; the exit code still carries it.
fn print_line(w: &mut impl std::io::Write, line: std::fmt::Arguments, exit: i32) {
    if writeln!(w, "{line}").is_err() {
        std::process::exit(exit);
    }
}

fn emit(cli: &Cli, name: &'static str, out: &Outcome, start: Instant) {
    let stdout = std::io::stdout();
    let mut so = stdout.lock();
    if cli.machine {
        let mut obj = serde_json::Map::new();
        obj.insert("command".into(), serde_json::json!(name));
        obj.insert("status".into(), serde_json::json!(out.status));
        if let Some(e) = out.exact {
            obj.insert("exact".into(), serde_json::json!(e));
        }
        if let Some(r) = &out.result {
            obj.insert("result".into(), serde_json::json!(r));
        }
        if let Some(w) = &out.witness {
            obj.insert("witness".into(), serde_json::json!(w));
        }
        if let Some(e) = &out.error {
            obj.insert("error".into(), serde_json::json!(e));
        }
        obj.insert("sizes".into(), serde_json::json!(out.sizes));
        if cli.timings {
            obj.insert(
                "timings".into(),
                serde_json::json!({ "total_ms": start.elapsed().as_millis() as u64 }),
            );
        }
        print_line(&mut so, format_args!("{}", serde_json::Value::Object(obj)), out.exit);
    } else {
        for l in &out.lines {
            print_line(&mut so, format_args!("{l}"), out.exit);
        }
        if cli.timings {
            print_line(&mut so, format_args!("time: {} ms", start.elapsed().as_millis()), out.exit);
        }
    }
    if let Some(e) = &out.error {
        eprintln!("error: {e}");
    }
}

// ---------------------------------------------------------------------------
// input helpers

fn read_arg(s: &str) -> Result<String, Outcome> {
    if s == "-" {
        let mut buf = String::new();
        std::io::stdin()
            .read_to_string(&mut buf)
            .map_err(|e| Outcome::usage(format!("stdin: {e}")))?;
        Ok(buf.trim().to_string())
    } else {
        Ok(s.to_string())
    }
}

fn read_file(path: &str) -> Result<String, Outcome> {
    if path == "-" {
        read_arg("-")
    } else {
        std::fs::read_to_string(path).map_err(|e| Outcome::usage(format!("{path}: {e}")))
    }
}

/// Explicit `--vocab` wins; otherwise the vocabulary is the sorted union of
/// the free variables of all formula arguments and any names appearing in
/// letter tokens of input files.
fn resolve_vocab(
    explicit: &Option<String>,
    formula_texts: &[&str],
    extra: &BTreeSet<String>,
) -> Result<Vocabulary, Outcome> {
    if let Some(s) = explicit {
        let names: Vec<&str> = s
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|t| !t.is_empty())
            .collect();
        return Vocabulary::new(names).map_err(|e| Outcome::usage(e.to_string()));
    }
    let mut names: BTreeSet<String> = extra.clone();
    for t in formula_texts {
        let f = parse_unchecked(t).map_err(|e| Outcome::usage(e.to_string()))?;
        names.extend(f.vars().free);
    }
    Vocabulary::new(names).map_err(|e| Outcome::usage(e.to_string()))
}

fn parse_checked(text: &str, vocab: &Vocabulary) -> Result<Formula, Outcome> {
    parse(text, vocab).map_err(|e| Outcome::usage(e.to_string()))
}

fn lasso_inline(vocab: &Vocabulary, l: &Lasso) -> String {
    let row = |xs: &[Letter]| {
        xs.iter().map(|&s| render_letter(vocab, s)).collect::<Vec<_>>().join(" ")
    };
    if l.stem.is_empty() {
        format!("loop {}", row(&l.cycle))
    } else {
        format!("stem {} loop {}", row(&l.stem), row(&l.cycle))
    }
}

fn witness_text(w: &SeparatedWitness, vocab: &Vocabulary) -> Vec<String> {
    let window: Vec<String> = w.window.iter().map(|&s| render_letter(vocab, s)).collect();
    let mut ls = vec![format!("window: {}", window.join(" "))];
    ls.push(match &w.future_context {
        Some(l) => format!("future: {}", lasso_inline(vocab, l)),
        None => "future: unconstrained".to_string(),
    });
    ls.push(match &w.past_context {
        Some(l) => format!("past: {}", lasso_inline(vocab, l)),
        None => "past: unconstrained".to_string(),
    });
    ls
}

/// All lassos with stem up to `max_stem` and cycle up to `max_cycle` letters,
/// used for the bounded verification sweeps of omega-side constructions.
fn small_lassos(vocab: &Vocabulary, max_stem: usize, max_cycle: usize) -> Vec<Lasso> {
    let alpha: Vec<Letter> = letters(vocab).collect();
    let words_of = |len: usize| -> Vec<Vec<Letter>> {
        let mut out = vec![Vec::new()];
        for _ in 0..len {
            let mut next = Vec::new();
            for w in &out {
                for &a in &alpha {
                    let mut w2 = w.clone();
                    w2.push(a);
                    next.push(w2);
                }
            }
            out = next;
        }
        out
    };
    let mut out = Vec::new();
    for sl in 0..=max_stem {
        for stem in words_of(sl) {
            for cl in 1..=max_cycle {
                for cycle in words_of(cl) {
                    out.push(Lasso { stem: stem.clone(), cycle });
                }
            }
        }
    }
    out
}

// ---------------------------------------------------------------------------
// result simplification

/// Minimal disjunctive normal form of a letter set: prime implicants via
/// pairwise combination, then a deterministic greedy cover.
fn min_dnf(minterms: &BTreeSet<Letter>, vocab: &Vocabulary) -> Formula {
    let n = vocab.len();
    let full: u32 = if n == 0 { 0 } else { (1u32 << n) - 1 };
    let mut current: BTreeSet<(u32, u32)> = minterms.iter().map(|&m| (full, m)).collect();
    let mut primes: BTreeSet<(u32, u32)> = BTreeSet::new();
    while !current.is_empty() {
        let items: Vec<(u32, u32)> = current.iter().copied().collect();
        let mut next = BTreeSet::new();
        let mut combined = BTreeSet::new();
        for i in 0..items.len() {
            for j in (i + 1)..items.len() {
                let (m1, v1) = items[i];
                let (m2, v2) = items[j];
                if m1 == m2 {
                    let diff = v1 ^ v2;
                    if diff.count_ones() == 1 {
                        next.insert((m1 & !diff, v1 & !diff));
                        combined.insert(items[i]);
                        combined.insert(items[j]);
                    }
                }
            }
        }
        for it in items {
            if !combined.contains(&it) {
                primes.insert(it);
            }
        }
        current = next;
    }
    let covers = |(m, v): (u32, u32), l: Letter| l & m == v;
    let mut uncovered = minterms.clone();
    let mut chosen: Vec<(u32, u32)> = Vec::new();
    while !uncovered.is_empty() {
        let best = primes
            .iter()
            .copied()
            .map(|p| (uncovered.iter().filter(|&&l| covers(p, l)).count(), p))
            .filter(|&(c, _)| c > 0)
            .max_by(|a, b| a.0.cmp(&b.0).then_with(|| b.1.cmp(&a.1)))
            .map(|(_, p)| p)
            .expect("every minterm starts as its own implicant");
        chosen.push(best);
        uncovered.retain(|&l| !covers(best, l));
    }
    chosen.sort();
    Formula::or_all(chosen.into_iter().map(|(m, v)| {
        Formula::and_all((0..n).filter(|i| m & (1 << i) != 0).map(|i| {
            let var = Formula::var(&vocab.names()[i]);
            if v & (1 << i) != 0 {
                var
            } else {
                Formula::not(var)
            }
        }))
    }))
}

/// Replaces a transformation result by a short language-equal formula when
/// its language has a recognizable shape (constant, point, two-point, or a
/// constraint on the first state alone). Each candidate is accepted only
/// after an automaton equivalence check, so the swap never changes meaning.
fn simplify_result(f: &Formula, vocab: &Vocabulary) -> Formula {
    if vocab.len() > 8 {
        return f.clone();
    }
    let Ok(d) = itl_to_dfa(f, vocab) else {
        return f.clone();
    };
    if d.is_empty_language() {
        return Formula::False;
    }
    for cand in [Formula::True, Formula::Empty, Formula::Skip] {
        if let Ok(dc) = itl_to_dfa(&cand, vocab) {
            if dfa_equivalent(&d, &dc).unwrap_or(false) {
                return cand;
            }
        }
    }
    let s: BTreeSet<Letter> = letters(vocab).filter(|&l| d.accepts(&[l])).collect();
    if let Ok(dc) = itl_to_dfa(&chi_set(&s, vocab), vocab) {
        if dfa_equivalent(&d, &dc).unwrap_or(false) {
            return min_dnf(&s, vocab);
        }
    }
    f.clone()
}

// ---------------------------------------------------------------------------
// subcommand handlers

fn cmd_parse(vocab_arg: &Option<String>, formula: &str) -> Result<Outcome, Outcome> {
    let text = read_arg(formula)?;
    let vocab = resolve_vocab(vocab_arg, &[&text], &BTreeSet::new())?;
    let f = parse_checked(&text, &vocab)?;
    let vars = f.vars();
    let free: Vec<String> = vars.free.into_iter().collect();
    let bound: Vec<String> = vars.bound.into_iter().collect();
    let mut out = Outcome::new("ok", 0)
        .line(render(&f))
        .result(render(&f))
        .size("size", f.size() as u64);
    out = out.line(format!("free: {}", free.join(" ")));
    if !bound.is_empty() {
        out = out.line(format!("bound: {}", bound.join(" ")));
    }
    Ok(out.line(format!("size: {}", f.size())))
}

fn cmd_eval(
    vocab_arg: &Option<String>,
    formula: &str,
    window_path: &str,
    budget: usize,
) -> Result<Outcome, Outcome> {
    let text = read_arg(formula)?;
    let wtext = read_file(window_path)?;
    let mut extra = BTreeSet::new();
    letter_token_vars(&wtext, &mut extra);
    let vocab = resolve_vocab(vocab_arg, &[&text], &extra)?;
    let f = parse_checked(&text, &vocab)?;
    let wf = parse_window_file(&wtext, &vocab).map_err(Outcome::usage)?;
    let (i, j) = wf.reference.unwrap_or((0, wf.letters.len() - 1));
    let len = wf.letters.len();
    let w = Window::new(vocab.clone(), wf.letters).map_err(|e| Outcome::usage(e.to_string()))?;
    let v = eval_window_budgeted(&f, &w, i, j, budget)
        .map_err(|e| Outcome::usage(e.to_string()))?;
    let status: &'static str = if v.holds { "holds" } else { "fails" };
    let mode = if v.exact { "exact" } else { "bounded" };
    Ok(Outcome::new(status, if v.holds { 0 } else { 1 })
        .line(format!("{status} ({mode})"))
        .exact(v.exact)
        .size("window", len as u64))
}

fn cmd_eval_lasso(
    vocab_arg: &Option<String>,
    formula: &str,
    lasso_path: &str,
) -> Result<Outcome, Outcome> {
    let text = read_arg(formula)?;
    let ltext = read_file(lasso_path)?;
    let mut extra = BTreeSet::new();
    letter_token_vars(&ltext, &mut extra);
    let vocab = resolve_vocab(vocab_arg, &[&text], &extra)?;
    let f = parse_checked(&text, &vocab)?;
    let l = parse_lasso_file(&ltext, &vocab).map_err(Outcome::usage)?;
    let lw = LassoWindow::new(vocab.clone(), l.stem, l.cycle)
        .map_err(|e| Outcome::usage(e.to_string()))?;
    let holds = eval_lasso(&f, &lw).map_err(|e| Outcome::usage(e.to_string()))?;
    let status: &'static str = if holds { "holds" } else { "fails" };
    Ok(Outcome::new(status, if holds { 0 } else { 1 })
        .line(format!("{status} (exact)"))
        .exact(true))
}

// Exhaustively compares automaton membership with direct evaluation on all
// windows up to a small length, capped so wide vocabularies stay fast.
// Budget-limited verdicts are skipped rather than trusted.
fn verify_compiled(
    d: &Dfa,
    f: &Formula,
    vocab: &Vocabulary,
    budget: usize,
) -> Result<(usize, u64), Outcome> {
    let n_letters = letters(vocab).count();
    if n_letters > 1 << 12 {
        return Ok((0, 0));
    }
    let mut max_len = 4usize;
    loop {
        let mut total = 0usize;
        let mut pow = 1usize;
        for _ in 0..max_len {
            pow = pow.saturating_mul(n_letters);
            total = total.saturating_add(pow);
        }
        if total <= 20_000 || max_len == 1 {
            break;
        }
        max_len -= 1;
    }
    let mut checked = 0u64;
    for len in 1..=max_len {
        for idx in 0..n_letters.pow(len as u32) {
            let mut w = Vec::with_capacity(len);
            let mut x = idx;
            for _ in 0..len {
                w.push((x % n_letters) as Letter);
                x /= n_letters;
            }
            let win = Window::new(vocab.clone(), w.clone())
                .map_err(|e| Outcome::internal(e.to_string()))?;
            let v = eval_window_budgeted(f, &win, 0, len - 1, budget)
                .map_err(|e| Outcome::internal(e.to_string()))?;
            if !v.exact {
                continue;
            }
            if v.holds != d.accepts(&w) {
                return Err(Outcome::internal(format!(
                    "automaton disagrees with evaluation on {}",
                    render_window(vocab, &w, (0, len - 1))
                )));
            }
            checked += 1;
        }
    }
    Ok((max_len, checked))
}

fn cmd_compile(
    vocab_arg: &Option<String>,
    formula: &str,
    dot: bool,
    budget: usize,
) -> Result<Outcome, Outcome> {
    let text = read_arg(formula)?;
    let vocab = resolve_vocab(vocab_arg, &[&text], &BTreeSet::new())?;
    let f = parse_checked(&text, &vocab)?;
    let d = itl_to_dfa(&f, &vocab).map_err(|e| Outcome::usage(e.to_string()))?;
    let states = d.n_states() as u64;
    let (max_len, checked) = verify_compiled(&d, &f, &vocab, budget)?;
    let rendered = if dot {
        render_dot(&AutFile::Dfa(d))
    } else {
        render_automaton(&AutFile::Dfa(d))
    };
    let note = if checked > 0 {
        format!("verification: bounded (windows up to {max_len}, {checked} checked)")
    } else {
        "verification: unverified".to_string()
    };
    let mut out = Outcome::new("ok", 0).exact(false).size("states", states);
    for l in rendered.lines() {
        out = out.line(l);
    }
    // stdout stays a parseable automaton / dot file
    out = out.line(if dot { format!("// {note}") } else { format!("# {note}") });
    Ok(out.result(rendered))
}

fn cmd_to_formula(file: &str) -> Result<Outcome, Outcome> {
    let text = read_file(file)?;
    let aut = parse_automaton_file(&text).map_err(Outcome::usage)?;
    let d = match aut {
        AutFile::Dfa(d) => d,
        AutFile::Nfa(n) => determinize(&n).map_err(|e| Outcome::usage(e.to_string()))?,
        AutFile::Nba(_) | AutFile::Dpa(_) => {
            return Err(Outcome::usage(
                "only finite-word automata (dfa, nfa) translate to formulas; \
                 use reactivity-nf for omega-automata",
            ));
        }
    };
    let f = dfa_to_formula(&d);
    let back = itl_to_dfa(&f, &d.vocab).map_err(|e| Outcome::internal(e.to_string()))?;
    if !dfa_equivalent(&back, &d).map_err(|e| Outcome::internal(e.to_string()))? {
        return Err(Outcome::internal("formula-automaton round trip"));
    }
    Ok(Outcome::new("ok", 0)
        .line(render(&f))
        .line("verification: exact")
        .result(render(&f))
        .exact(true)
        .size("states", d.n_states() as u64)
        .size("size", f.size() as u64))
}

fn cmd_gnf(vocab_arg: &Option<String>, formula: &str, past: bool) -> Result<Outcome, Outcome> {
    let text = read_arg(formula)?;
    let vocab = resolve_vocab(vocab_arg, &[&text], &BTreeSet::new())?;
    let f = parse_checked(&text, &vocab)?;
    let dir = if past { GnfDirection::Past } else { GnfDirection::Future };
    let g = gnf(&f, dir, &vocab).map_err(|e| Outcome::usage(e.to_string()))?;
    let mut out = Outcome::new("ok", 0)
        .exact(true)
        .size("branches", g.branches.len() as u64)
        .line(format!("empty: {}", render(&g.empty_part)));
    for (k, b) in g.branches.iter().enumerate() {
        out = out.line(format!(
            "branch {k}: guard = {}, continuation = {}",
            render(&b.guard),
            render(&b.continuation)
        ));
    }
    let rendered = render(&g.to_formula());
    Ok(out
        .line(format!("formula: {rendered}"))
        .line("verification: exact")
        .result(rendered))
}

fn chop_system_outcome(sys: &ChopSystem) -> Outcome {
    let flavor = match sys.flavor {
        ChopFlavor::Nonstrict => "nonstrict",
        ChopFlavor::Strict => "strict",
        ChopFlavor::Mirror => "mirror",
    };
    let mut out = Outcome::new("ok", 0)
        .exact(true)
        .size("pairs", sys.pairs.len() as u64)
        .line(format!("flavor: {flavor}"));
    if let Some(e) = &sys.empty_part {
        out = out.line(format!("empty: {}", render(e)));
    }
    for (k, (l, r)) in sys.pairs.iter().enumerate() {
        out = out.line(format!("pair {k} left: {}", render(l)));
        out = out.line(format!("pair {k} right: {}", render(r)));
    }
    let rendered = render(&sys.to_formula());
    out.line(format!("formula: {rendered}"))
        .line("verification: exact")
        .result(rendered)
}

fn cmd_decompose(
    vocab_arg: &Option<String>,
    formula: &str,
    flavor: Flavor,
) -> Result<Outcome, Outcome> {
    let text = read_arg(formula)?;
    let vocab = resolve_vocab(vocab_arg, &[&text], &BTreeSet::new())?;
    let f = parse_checked(&text, &vocab)?;
    let fl = match flavor {
        Flavor::Nonstrict => ChopFlavor::Nonstrict,
        Flavor::Strict => ChopFlavor::Strict,
        Flavor::Mirror => ChopFlavor::Mirror,
    };
    let sys = full_system_chop(&f, fl, &vocab).map_err(|e| Outcome::usage(e.to_string()))?;
    Ok(chop_system_outcome(&sys))
}

fn cmd_strictify(vocab_arg: &Option<String>, formula: &str) -> Result<Outcome, Outcome> {
    let text = read_arg(formula)?;
    let vocab = resolve_vocab(vocab_arg, &[&text], &BTreeSet::new())?;
    let f = parse_checked(&text, &vocab)?;
    let ns = full_system_chop(&f, ChopFlavor::Nonstrict, &vocab)
        .map_err(|e| Outcome::usage(e.to_string()))?;
    let st =
        strictify_syntactic(&f, &ns, &vocab).map_err(|e| Outcome::usage(e.to_string()))?;
    Ok(chop_system_outcome(&st))
}

fn cmd_wblocks(vocab_arg: &Option<String>, formula: &str, w: &str) -> Result<Outcome, Outcome> {
    let text = read_arg(formula)?;
    let vocab = resolve_vocab(vocab_arg, &[&text, w], &BTreeSet::new())?;
    let f = parse_checked(&text, &vocab)?;
    let wf = parse_checked(w, &vocab)?;
    let sys = w_closure_system(&f, &wf, &vocab).map_err(|e| Outcome::usage(e.to_string()))?;
    let mut out = Outcome::new("ok", 0)
        .size("members", sys.members.len() as u64)
        .line(format!("members: {}", sys.members.len()))
        .line(format!("roots: positive {}, negative {}", sys.root_pos, sys.root_neg));
    let mut all_exact = true;
    for (k, m) in sys.members.iter().enumerate() {
        let phase = if m.phase { '+' } else { '-' };
        let lhs = sys.member_lhs(k);
        let rhs = sys.member_rhs(k);
        out = out.line(format!("member {k} [{phase}]: {} == {}", render(&lhs), render(&rhs)));
        match (itl_to_dfa(&lhs, &vocab), itl_to_dfa(&rhs, &vocab)) {
            (Ok(dl), Ok(dr)) => match dfa_equivalent(&dl, &dr) {
                Ok(true) => {}
                Ok(false) => return Err(Outcome::internal(format!("member {k} equation"))),
                Err(_) => all_exact = false,
            },
            _ => all_exact = false,
        }
    }
    if all_exact {
        out = out.exact(true).line("verification: exact");
    } else {
        out = out.line("verification: unverified");
    }
    Ok(out)
}

fn cmd_wnf(vocab_arg: &Option<String>, formula: &str, w: &str) -> Result<Outcome, Outcome> {
    let text = read_arg(formula)?;
    let vocab = resolve_vocab(vocab_arg, &[&text, w], &BTreeSet::new())?;
    let f = parse_checked(&text, &vocab)?;
    let wf = parse_checked(w, &vocab)?;
    let out = w_block_normal_form(&f, &wf, &vocab).map_err(|e| Outcome::usage(e.to_string()))?;
    let rendered = render(&out);
    Ok(Outcome::new("ok", 0)
        .line(rendered.clone())
        .line("verification: exact")
        .result(rendered)
        .exact(true)
        .size("size", out.size() as u64))
}

fn cmd_projinv(vocab_arg: &Option<String>, formula: &str, w: &str) -> Result<Outcome, Outcome> {
    let text = read_arg(formula)?;
    let vocab = resolve_vocab(vocab_arg, &[&text, w], &BTreeSet::new())?;
    let f = parse_checked(&text, &vocab)?;
    let wf = parse_checked(w, &vocab)?;
    let out = pi_inverse_eliminate(&wf, &f, &vocab).map_err(|e| Outcome::usage(e.to_string()))?;
    let direct = pi_inverse_dfa(&wf, &f, &vocab).map_err(|e| Outcome::internal(e.to_string()))?;
    let symbolic = itl_to_dfa(&out, &vocab).map_err(|e| Outcome::internal(e.to_string()))?;
    if !dfa_equivalent(&direct, &symbolic).map_err(|e| Outcome::internal(e.to_string()))? {
        return Err(Outcome::internal("inverse projection elimination"));
    }
    let rendered = render(&out);
    Ok(Outcome::new("ok", 0)
        .line(rendered.clone())
        .line("verification: exact")
        .result(rendered)
        .exact(true)
        .size("size", out.size() as u64))
}

fn consequence_outcome(
    a: &Formula,
    hide: BTreeSet<String>,
    vocab: &Vocabulary,
) -> Result<Outcome, Outcome> {
    let out = strongest_consequence(a, &hide, vocab).map_err(|e| Outcome::usage(e.to_string()))?;
    let kept: Vec<String> =
        vocab.names().iter().filter(|n| !hide.contains(*n)).cloned().collect();
    let reduced = Vocabulary::new(kept).unwrap_or_else(|_| vocab.clone());
    let simplified = simplify_result(&out, &reduced);
    let rendered = render(&simplified);
    let exact = a.is_introspective() && simplified.is_introspective();
    let mut o = Outcome::new("ok", 0)
        .line(rendered.clone())
        .result(rendered)
        .size("size", simplified.size() as u64);
    if exact {
        o = o.exact(true).line("verification: exact");
    } else {
        o = o.line("verification: unverified");
    }
    Ok(o)
}

fn cmd_qelim(vocab_arg: &Option<String>, formula: &str, hide: &[String]) -> Result<Outcome, Outcome> {
    let text = read_arg(formula)?;
    let vocab = resolve_vocab(vocab_arg, &[&text], &BTreeSet::new())?;
    let f = parse_checked(&text, &vocab)?;
    let hide: BTreeSet<String> = hide
        .iter()
        .flat_map(|h| h.split(',').map(str::trim).filter(|t| !t.is_empty()))
        .map(str::to_string)
        .collect();
    consequence_outcome(&f, hide, &vocab)
}

fn cmd_sc(vocab_arg: &Option<String>, formula: &str, keep: &[String]) -> Result<Outcome, Outcome> {
    let text = read_arg(formula)?;
    let vocab = resolve_vocab(vocab_arg, &[&text], &BTreeSet::new())?;
    let f = parse_checked(&text, &vocab)?;
    let keep: BTreeSet<String> = keep
        .iter()
        .flat_map(|h| h.split(',').map(str::trim).filter(|t| !t.is_empty()))
        .map(str::to_string)
        .collect();
    for k in &keep {
        if vocab.index_of(k).is_none() {
            return Err(Outcome::usage(format!("kept variable `{k}` is not in the vocabulary")));
        }
    }
    let hide: BTreeSet<String> =
        vocab.names().iter().filter(|n| !keep.contains(*n)).cloned().collect();
    consequence_outcome(&f, hide, &vocab)
}

fn cmd_interpolate(vocab_arg: &Option<String>, a: &str, b: &str) -> Result<Outcome, Outcome> {
    let ta = read_arg(a)?;
    let tb = read_arg(b)?;
    let vocab = resolve_vocab(vocab_arg, &[&ta, &tb], &BTreeSet::new())?;
    let fa = parse_checked(&ta, &vocab)?;
    let fb = parse_checked(&tb, &vocab)?;
    match interpolate(&fa, &fb, &vocab) {
        Ok(ip) => {
            let simplified = simplify_result(&ip.formula, &vocab);
            let rendered = render(&simplified);
            let mut o = Outcome::new("ok", 0)
                .line(rendered.clone())
                .result(rendered)
                .exact(ip.exact)
                .size("size", simplified.size() as u64);
            o = if ip.exact {
                o.line("verification: exact")
            } else {
                o.line(format!("verification: bounded (windows up to {BOUNDED_VALIDITY_WINDOW})"))
            };
            Ok(o)
        }
        Err(OmegaError::ImplicationInvalid(w)) => {
            let ls = witness_text(&w, &vocab);
            let mut o = Outcome::new("invalid", 1).line("implication invalid");
            let joined = ls.join("; ");
            for l in ls {
                o = o.line(l);
            }
            Ok(o.witness(joined).exact(true))
        }
        Err(OmegaError::ImplicationFalsified(cx)) => {
            let wstr = render_window(cx.window.vocab(), cx.window.letters(), (cx.i, cx.j));
            Ok(Outcome::new("invalid", 1)
                .line("implication falsified")
                .line(wstr.clone())
                .witness(wstr))
        }
        Err(e) => Err(Outcome::usage(e.to_string())),
    }
}

fn cmd_beth(vocab_arg: &Option<String>, formula: &str, var: &str) -> Result<Outcome, Outcome> {
    let text = read_arg(formula)?;
    let vocab = resolve_vocab(vocab_arg, &[&text], &BTreeSet::new())?;
    let f = parse_checked(&text, &vocab)?;
    match beth_define(&f, var, &vocab) {
        Ok(def) => {
            let kept: Vec<String> =
                vocab.names().iter().filter(|n| n.as_str() != var).cloned().collect();
            let reduced = Vocabulary::new(kept).unwrap_or_else(|_| vocab.clone());
            let simplified = simplify_result(&def.formula, &reduced);
            let rendered = render(&simplified);
            let mut o = Outcome::new("ok", 0)
                .line(rendered.clone())
                .result(rendered)
                .exact(def.exact)
                .size("size", simplified.size() as u64);
            o = if def.exact {
                o.line("verification: exact")
            } else {
                o.line(format!("verification: bounded (windows up to {BOUNDED_VALIDITY_WINDOW})"))
            };
            Ok(o)
        }
        Err(OmegaError::NotImplicitlyDefined(cx)) => {
            let wstr = render_window(cx.window.vocab(), cx.window.letters(), (cx.i, cx.j));
            Ok(Outcome::new("undefined", 1)
                .line("not implicitly defined")
                .line(wstr.clone())
                .witness(wstr))
        }
        Err(OmegaError::DefinitionFailed(cx)) => {
            let wstr = render_window(cx.window.vocab(), cx.window.letters(), (cx.i, cx.j));
            Ok(Outcome::new("failed", 1)
                .line("definition check failed")
                .line(wstr.clone())
                .witness(wstr))
        }
        Err(e) => Err(Outcome::usage(e.to_string())),
    }
}

fn cmd_reactivity_nf(file: &str) -> Result<Outcome, Outcome> {
    let text = read_file(file)?;
    let AutFile::Nba(n) = parse_automaton_file(&text).map_err(Outcome::usage)? else {
        return Err(Outcome::usage("reactivity-nf expects an nba file"));
    };
    let form = reactivity_normal_form(&n).map_err(|e| Outcome::usage(e.to_string()))?;
    let combined = form.to_formula().map_err(|e| Outcome::usage(e.to_string()))?;
    let mut out = Outcome::new("ok", 0).size("pairs", form.pairs.len() as u64);
    for (k, p) in form.pairs.iter().enumerate() {
        out = out.line(format!("pair {k} rescue:"));
        for l in render_automaton(&AutFile::Dfa(p.rescue.clone())).lines() {
            out = out.line(l);
        }
        out = out.line(format!("pair {k} forbidden:"));
        for l in render_automaton(&AutFile::Dfa(p.forbidden.clone())).lines() {
            out = out.line(l);
        }
    }
    for l in small_lassos(&n.vocab, 2, 2) {
        let lw = LassoWindow::new(n.vocab.clone(), l.stem.clone(), l.cycle.clone())
            .map_err(|e| Outcome::internal(e.to_string()))?;
        let by_formula =
            eval_lasso(&combined, &lw).map_err(|e| Outcome::internal(e.to_string()))?;
        if by_formula != nba_accepts_lasso(&n, &l) {
            return Err(Outcome::internal("reactivity form disagrees with the automaton"));
        }
    }
    let rendered = render(&combined);
    Ok(out
        .line(format!("formula: {rendered}"))
        .line("verification: bounded (lassos up to 2)")
        .result(rendered)
        .exact(false))
}

fn cmd_fin(file: &str) -> Result<Outcome, Outcome> {
    let text = read_file(file)?;
    let AutFile::Dfa(d) = parse_automaton_file(&text).map_err(Outcome::usage)? else {
        return Err(Outcome::usage("fin expects a dfa file"));
    };
    let f = fin_formula(&d).map_err(|e| Outcome::usage(e.to_string()))?;
    for l in small_lassos(&d.vocab, 2, 2) {
        let lw = LassoWindow::new(d.vocab.clone(), l.stem.clone(), l.cycle.clone())
            .map_err(|e| Outcome::internal(e.to_string()))?;
        let by_formula = eval_lasso(&f, &lw).map_err(|e| Outcome::internal(e.to_string()))?;
        if by_formula != lasso_prefix_count_is_finite(&d, &l) {
            return Err(Outcome::internal("finiteness formula disagrees with the automaton"));
        }
    }
    let rendered = render(&f);
    Ok(Outcome::new("ok", 0)
        .line(rendered.clone())
        .line("verification: bounded (lassos up to 2)")
        .result(rendered)
        .exact(false)
        .size("size", f.size() as u64))
}

fn check_bounded(a: &Formula, b: &Formula, vocab: &Vocabulary, n: usize) -> Outcome {
    match bounded_equiv_check(a, b, vocab, n) {
        Err(e) => Outcome::usage(e.to_string()),
        Ok(None) => Outcome::new("pass", 0)
            .line(format!("pass (exhaustive, {n})"))
            .exact(false)
            .size("max_len", n as u64),
        Ok(Some(cx)) => {
            let wstr = render_window(cx.window.vocab(), cx.window.letters(), (cx.i, cx.j));
            Outcome::new("fail", 1)
                .line("fail")
                .line(wstr.clone())
                .line(format!("lhs: {}", cx.lhs))
                .line(format!("rhs: {}", cx.rhs))
                .witness(wstr)
                .exact(false)
                .size("max_len", n as u64)
        }
    }
}

fn cmd_check_equiv(
    vocab_arg: &Option<String>,
    a: &str,
    b: &str,
    max_len: Option<usize>,
) -> Result<Outcome, Outcome> {
    let ta = read_arg(a)?;
    let tb = read_arg(b)?;
    let vocab = resolve_vocab(vocab_arg, &[&ta, &tb], &BTreeSet::new())?;
    let fa = parse_checked(&ta, &vocab)?;
    let fb = parse_checked(&tb, &vocab)?;
    if let Some(n) = max_len {
        return Ok(check_bounded(&fa, &fb, &vocab, n));
    }
    match (itl_to_dfa(&fa, &vocab), itl_to_dfa(&fb, &vocab)) {
        (Ok(da), Ok(db)) => {
            let w1 = dfa_combine(&da, &db, BoolOp::Diff)
                .map_err(|e| Outcome::usage(e.to_string()))?
                .shortest_accepted();
            let w2 = dfa_combine(&db, &da, BoolOp::Diff)
                .map_err(|e| Outcome::usage(e.to_string()))?
                .shortest_accepted();
            let witness = match (w1, w2) {
                (None, None) => None,
                (Some(w), None) | (None, Some(w)) => Some(w),
                (Some(x), Some(y)) => Some(if (x.len(), &x) <= (y.len(), &y) { x } else { y }),
            };
            match witness {
                None => Ok(Outcome::new("pass", 0)
                    .line("pass (exact)")
                    .exact(true)
                    .size("lhs_states", da.n_states() as u64)
                    .size("rhs_states", db.n_states() as u64)),
                Some(w) => {
                    let wstr = render_window(&vocab, &w, (0, w.len() - 1));
                    let (l, r) = (da.accepts(&w), db.accepts(&w));
                    Ok(Outcome::new("fail", 1)
                        .line("fail")
                        .line(wstr.clone())
                        .line(format!("lhs: {l}"))
                        .line(format!("rhs: {r}"))
                        .witness(wstr)
                        .exact(true))
                }
            }
        }
        (Err(CompileError::NotCompilable(_)), _) | (_, Err(CompileError::NotCompilable(_))) => {
            Ok(check_bounded(&fa, &fb, &vocab, 4))
        }
        (Err(e), _) | (_, Err(e)) => Err(Outcome::usage(e.to_string())),
    }
}

fn cmd_decide(
    vocab_arg: &Option<String>,
    query: QueryArg,
    formula: &str,
) -> Result<Outcome, Outcome> {
    let text = read_arg(formula)?;
    let vocab = resolve_vocab(vocab_arg, &[&text], &BTreeSet::new())?;
    let f = parse_checked(&text, &vocab)?;
    let q = match query {
        QueryArg::Sat => Query::Sat,
        QueryArg::Valid => Query::Valid,
    };
    let d = decide_separated(q, &f, &vocab).map_err(|e| Outcome::usage(e.to_string()))?;
    let mut out = match (query, d.holds) {
        (QueryArg::Sat, true) => Outcome::new("sat", 0).line("sat"),
        (QueryArg::Sat, false) => Outcome::new("unsat", 1).line("unsat"),
        (QueryArg::Valid, true) => Outcome::new("valid", 0).line("valid"),
        (QueryArg::Valid, false) => Outcome::new("invalid", 1).line("invalid"),
    };
    out = out.exact(true);
    if let Some(w) = &d.witness {
        let ls = witness_text(w, &vocab);
        let joined = ls.join("; ");
        for l in ls {
            out = out.line(l);
        }
        out = out.witness(joined).size("window", w.window.len() as u64);
    }
    Ok(out)
}

fn cmd_classify(vocab_arg: &Option<String>, formula: &str) -> Result<Outcome, Outcome> {
    let text = read_arg(formula)?;
    let vocab = resolve_vocab(vocab_arg, &[&text], &BTreeSet::new())?;
    let f = parse_checked(&text, &vocab)?;
    let yn = |b: bool| if b { "yes" } else { "no" };
    let separated = match separated_dnf(&f) {
        Ok(_) => "yes",
        Err(SeparationError::AtomGuard { .. }) => "unknown",
        Err(_) => "no",
    };
    Ok(Outcome::new("ok", 0)
        .line(format!("state-formula: {}", yn(f.is_state_formula())))
        .line(format!("introspective: {}", yn(f.is_introspective())))
        .line(format!("future: {}", yn(f.is_future())))
        .line(format!("past: {}", yn(f.is_past())))
        .line(format!("separated: {separated}"))
        .size("size", f.size() as u64))
}

fn cmd_reverse(vocab_arg: &Option<String>, formula: &str) -> Result<Outcome, Outcome> {
    let text = read_arg(formula)?;
    let vocab = resolve_vocab(vocab_arg, &[&text], &BTreeSet::new())?;
    let f = parse_checked(&text, &vocab)?;
    let r = f.time_reverse().map_err(|e| Outcome::usage(e.to_string()))?;
    let mut verification = "syntactic";
    if let (Ok(df), Ok(dr)) = (itl_to_dfa(&f, &vocab), itl_to_dfa(&r, &vocab)) {
        if let Ok(rev) = determinize(&dfa_reverse(&df)) {
            match dfa_equivalent(&rev, &dr) {
                Ok(true) => verification = "exact",
                Ok(false) => return Err(Outcome::internal("reversal language check")),
                Err(_) => {}
            }
        }
    }
    let rendered = render(&r);
    let mut o = Outcome::new("ok", 0)
        .line(rendered.clone())
        .line(format!("verification: {verification}"))
        .result(rendered)
        .size("size", r.size() as u64);
    if verification == "exact" {
        o = o.exact(true);
    }
    Ok(o)
}

fn run(cli: &Cli) -> Outcome {
    let v = &cli.vocab;
    let res = match &cli.cmd {
        Cmd::Parse { formula } => cmd_parse(v, formula),
        Cmd::Eval { formula, window } => cmd_eval(v, formula, window, cli.budget),
        Cmd::EvalLasso { formula, lasso } => cmd_eval_lasso(v, formula, lasso),
        Cmd::Compile { formula, dot } => cmd_compile(v, formula, *dot, cli.budget),
        Cmd::ToFormula { file } => cmd_to_formula(file),
        Cmd::Gnf { formula, past } => cmd_gnf(v, formula, *past),
        Cmd::Decompose { formula, flavor } => cmd_decompose(v, formula, *flavor),
        Cmd::Strictify { formula } => cmd_strictify(v, formula),
        Cmd::Wblocks { formula, w } => cmd_wblocks(v, formula, w),
        Cmd::Wnf { formula, w } => cmd_wnf(v, formula, w),
        Cmd::Projinv { formula, w } => cmd_projinv(v, formula, w),
        Cmd::Qelim { formula, hide } => cmd_qelim(v, formula, hide),
        Cmd::Sc { formula, keep } => cmd_sc(v, formula, keep),
        Cmd::Interpolate { a, b } => cmd_interpolate(v, a, b),
        Cmd::Beth { formula, var } => cmd_beth(v, formula, var),
        Cmd::ReactivityNf { file } => cmd_reactivity_nf(file),
        Cmd::Fin { file } => cmd_fin(file),
        Cmd::CheckEquiv { a, b, max_len } => cmd_check_equiv(v, a, b, *max_len),
        Cmd::Decide { query, formula } => cmd_decide(v, *query, formula),
        Cmd::Classify { formula } => cmd_classify(v, formula),
        Cmd::Reverse { formula } => cmd_reverse(v, formula),
    };
    match res {
        Ok(o) | Err(o) => o,
    }
}

// Formula trees recurse during parsing, rendering and evaluation; deep but
// legitimate inputs (tens of thousands of connectives) need more than the
// default main-thread stack.
const WORKER_STACK: usize = 256 * 1024 * 1024;

fn main() {
    let cli = Cli::parse();
    let worker = std::thread::Builder::new()
        .stack_size(WORKER_STACK)
        .spawn(move || {
            let start = Instant::now();
            let name = command_name(&cli.cmd);
            let out = run(&cli);
            emit(&cli, name, &out, start);
            out.exit
        })
        .expect("spawn worker thread");
    std::process::exit(worker.join().unwrap_or(101));
}
