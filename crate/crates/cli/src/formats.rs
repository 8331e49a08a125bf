//! Text formats for windows, lassos and automata, plus DOT export.
//!
//! Letters are written as `{}`, `{p}` or `{p,q}` with variable names in
//! vocabulary order. A window file is a whitespace-separated list of letter
//! tokens; a comment `# ref i j` fixes the reference interval. A lasso file
//! has a `loop:` line and an optional `stem:` line. An automaton file starts
//! with `<kind> <n_states>`, followed by `vocab`, `initial`, one transition
//! per line as `q --{p}--> r`, and either an `accepting:` line or
//! `priority q = n` lines.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use itl_core::automata::{letter_count, Dfa, Dpa, Lasso, Letter, Nba, Nfa, StateId};
use itl_core::syntax::Vocabulary;

pub fn render_letter(vocab: &Vocabulary, s: Letter) -> String {
    let names: Vec<&str> = vocab
        .names()
        .iter()
        .enumerate()
        .filter(|(i, _)| s & (1 << i) != 0)
        .map(|(_, n)| n.as_str())
        .collect();
    format!("{{{}}}", names.join(","))
}

pub fn parse_letter(vocab: &Vocabulary, tok: &str) -> Result<Letter, String> {
    let inner = tok
        .strip_prefix('{')
        .and_then(|t| t.strip_suffix('}'))
        .ok_or_else(|| format!("letter `{tok}` is not brace-delimited"))?;
    let mut s: Letter = 0;
    for name in inner.split(',').map(str::trim).filter(|n| !n.is_empty()) {
        let idx = vocab
            .index_of(name)
            .ok_or_else(|| format!("unknown variable `{name}` in letter `{tok}`"))?;
        s |= 1 << idx;
    }
    Ok(s)
}

/// Variable names mentioned by letter tokens, for vocabulary inference.
pub fn letter_token_vars(text: &str, out: &mut BTreeSet<String>) {
    for tok in strip_comments(text).split_whitespace() {
        if let Some(inner) = tok.strip_prefix('{').and_then(|t| t.strip_suffix('}')) {
            for name in inner.split(',').map(str::trim).filter(|n| !n.is_empty()) {
                out.insert(name.to_string());
            }
        }
    }
}

fn strip_comments(text: &str) -> String {
    text.lines()
        .map(|l| l.split('#').next().unwrap_or(""))
        .collect::<Vec<_>>()
        .join("\n")
}

pub struct WindowFile {
    pub letters: Vec<Letter>,
    /// Reference interval from a `# ref i j` comment.
    pub reference: Option<(usize, usize)>,
}

pub fn parse_window_file(text: &str, vocab: &Vocabulary) -> Result<WindowFile, String> {
    let mut reference = None;
    for l in text.lines() {
        if let Some(comment) = l.split_once('#').map(|(_, c)| c.trim()) {
            if let Some(rest) = comment.strip_prefix("ref") {
                let nums: Vec<&str> = rest.split_whitespace().collect();
                if nums.len() != 2 {
                    return Err(format!("malformed reference comment `#{comment}`"));
                }
                let i = nums[0].parse::<usize>().map_err(|e| e.to_string())?;
                let j = nums[1].parse::<usize>().map_err(|e| e.to_string())?;
                reference = Some((i, j));
            }
        }
    }
    let mut letters = Vec::new();
    for tok in strip_comments(text).split_whitespace() {
        letters.push(parse_letter(vocab, tok)?);
    }
    if letters.is_empty() {
        return Err("window file holds no letters".to_string());
    }
    Ok(WindowFile { letters, reference })
}

pub fn render_window(vocab: &Vocabulary, letters: &[Letter], reference: (usize, usize)) -> String {
    let toks: Vec<String> = letters.iter().map(|&s| render_letter(vocab, s)).collect();
    format!("{} # ref {} {}", toks.join(" "), reference.0, reference.1)
}

pub fn parse_lasso_file(text: &str, vocab: &Vocabulary) -> Result<Lasso, String> {
    let mut stem = Vec::new();
    let mut cycle = Vec::new();
    let mut saw_loop = false;
    for line in strip_comments(text).lines() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let (key, rest) = line
            .split_once(':')
            .ok_or_else(|| format!("expected `stem:` or `loop:`, got `{line}`"))?;
        let letters: Result<Vec<Letter>, String> =
            rest.split_whitespace().map(|t| parse_letter(vocab, t)).collect();
        match key.trim() {
            "stem" => stem = letters?,
            "loop" => {
                cycle = letters?;
                saw_loop = true;
            }
            other => return Err(format!("unknown lasso section `{other}`")),
        }
    }
    if !saw_loop || cycle.is_empty() {
        return Err("lasso file needs a non-empty `loop:` line".to_string());
    }
    Ok(Lasso { stem, cycle })
}

/// Any automaton kind the file format can hold.
pub enum AutFile {
    Dfa(Dfa),
    Nfa(Nfa),
    Nba(Nba),
    Dpa(Dpa),
}

pub fn parse_automaton_file(text: &str) -> Result<AutFile, String> {
    let clean = strip_comments(text);
    let mut lines = clean.lines().map(str::trim).filter(|l| !l.is_empty());
    let header = lines.next().ok_or("empty automaton file")?;
    let mut hdr = header.split_whitespace();
    let kind = hdr.next().ok_or("missing automaton kind")?.to_string();
    let n: usize = hdr
        .next()
        .ok_or("missing state count")?
        .parse()
        .map_err(|e| format!("bad state count: {e}"))?;
    if n == 0 {
        return Err("automaton needs at least one state".to_string());
    }

    let mut vocab: Option<Vocabulary> = None;
    let mut initial: Vec<StateId> = Vec::new();
    let mut accepting: BTreeSet<StateId> = BTreeSet::new();
    let mut priority: Vec<Option<u32>> = vec![None; n];
    let mut edges: Vec<(StateId, Letter, StateId)> = Vec::new();

    let state = |tok: &str| -> Result<StateId, String> {
        let q: StateId = tok.parse().map_err(|e| format!("bad state `{tok}`: {e}"))?;
        if q >= n {
            return Err(format!("state {q} out of range (have {n})"));
        }
        Ok(q)
    };

    for line in lines {
        if let Some(rest) = line.strip_prefix("vocab") {
            let names: Vec<&str> = rest.split_whitespace().collect();
            vocab = Some(Vocabulary::new(names).map_err(|e| e.to_string())?);
        } else if let Some(rest) = line.strip_prefix("initial") {
            for tok in rest.split_whitespace() {
                initial.push(state(tok)?);
            }
        } else if let Some(rest) = line.strip_prefix("accepting:") {
            for tok in rest.split_whitespace() {
                accepting.insert(state(tok)?);
            }
        } else if let Some(rest) = line.strip_prefix("priority") {
            let (q, p) = rest
                .split_once('=')
                .ok_or_else(|| format!("malformed priority line `{line}`"))?;
            let q = state(q.trim())?;
            priority[q] =
                Some(p.trim().parse().map_err(|e| format!("bad priority: {e}"))?);
        } else if let Some((from, rest)) = line.split_once("--") {
            let (label, to) = rest
                .split_once("-->")
                .ok_or_else(|| format!("malformed transition `{line}`"))?;
            let v = vocab
                .as_ref()
                .ok_or("transitions must come after the vocab line")?;
            edges.push((
                state(from.trim())?,
                parse_letter(v, label.trim())?,
                state(to.trim())?,
            ));
        } else {
            return Err(format!("unrecognized line `{line}`"));
        }
    }

    let vocab = vocab.ok_or("missing vocab line")?;
    let k = letter_count(&vocab);
    match kind.as_str() {
        "dfa" | "dpa" => {
            if initial.len() != 1 {
                return Err(format!("{kind} needs exactly one initial state"));
            }
            let mut trans = vec![vec![usize::MAX; k]; n];
            for (q, s, r) in edges {
                if trans[q][s as usize] != usize::MAX {
                    return Err(format!("duplicate transition from {q} on letter {s}"));
                }
                trans[q][s as usize] = r;
            }
            for (q, row) in trans.iter().enumerate() {
                if let Some(s) = row.iter().position(|&r| r == usize::MAX) {
                    return Err(format!(
                        "state {q} lacks a transition on {}",
                        render_letter(&vocab, s as Letter)
                    ));
                }
            }
            if kind == "dfa" {
                Ok(AutFile::Dfa(Dfa { vocab, trans, initial: initial[0], accepting }))
            } else {
                let priority: Result<Vec<u32>, String> = priority
                    .into_iter()
                    .enumerate()
                    .map(|(q, p)| p.ok_or(format!("state {q} lacks a priority")))
                    .collect();
                Ok(AutFile::Dpa(Dpa { vocab, trans, initial: initial[0], priority: priority? }))
            }
        }
        "nfa" | "nba" => {
            let initial: BTreeSet<StateId> = initial.into_iter().collect();
            if initial.is_empty() {
                return Err(format!("{kind} needs at least one initial state"));
            }
            let mut trans: std::collections::BTreeMap<(StateId, Letter), BTreeSet<StateId>> =
                Default::default();
            for (q, s, r) in edges {
                trans.entry((q, s)).or_default().insert(r);
            }
            if kind == "nfa" {
                Ok(AutFile::Nfa(Nfa { vocab, n_states: n, initial, accepting, trans }))
            } else {
                Ok(AutFile::Nba(Nba { vocab, n_states: n, initial, accepting, trans }))
            }
        }
        other => Err(format!("unknown automaton kind `{other}`")),
    }
}

pub fn render_automaton(a: &AutFile) -> String {
    let mut out = String::new();
    match a {
        AutFile::Dfa(d) => {
            let _ = writeln!(out, "dfa {}", d.n_states());
            let _ = writeln!(out, "vocab {}", d.vocab.names().join(" "));
            let _ = writeln!(out, "initial {}", d.initial);
            render_det_edges(&mut out, &d.vocab, &d.trans);
            render_accepting(&mut out, &d.accepting);
        }
        AutFile::Dpa(d) => {
            let _ = writeln!(out, "dpa {}", d.n_states());
            let _ = writeln!(out, "vocab {}", d.vocab.names().join(" "));
            let _ = writeln!(out, "initial {}", d.initial);
            render_det_edges(&mut out, &d.vocab, &d.trans);
            for (q, p) in d.priority.iter().enumerate() {
                let _ = writeln!(out, "priority {q} = {p}");
            }
        }
        AutFile::Nfa(n) => {
            render_nondet(&mut out, "nfa", &n.vocab, n.n_states, &n.initial, &n.trans);
            render_accepting(&mut out, &n.accepting);
        }
        AutFile::Nba(n) => {
            render_nondet(&mut out, "nba", &n.vocab, n.n_states, &n.initial, &n.trans);
            render_accepting(&mut out, &n.accepting);
        }
    }
    out
}

fn render_det_edges(out: &mut String, vocab: &Vocabulary, trans: &[Vec<StateId>]) {
    for (q, row) in trans.iter().enumerate() {
        for (s, &r) in row.iter().enumerate() {
            let _ = writeln!(out, "{q} --{}--> {r}", render_letter(vocab, s as Letter));
        }
    }
}

fn render_nondet(
    out: &mut String,
    kind: &str,
    vocab: &Vocabulary,
    n: usize,
    initial: &BTreeSet<StateId>,
    trans: &std::collections::BTreeMap<(StateId, Letter), BTreeSet<StateId>>,
) {
    let _ = writeln!(out, "{kind} {n}");
    let _ = writeln!(out, "vocab {}", vocab.names().join(" "));
    let inits: Vec<String> = initial.iter().map(|q| q.to_string()).collect();
    let _ = writeln!(out, "initial {}", inits.join(" "));
    for ((q, s), targets) in trans {
        for r in targets {
            let _ = writeln!(out, "{q} --{}--> {r}", render_letter(vocab, *s));
        }
    }
}

fn render_accepting(out: &mut String, accepting: &BTreeSet<StateId>) {
    let states: Vec<String> = accepting.iter().map(|q| q.to_string()).collect();
    if states.is_empty() {
        let _ = writeln!(out, "accepting:");
    } else {
        let _ = writeln!(out, "accepting: {}", states.join(" "));
    }
}

pub fn render_dot(a: &AutFile) -> String {
    let mut out = String::from("digraph automaton {\n  rankdir=LR;\n");
    let _ = writeln!(out, "  init [shape=point];");
    let (vocab, n) = match a {
        AutFile::Dfa(d) => (&d.vocab, d.n_states()),
        AutFile::Dpa(d) => (&d.vocab, d.n_states()),
        AutFile::Nfa(x) => (&x.vocab, x.n_states),
        AutFile::Nba(x) => (&x.vocab, x.n_states),
    };
    for q in 0..n {
        let shape = match a {
            AutFile::Dfa(d) => {
                if d.accepting.contains(&q) {
                    "doublecircle"
                } else {
                    "circle"
                }
            }
            AutFile::Nfa(x) => {
                if x.accepting.contains(&q) {
                    "doublecircle"
                } else {
                    "circle"
                }
            }
            AutFile::Nba(x) => {
                if x.accepting.contains(&q) {
                    "doublecircle"
                } else {
                    "circle"
                }
            }
            AutFile::Dpa(_) => "circle",
        };
        let label = match a {
            AutFile::Dpa(d) => format!("{q}:{}", d.priority[q]),
            _ => q.to_string(),
        };
        let _ = writeln!(out, "  q{q} [shape={shape}, label=\"{label}\"];");
    }
    match a {
        AutFile::Dfa(Dfa { initial, .. }) | AutFile::Dpa(Dpa { initial, .. }) => {
            let _ = writeln!(out, "  init -> q{initial};");
        }
        AutFile::Nfa(x) => {
            for q in &x.initial {
                let _ = writeln!(out, "  init -> q{q};");
            }
        }
        AutFile::Nba(x) => {
            for q in &x.initial {
                let _ = writeln!(out, "  init -> q{q};");
            }
        }
    }
    match a {
        AutFile::Dfa(Dfa { trans, .. }) | AutFile::Dpa(Dpa { trans, .. }) => {
            for (q, row) in trans.iter().enumerate() {
                for (s, &r) in row.iter().enumerate() {
                    let _ = writeln!(
                        out,
                        "  q{q} -> q{r} [label=\"{}\"];",
                        render_letter(vocab, s as Letter)
                    );
                }
            }
        }
        AutFile::Nfa(Nfa { trans, .. }) | AutFile::Nba(Nba { trans, .. }) => {
            for ((q, s), targets) in trans {
                for r in targets {
                    let _ = writeln!(
                        out,
                        "  q{q} -> q{r} [label=\"{}\"];",
                        render_letter(vocab, *s)
                    );
                }
            }
        }
    }
    out.push_str("}\n");
    out
}
