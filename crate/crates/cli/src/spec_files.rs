//! Text formats for digit automata (`.dfa`) and Turing machines (`.tm`).
//!
//! Both are line based; `#` starts a comment. A DFA file:
//!
//! ```text
//! base 10
//! states zero one two three many
//! start zero
//! accept three
//! delta
//! zero 0 zero
//! zero 1..9 one
//! ```
//!
//! Every `(state, digit)` pair needs exactly one row; digit ranges
//! `a..b` are inclusive. A TM file:
//!
//! ```text
//! kappa 3
//! states begin carry
//! start begin
//! alphabet _ 0 1
//! delta
//! begin * _ * -> carry * _ * R
//! ```
//!
//! Rows map `state left under right` to `state left under right move`,
//! with moves `L`, `R`, `S` and `H`. Symbols are `_` (blank), a decimal
//! digit `d` (code `3 + d`) or a raw code `#n`. A `*` in the left or right
//! column stands for every alphabet symbol and must be repeated unchanged
//! on the right-hand side.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use addmach_core::automata::{digit_code, Dfa, Move, TuringMachine, SPACE};
use addmach_core::AutomatonError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SpecError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("missing header field `{0}`")]
    MissingField(&'static str),
    #[error("missing windows: {}", list_windows(.0))]
    MissingWindows(Vec<(String, [String; 3])>),
    #[error(transparent)]
    Automaton(#[from] AutomatonError),
}

fn list_windows(v: &[(String, [String; 3])]) -> String {
    v.iter().map(|(q, [l, u, r])| format!("({q}, {l} {u} {r})")).collect::<Vec<_>>().join(", ")
}

fn syntax(line: usize, msg: impl Into<String>) -> SpecError {
    SpecError::Syntax { line, msg: msg.into() }
}

/// Non-empty lines with comments removed, numbered from 1.
fn lines(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines().enumerate().filter_map(|(i, l)| {
        let l = l.split('#').next().unwrap_or("");
        let words: Vec<&str> = l.split_whitespace().collect();
        (!words.is_empty()).then_some((i + 1, words))
    })
}

/// Like [`lines`] but keeps `#n` symbol codes, which only occur in TM rows.
fn tm_lines(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines().enumerate().filter_map(|(i, l)| {
        let mut end = l.len();
        for (at, _) in l.match_indices('#') {
            let next = l[at + 1..].chars().next();
            if !next.is_some_and(|c| c.is_ascii_digit()) {
                end = at;
                break;
            }
        }
        let words: Vec<&str> = l[..end].split_whitespace().collect();
        (!words.is_empty()).then_some((i + 1, words))
    })
}

fn state_index(states: &[String], name: &str, line: usize) -> Result<usize, SpecError> {
    states.iter().position(|s| s == name).ok_or_else(|| syntax(line, format!("unknown state `{name}`")))
}

fn digit_range(word: &str, base: u32, line: usize) -> Result<std::ops::RangeInclusive<u32>, SpecError> {
    let parse = |w: &str| w.parse::<u32>().map_err(|_| syntax(line, format!("bad digit `{w}`")));
    let (lo, hi) = match word.split_once("..") {
        Some((a, b)) => (parse(a)?, parse(b)?),
        None => (parse(word)?, parse(word)?),
    };
    if lo > hi || hi >= base {
        return Err(syntax(line, format!("digits `{word}` outside base {base}")));
    }
    Ok(lo..=hi)
}

pub fn parse_dfa(text: &str) -> Result<Dfa, SpecError> {
    let (mut base, mut states, mut start, mut accept) = (None, None::<Vec<String>>, None, None::<Vec<(usize, String)>>);
    let mut rows: BTreeMap<(usize, u32), (usize, usize)> = BTreeMap::new();
    let mut in_delta = false;
    for (line, w) in lines(text) {
        if in_delta {
            let states = states.as_ref().ok_or(SpecError::MissingField("states"))?;
            let base = base.ok_or(SpecError::MissingField("base"))?;
            let [from, digits, to] = w[..] else {
                return Err(syntax(line, "expected `state digit state`"));
            };
            let (q, t) = (state_index(states, from, line)?, state_index(states, to, line)?);
            for d in digit_range(digits, base, line)? {
                if rows.insert((q, d), (t, line)).is_some() {
                    return Err(syntax(line, format!("second row for ({from}, {d})")));
                }
            }
            continue;
        }
        match (w[0], &w[1..]) {
            ("base", [b]) => base = Some(b.parse::<u32>().map_err(|_| syntax(line, "bad base"))?),
            ("states", names) if !names.is_empty() => states = Some(names.iter().map(|s| s.to_string()).collect()),
            ("start", [s]) => start = Some((line, s.to_string())),
            ("accept", names) => accept = Some(names.iter().map(|s| (line, s.to_string())).collect()),
            ("delta", []) => in_delta = true,
            (other, _) => return Err(syntax(line, format!("unexpected `{other}`"))),
        }
    }
    let base = base.ok_or(SpecError::MissingField("base"))?;
    if base < 2 {
        return Err(AutomatonError::InvalidBase(base).into());
    }
    let names = states.ok_or(SpecError::MissingField("states"))?;
    let (sl, start) = start.ok_or(SpecError::MissingField("start"))?;
    let start = state_index(&names, &start, sl)?;
    let accept = accept
        .ok_or(SpecError::MissingField("accept"))?
        .iter()
        .map(|(l, s)| state_index(&names, s, *l))
        .collect::<Result<BTreeSet<_>, _>>()?;
    let mut missing = Vec::new();
    let mut delta = vec![Vec::with_capacity(base as usize); names.len()];
    for (q, name) in names.iter().enumerate() {
        for d in 0..base {
            match rows.get(&(q, d)) {
                Some(&(t, _)) => delta[q].push(t),
                None => missing.push((name.clone(), d)),
            }
        }
    }
    if !missing.is_empty() {
        return Err(AutomatonError::MissingTransitions(missing).into());
    }
    let d = Dfa { base, names, start, accept, delta };
    d.validate()?;
    Ok(d)
}

pub fn write_dfa(d: &Dfa) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "base {}", d.base);
    let _ = writeln!(s, "states {}", d.names.join(" "));
    let _ = writeln!(s, "start {}", d.names[d.start]);
    let acc: Vec<&str> = d.accept.iter().map(|&a| d.names[a].as_str()).collect();
    let _ = writeln!(s, "accept {}", acc.join(" "));
    s.push_str("delta\n");
    for (q, row) in d.delta.iter().enumerate() {
        let mut digit = 0;
        while digit < row.len() {
            // collapse runs with the same target into a range
            let mut end = digit;
            while end + 1 < row.len() && row[end + 1] == row[digit] {
                end += 1;
            }
            let ds = if end == digit { format!("{digit}") } else { format!("{digit}..{end}") };
            let _ = writeln!(s, "{} {} {}", d.names[q], ds, d.names[row[digit]]);
            digit = end + 1;
        }
    }
    s
}

fn symbol(word: &str, line: usize) -> Result<u32, SpecError> {
    if word == "_" {
        return Ok(SPACE);
    }
    if let Some(code) = word.strip_prefix('#') {
        return code.parse().map_err(|_| syntax(line, format!("bad symbol code `{word}`")));
    }
    match word.parse::<u32>() {
        Ok(d) if word.len() == 1 => Ok(digit_code(d)),
        _ => Err(syntax(line, format!("bad symbol `{word}`"))),
    }
}

fn symbol_name(code: u32) -> String {
    match code {
        SPACE => "_".into(),
        c if (3..13).contains(&c) => format!("{}", c - 3),
        c => format!("#{c}"),
    }
}

fn parse_move(word: &str, line: usize) -> Result<Move, SpecError> {
    Ok(match word {
        "L" => Move::Left,
        "R" => Move::Right,
        "S" => Move::Stay,
        "H" => Move::Halt,
        _ => return Err(syntax(line, format!("bad move `{word}`"))),
    })
}

pub fn parse_tm(text: &str) -> Result<TuringMachine, SpecError> {
    let (mut kappa, mut states, mut start, mut alphabet) = (None, None::<Vec<String>>, None, None::<Vec<u32>>);
    let mut rows: Vec<(usize, Vec<&str>)> = Vec::new();
    let mut in_delta = false;
    for (line, w) in tm_lines(text) {
        if in_delta {
            rows.push((line, w));
            continue;
        }
        match (w[0], &w[1..]) {
            ("kappa", [k]) => kappa = Some(k.parse::<u32>().map_err(|_| syntax(line, "bad kappa"))?),
            ("states", names) if !names.is_empty() => states = Some(names.iter().map(|s| s.to_string()).collect()),
            ("start", [s]) => start = Some((line, s.to_string())),
            ("alphabet", syms) => alphabet = Some(syms.iter().map(|s| symbol(s, line)).collect::<Result<_, _>>()?),
            ("delta", []) => in_delta = true,
            (other, _) => return Err(syntax(line, format!("unexpected `{other}`"))),
        }
    }
    let kappa = kappa.ok_or(SpecError::MissingField("kappa"))?;
    let names = states.ok_or(SpecError::MissingField("states"))?;
    let (sl, start) = start.ok_or(SpecError::MissingField("start"))?;
    let start = state_index(&names, &start, sl)?;
    let mut alphabet = alphabet.ok_or(SpecError::MissingField("alphabet"))?;
    if !alphabet.contains(&SPACE) {
        alphabet.push(SPACE);
    }

    let mut delta = BTreeMap::new();
    for (line, w) in rows {
        let [q, l, u, r, "->", q2, l2, u2, r2, mv] = w[..] else {
            return Err(syntax(line, "expected `state l u r -> state l u r move`"));
        };
        let (q, q2, mv) = (state_index(&names, q, line)?, state_index(&names, q2, line)?, parse_move(mv, line)?);
        let (u, u2) = (symbol(u, line)?, symbol(u2, line)?);
        let side = |a: &str, b: &str| -> Result<Vec<(u32, u32)>, SpecError> {
            match (a, b) {
                ("*", "*") => Ok(alphabet.iter().map(|&s| (s, s)).collect()),
                ("*", _) | (_, "*") => Err(syntax(line, "`*` must appear on both sides")),
                _ => Ok(vec![(symbol(a, line)?, symbol(b, line)?)]),
            }
        };
        for &(l, l2) in &side(l, l2)? {
            for &(r, r2) in &side(r, r2)? {
                if delta.insert((q, [l, u, r]), (q2, [l2, u2, r2], mv)).is_some() {
                    return Err(syntax(line, "second row for the same window"));
                }
            }
        }
    }
    let t = TuringMachine { kappa, states: names, start, delta };
    t.validate()?;
    // states that can be entered without halting need every window
    let mut live = BTreeSet::from([t.start]);
    live.extend(t.delta.values().filter(|(_, _, m)| *m != Move::Halt).map(|(q, _, _)| *q));
    let mut missing = Vec::new();
    for &q in &live {
        for &l in &alphabet {
            for &u in &alphabet {
                for &r in &alphabet {
                    if !t.delta.contains_key(&(q, [l, u, r])) {
                        missing.push((t.states[q].clone(), [symbol_name(l), symbol_name(u), symbol_name(r)]));
                    }
                }
            }
        }
    }
    if !missing.is_empty() {
        return Err(SpecError::MissingWindows(missing));
    }
    Ok(t)
}

pub fn write_tm(t: &TuringMachine) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "kappa {}", t.kappa);
    let _ = writeln!(s, "states {}", t.states.join(" "));
    let _ = writeln!(s, "start {}", t.states[t.start]);
    let alpha: Vec<String> = t.alphabet().into_iter().map(symbol_name).collect();
    let _ = writeln!(s, "alphabet {}", alpha.join(" "));
    s.push_str("delta\n");
    let mv = |m: Move| match m {
        Move::Left => "L",
        Move::Right => "R",
        Move::Stay => "S",
        Move::Halt => "H",
    };
    for ((q, w), (q2, w2, m)) in &t.delta {
        let n = |c: &[u32; 3]| c.map(symbol_name).join(" ");
        let _ = writeln!(s, "{} {} -> {} {} {}", t.states[*q], n(w), t.states[*q2], n(w2), mv(*m));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use addmach_core::automata::{binary_increment, dfa_run, three_nonzero_decimal, tm_run};

    #[test]
    fn dfa_text_round_trips() {
        let d = three_nonzero_decimal();
        let text = write_dfa(&d);
        assert!(text.contains("q0 1..9 q1"));
        assert_eq!(parse_dfa(&text).unwrap(), d);
    }

    #[test]
    fn missing_dfa_rows_are_listed() {
        let text = "base 3\nstates a b\nstart a\naccept b\ndelta\na 0..2 b\nb 1 a # no 0 or 2\n";
        match parse_dfa(text) {
            Err(SpecError::Automaton(AutomatonError::MissingTransitions(m))) => {
                assert_eq!(m, vec![("b".to_string(), 0), ("b".to_string(), 2)]);
            }
            other => panic!("{other:?}"),
        }
        let e = parse_dfa(text).unwrap_err().to_string();
        assert!(e.contains("(\"b\", 0)"), "{e}");
    }

    #[test]
    fn dfa_syntax_errors_carry_lines() {
        let e = parse_dfa("base 2\nstates a\nstart a\naccept a\ndelta\na 0 b\n").unwrap_err();
        assert_eq!(e.to_string(), "line 6: unknown state `b`");
        let e = parse_dfa("base 2\nstates a\nstart a\naccept a\ndelta\na 0..2 a\n").unwrap_err();
        assert!(e.to_string().starts_with("line 6:"));
        assert!(matches!(parse_dfa("states a\n"), Err(SpecError::MissingField("base"))));
    }

    #[test]
    fn tm_text_round_trips() {
        let t = binary_increment();
        let back = parse_tm(&write_tm(&t)).unwrap();
        assert_eq!(back, t);
        for x in 0..40 {
            assert_eq!(tm_run(&back, &x.into(), 1000).unwrap().output, (x + 1).into());
        }
    }

    #[test]
    fn tm_wildcards_and_missing_windows() {
        let ok = "kappa 3\nstates s t\nstart s\nalphabet _ 0 1\ndelta\ns * _ * -> t * _ * R\ns * 0 * -> s * 0 * H\ns * 1 * -> s * 1 * H\nt * 0 * -> t * 0 * R\nt * 1 * -> t * 1 * R\nt * _ * -> t * _ * H\n";
        let t = parse_tm(ok).unwrap();
        assert_eq!(t.delta.len(), 6 * 9);
        let broken = ok.replace("t * 1 * -> t * 1 * R\n", "t 0 1 * -> t 0 1 * R\n");
        match parse_tm(&broken) {
            Err(SpecError::MissingWindows(m)) => assert_eq!(m.len(), 6),
            other => panic!("{other:?}"),
        }
        let raw = "kappa 3\nstates s\nstart s\nalphabet _ #7\ndelta\ns * _ * -> s * #7 * H\ns * #7 * -> s * #7 * H # done\n";
        assert_eq!(parse_tm(raw).unwrap().alphabet(), BTreeSet::from([SPACE, 7]));
        assert!(parse_tm("kappa 3\nstates s\nstart s\nalphabet _\ndelta\ns * _ 0 -> s * _ * H\n").is_err());
    }

    #[test]
    fn shipped_fixtures_parse() {
        let octal = parse_dfa(include_str!("../fixtures/octal_xor.dfa")).unwrap();
        let decimal = parse_dfa(include_str!("../fixtures/three_nonzero.dfa")).unwrap();
        for x in 0..3000u32 {
            assert_eq!(dfa_run(&octal, &x.into()), dfa_run(&addmach_core::automata::octal_xor(), &x.into()));
            assert_eq!(dfa_run(&decimal, &x.into()), dfa_run(&three_nonzero_decimal(), &x.into()));
        }
        let inc = parse_tm(include_str!("../fixtures/binary_increment.tm")).unwrap();
        for x in 0..100 {
            assert_eq!(tm_run(&inc, &x.into(), 1000).unwrap().output, (x + 1).into());
        }
    }
}
