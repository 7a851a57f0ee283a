//! One-tape Turing machines over a window of three cells, and their
//! simulation by a register program with two stacks.
//!
//! Tape conventions: a number is written least significant digit first.
//! At the start the head sits on a blank and the input begins in the
//! cell to its right. At a halt the output ends in the cell to the left
//! of the head, so reading leftwards from the head yields the most
//! significant digit first. Digit `d` is stored as code `3 + d`; code 2
//! is the blank and code 1 marks the bottom of a stack.
//!
//! A stack with top symbol `s1` and bottom symbol `sl` is held as
//! `z * 0.s1 s2 ... sl 1` in base `2^kappa`, where `z` is a shared power
//! of `2^kappa`. The trailing digit 1 is the bottom marker, so the empty
//! stack is `z / 2^kappa` and popping it yields exactly `z`.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write as _;

use num_bigint::BigInt;
use num_traits::Zero;

use crate::assembler::{parse, StructuredProgram};
use crate::error::AutomatonError;

pub const SENTINEL: u32 = 1;
pub const SPACE: u32 = 2;
pub const BITZERO: u32 = 3;
pub const BITONE: u32 = 4;

/// Tape code of digit `d`.
pub const fn digit_code(d: u32) -> u32 {
    BITZERO + d
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Move {
    Left,
    Right,
    Stay,
    Halt,
}

impl Move {
    pub(crate) fn code(self) -> u32 {
        self as u32
    }
}

pub type Window = [u32; 3];

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TuringMachine {
    /// Tape codes are below `2^kappa`.
    pub kappa: u32,
    pub states: Vec<String>,
    pub start: usize,
    /// `(state, [left, under, right])` to the new state, the new window
    /// and the move.
    pub delta: BTreeMap<(usize, Window), (usize, Window, Move)>,
}

impl TuringMachine {
    /// Builds the window table from rules that look only at the cell under
    /// the head. Every window over `alphabet` gets an entry for every rule.
    pub fn from_head_rules(kappa: u32, states: &[&str], start: usize, alphabet: &[u32], rules: &[(usize, u32, usize, u32, Move)]) -> Self {
        let mut delta = BTreeMap::new();
        for &(q, read, q2, write, mv) in rules {
            for &l in alphabet {
                for &r in alphabet {
                    delta.insert((q, [l, read, r]), (q2, [l, write, r], mv));
                }
            }
        }
        TuringMachine {
            kappa,
            states: states.iter().map(|s| String::from(*s)).collect(),
            start,
            delta,
        }
    }

    pub fn base(&self) -> u32 {
        1 << self.kappa
    }

    /// Every symbol mentioned by the table, plus the blank.
    pub fn alphabet(&self) -> BTreeSet<u32> {
        let mut a = BTreeSet::from([SPACE]);
        for ((_, w), (_, w2, _)) in &self.delta {
            a.extend(w.iter().chain(w2.iter()));
        }
        a
    }

    pub fn validate(&self) -> Result<(), AutomatonError> {
        if !(3..=6).contains(&self.kappa) {
            return Err(AutomatonError::Spec(format!("kappa must be between 3 and 6, got {}", self.kappa)));
        }
        let n = self.states.len();
        if self.start >= n {
            return Err(AutomatonError::BadState(self.start));
        }
        for ((q, _), (q2, _, _)) in &self.delta {
            if let Some(&bad) = [q, q2].into_iter().find(|&&s| s >= n) {
                return Err(AutomatonError::BadState(bad));
            }
        }
        for s in self.alphabet() {
            if s >= self.base() {
                return Err(AutomatonError::SymbolOutOfRange { symbol: s, kappa: self.kappa });
            }
            if s < SPACE {
                return Err(AutomatonError::ReservedSymbol(s));
            }
        }
        Ok(())
    }

    /// Checks that digits of both bases have tape codes.
    pub fn check_bases(&self, input: u32, output: u32) -> Result<(), AutomatonError> {
        for base in [input, output] {
            if base < 2 {
                return Err(AutomatonError::InvalidBase(base));
            }
            let code = digit_code(base - 1);
            if code >= self.base() {
                return Err(AutomatonError::AlphabetTooSmall { base, kappa: self.kappa, code });
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TmRun {
    pub output: BigInt,
    /// Transitions applied, the halting one included.
    pub steps: u64,
}

/// Binary in, binary out.
pub fn tm_run(t: &TuringMachine, x: &BigInt, step_limit: u64) -> Result<TmRun, AutomatonError> {
    tm_run_bases(t, x, 2, 2, step_limit)
}

/// Simulates `t` directly on `|x|` written in base `input`, and reads
/// the base-`output` number left of the head at the halt.
pub fn tm_run_bases(t: &TuringMachine, x: &BigInt, input: u32, output: u32, step_limit: u64) -> Result<TmRun, AutomatonError> {
    t.validate()?;
    t.check_bases(input, output)?;
    let mut tape: BTreeMap<i64, u32> = BTreeMap::new();
    let digits = super::dfa::digits(x, input);
    for (i, d) in digits.iter().rev().enumerate() {
        tape.insert(i as i64 + 1, digit_code(*d));
    }
    let cell = |tape: &BTreeMap<i64, u32>, at: i64| tape.get(&at).copied().unwrap_or(SPACE);
    let (mut head, mut q, mut steps) = (0i64, t.start, 0u64);
    loop {
        if steps >= step_limit {
            return Err(AutomatonError::StepLimit(step_limit));
        }
        let window = [cell(&tape, head - 1), cell(&tape, head), cell(&tape, head + 1)];
        let Some(&(q2, w2, mv)) = t.delta.get(&(q, window)) else {
            return Err(AutomatonError::NoTransition { state: t.states[q].clone(), window });
        };
        for (off, s) in (-1..=1).zip(w2) {
            tape.insert(head + off, s);
        }
        q = q2;
        steps += 1;
        match mv {
            Move::Left => head -= 1,
            Move::Right => head += 1,
            Move::Stay => {}
            Move::Halt => break,
        }
    }
    let mut y = BigInt::zero();
    let mut at = head - 1;
    loop {
        let s = cell(&tape, at);
        if !(BITZERO..digit_code(output)).contains(&s) {
            break;
        }
        y = y * output + (s - BITZERO);
        at -= 1;
    }
    Ok(TmRun { output: y, steps })
}

/// Binary conventions: three registers.
pub fn compile_tm(t: &TuringMachine) -> Result<StructuredProgram, AutomatonError> {
    compile_tm_bases(t, 2, 2)
}

/// Input read in base `input`, output written in base `output`. A
/// fourth register `w` appears when either base is not a power of two.
pub fn compile_tm_bases(t: &TuringMachine, input: u32, output: u32) -> Result<StructuredProgram, AutomatonError> {
    t.validate()?;
    t.check_bases(input, output)?;
    let mut s = String::new();
    let _ = writeln!(s, "// two-stack tape simulation, {} states, 2^{} tape codes", t.states.len(), t.kappa);
    s.push_str("program tm;\n");
    s.push_str(&decls(t, input));
    s.push_str("read x; if x < 0 then let x = -x;\n");
    s.push_str(&body(t, input, output, "S"));
    parse(&s).map_err(AutomatonError::from)
}

pub(crate) fn decls(t: &TuringMachine, input: u32) -> String {
    let top = t.base() - 1;
    let mut s = String::new();
    let _ = writeln!(s, "var a in {{0..{}}};", t.states.len().max(2) - 1);
    for v in ["b", "b'", "b''"] {
        let _ = writeln!(s, "var {v} in {{0..{top}}};");
    }
    s.push_str("var c in {0..3};\n");
    let _ = writeln!(s, "var d in {{0..{}}};", input - 1);
    s
}

fn using(k: u32, reg: &str) -> String {
    if k.is_power_of_two() {
        String::new()
    } else {
        format!(" using {reg}")
    }
}

/// Statements that take the input from `x` and end with `write y`.
/// Labels get the prefix `p`.
pub(crate) fn body(t: &TuringMachine, i: u32, j: u32, p: &str) -> String {
    let big = t.base();
    let mut s = String::new();
    // append a marker digit and find the power of i above it
    let _ = writeln!(s, "let x = {i}*x + 1{}; let z = 1;", using(i, "y"));
    let _ = writeln!(s, "{p}2: if z > x then goto {p}3; let z = {i}*z{}; goto {p}2;", using(i, "y"));
    // y starts as the empty stack
    let _ = writeln!(s, "{p}3: let x = {i}*x{}; let y = z; let z = {big}*z; let x = {big}*x;", using(i, "y"));
    let _ = writeln!(s, "let (b, b', b'') = ({SPACE}, {SPACE}, {SPACE});");
    // digits leave x most significant first; each one is pushed onto y
    // when the next arrives, so the last digit ends up right of the head
    let _ = writeln!(s, "{p}4: if x = z then goto {p}5;");
    let _ = writeln!(s, "let y = y + b''*z; let x = {big}*x; let z = {big}*z;");
    let _ = writeln!(s, "let (d, x) = (floor(x / z), rem(x, z)); let b'' = d + {BITZERO}; let x = {i}*x{}; goto {p}4;", using(i, "w"));
    // x holds only the marker: rescale so it reads as the empty stack
    let _ = writeln!(s, "{p}5: let y = {big}*y; let z = {big}*z; let a = {};", t.start);
    let _ = writeln!(s, "{p}6: ");
    for ((q, [l, u, r]), (q2, [l2, u2, r2], mv)) in &t.delta {
        let _ = writeln!(
            s,
            "if (a in {{{q}}} and b in {{{l}}} and b' in {{{u}}} and b'' in {{{r}}}) then begin let (a, b, b', b'', c) = ({q2}, {l2}, {u2}, {r2}, {}); goto {p}7 end;",
            mv.code()
        );
    }
    s.push_str("halt;\n");
    let _ = writeln!(s, "{p}7: if c in {{{}}} then goto {p}8;", Move::Halt.code());
    let _ = writeln!(s, "if c in {{{}}} then begin", Move::Left.code());
    let _ = writeln!(s, "    let y = y + b''*z; let x = {big}*x; let z = {big}*z; let (b'', b') = (b', b); let x = {big}*x;");
    let _ = writeln!(s, "    if x = z then begin let y = {big}*y; let z = {big}*z; let b = {SPACE} end");
    s.push_str("    else let (b, x) = (floor(x / z), rem(x, z))\nend;\n");
    let _ = writeln!(s, "if c in {{{}}} then begin", Move::Right.code());
    let _ = writeln!(s, "    let x = x + b*z; let y = {big}*y; let z = {big}*z; let (b, b') = (b', b''); let y = {big}*y;");
    let _ = writeln!(s, "    if y = z then begin let x = {big}*x; let z = {big}*z; let b'' = {SPACE} end");
    s.push_str("    else let (b'', y) = (floor(y / z), rem(y, z))\nend;\n");
    let _ = writeln!(s, "goto {p}6;");
    // read the output leftwards from the head
    let codes: Vec<String> = (0..j).map(|d| format!("{}", digit_code(d))).collect();
    let _ = writeln!(s, "{p}8: let y = 0;");
    let _ = writeln!(s, "{p}9: if b notin {{{}}} then goto {p}10;", codes.join(", "));
    let _ = writeln!(s, "let y = {j}*y + b - {BITZERO}{}; let x = {big}*x; if x = z then goto {p}10;", using(j, "w"));
    let _ = writeln!(s, "let (b, x) = (floor(x / z), rem(x, z)); goto {p}9;");
    let _ = writeln!(s, "{p}10: write y;");
    s
}

/// Scans right over the input and halts on the first blank, leaving the
/// input left of the head unchanged. Windows the machine never meets
/// halt at once, so the table is total over its alphabet.
pub fn identity() -> TuringMachine {
    use Move::*;
    let alpha = [SPACE, BITZERO, BITONE];
    TuringMachine::from_head_rules(
        3,
        &["begin", "scan"],
        0,
        &alpha,
        &[
            (0, SPACE, 1, SPACE, Right),
            (0, BITZERO, 0, BITZERO, Halt),
            (0, BITONE, 0, BITONE, Halt),
            (1, BITZERO, 1, BITZERO, Right),
            (1, BITONE, 1, BITONE, Right),
            (1, SPACE, 1, SPACE, Halt),
        ],
    )
}

/// Adds one: carries through the low ones, then scans to the end.
pub fn binary_increment() -> TuringMachine {
    use Move::*;
    let alpha = [SPACE, BITZERO, BITONE];
    TuringMachine::from_head_rules(
        3,
        &["begin", "carry", "scan", "done"],
        0,
        &alpha,
        &[
            (0, SPACE, 1, SPACE, Right),
            (0, BITZERO, 0, BITZERO, Halt),
            (0, BITONE, 0, BITONE, Halt),
            (1, BITONE, 1, BITZERO, Right),
            (1, BITZERO, 2, BITONE, Right),
            (1, SPACE, 3, BITONE, Right),
            (2, BITZERO, 2, BITZERO, Right),
            (2, BITONE, 2, BITONE, Right),
            (2, SPACE, 2, SPACE, Halt),
            (3, SPACE, 3, SPACE, Halt),
            (3, BITZERO, 3, BITZERO, Halt),
            (3, BITONE, 3, BITONE, Halt),
        ],
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembler::expand;
    use crate::interpreter::run;
    use crate::isa::count_registers;

    fn compiled(t: &TuringMachine, x: i64) -> (BigInt, u64) {
        let p = expand(&compile_tm(t).unwrap()).unwrap();
        let r = run(&p, &[x.into()], 10_000_000);
        assert_eq!(r.outputs.len(), 1, "input {x}");
        (r.outputs[0].clone(), r.steps)
    }

    #[test]
    fn direct_runs() {
        assert_eq!(tm_run(&identity(), &13.into(), 1000).unwrap().output, 13.into());
        assert_eq!(tm_run(&binary_increment(), &13.into(), 1000).unwrap().output, 14.into());
        assert_eq!(tm_run(&binary_increment(), &0.into(), 1000).unwrap().output, 1.into());
        assert_eq!(tm_run(&binary_increment(), &7.into(), 1000).unwrap().output, 8.into());
        // blank, four digits, final blank
        assert_eq!(tm_run(&identity(), &13.into(), 1000).unwrap().steps, 6);
    }

    #[test]
    fn step_limit_and_missing_windows_are_reported() {
        let mut t = identity();
        t.delta.retain(|(q, w), _| !(*q == 1 && w[1] == SPACE));
        assert!(matches!(tm_run(&t, &5.into(), 1000), Err(AutomatonError::NoTransition { .. })));
        let looping = TuringMachine::from_head_rules(3, &["s", "t"], 0, &[SPACE], &[(0, SPACE, 0, SPACE, Move::Stay)]);
        assert_eq!(tm_run(&looping, &0.into(), 50), Err(AutomatonError::StepLimit(50)));
    }

    #[test]
    fn compiled_machines_agree_on_small_inputs() {
        for x in 0..64 {
            assert_eq!(compiled(&identity(), x).0, x.into());
            assert_eq!(compiled(&binary_increment(), x).0, (x + 1).into());
        }
        assert_eq!(compiled(&binary_increment(), -13).0, 14.into());
    }

    #[test]
    fn three_registers_for_binary() {
        let p = expand(&compile_tm(&binary_increment()).unwrap()).unwrap();
        assert_eq!(count_registers(&p).unwrap(), 3);
    }

    #[test]
    fn other_bases_use_a_fourth_register() {
        // decimal in, decimal out: the identity on digit strings
        let alpha: Vec<u32> = core::iter::once(SPACE).chain((0..10).map(digit_code)).collect();
        let mut rules = alloc::vec![(0, SPACE, 1, SPACE, Move::Right), (1, SPACE, 1, SPACE, Move::Halt)];
        for d in 0..10 {
            rules.push((1, digit_code(d), 1, digit_code(d), Move::Right));
        }
        let t = TuringMachine::from_head_rules(4, &["begin", "scan"], 0, &alpha, &rules);
        let p = expand(&compile_tm_bases(&t, 10, 10).unwrap()).unwrap();
        assert_eq!(count_registers(&p).unwrap(), 4);
        for x in [0i64, 7, 10, 1234, 90210] {
            assert_eq!(run(&p, &[x.into()], 1_000_000).outputs, [BigInt::from(x)]);
            assert_eq!(tm_run_bases(&t, &x.into(), 10, 10, 10_000).unwrap().output, x.into());
        }
        assert!(matches!(t.check_bases(16, 2), Err(AutomatonError::AlphabetTooSmall { .. })));
    }

    #[test]
    fn validation() {
        let mut t = identity();
        t.kappa = 2;
        assert!(t.validate().is_err());
        let mut t = identity();
        t.delta.insert((0, [SENTINEL, SPACE, SPACE]), (0, [SPACE; 3], Move::Halt));
        assert_eq!(t.validate(), Err(AutomatonError::ReservedSymbol(SENTINEL)));
    }
}
