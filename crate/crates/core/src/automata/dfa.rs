//! Digit automata read most significant digit first.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write as _;

use num_bigint::BigInt;
use num_traits::Signed;

use crate::assembler::{parse, StructuredProgram};
use crate::error::AutomatonError;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Dfa {
    pub base: u32,
    pub names: Vec<String>,
    pub start: usize,
    pub accept: BTreeSet<usize>,
    /// `delta[state][digit]`
    pub delta: Vec<Vec<usize>>,
}

impl Dfa {
    /// Checks the base, state indices and that `delta` is total.
    pub fn validate(&self) -> Result<(), AutomatonError> {
        if self.base < 2 {
            return Err(AutomatonError::InvalidBase(self.base));
        }
        let n = self.names.len();
        if self.start >= n {
            return Err(AutomatonError::BadState(self.start));
        }
        if let Some(&s) = self.accept.iter().find(|&&s| s >= n) {
            return Err(AutomatonError::BadState(s));
        }
        let mut missing = Vec::new();
        for (s, name) in self.names.iter().enumerate() {
            let row = self.delta.get(s).map(Vec::as_slice).unwrap_or(&[]);
            for d in 0..self.base {
                match row.get(d as usize) {
                    None => missing.push((name.clone(), d)),
                    Some(&t) if t >= n => return Err(AutomatonError::BadState(t)),
                    Some(_) => {}
                }
            }
        }
        if !missing.is_empty() {
            return Err(AutomatonError::MissingTransitions(missing));
        }
        Ok(())
    }

    /// The start state loops on 0 and is never re-entered otherwise.
    pub fn is_normalized(&self) -> bool {
        self.delta[self.start][0] == self.start
            && self
                .delta
                .iter()
                .enumerate()
                .all(|(s, row)| row.iter().enumerate().all(|(d, &t)| t != self.start || (s == self.start && d == 0)))
    }

    /// Adds a fresh start state when needed. The accepted set of digit
    /// strings without leading zeros does not change.
    pub fn normalize(&self) -> Dfa {
        if self.is_normalized() {
            return self.clone();
        }
        let fresh = self.names.len();
        let mut name = String::from("start");
        while self.names.contains(&name) {
            name.push('\'');
        }
        let mut d = self.clone();
        d.names.push(name);
        let mut row = self.delta[self.start].clone();
        row[0] = fresh;
        d.delta.push(row);
        if self.accept.contains(&self.start) {
            d.accept.insert(fresh);
        }
        d.start = fresh;
        d
    }

    /// Builds a DFA from a transition function on state indices.
    pub fn from_fn(base: u32, states: usize, start: usize, accept: impl IntoIterator<Item = usize>, f: impl Fn(usize, u32) -> usize) -> Dfa {
        Dfa {
            base,
            names: (0..states).map(|s| format!("q{s}")).collect(),
            start,
            accept: accept.into_iter().collect(),
            delta: (0..states).map(|s| (0..base).map(|d| f(s, d)).collect()).collect(),
        }
    }
}

/// Base-`k` digits of `|x|`, most significant first; zero has none.
pub fn digits(x: &BigInt, base: u32) -> Vec<u32> {
    let m = x.abs().to_biguint().expect("nonnegative");
    if m.bits() == 0 {
        return Vec::new();
    }
    m.to_radix_be(base).into_iter().map(u32::from).collect()
}

/// Whether the automaton accepts the digit string of `|x|`.
pub fn dfa_run(d: &Dfa, x: &BigInt) -> bool {
    let end = digits(x, d.base).into_iter().fold(d.start, |s, b| d.delta[s][b as usize]);
    d.accept.contains(&end)
}

/// The register program that decides membership: registers `x, y, z`
/// (`x, y` when the base is a power of two), bounded variables `a`
/// (state) and `b` (digit). Negative inputs are replaced by their
/// absolute value first.
pub fn compile_dfa(d: &Dfa) -> Result<StructuredProgram, AutomatonError> {
    d.validate()?;
    parse(&dfa_source(&d.normalize())).map_err(AutomatonError::from)
}

fn dfa_source(d: &Dfa) -> String {
    let k = d.base;
    let scratch = if k.is_power_of_two() { "" } else { " using z" };
    // a needs at least two values to be a bounded variable
    let states = d.names.len().max(2);
    let mut s = String::new();
    let _ = writeln!(s, "// digit automaton, base {k}, {} states", d.names.len());
    s.push_str("program dfa;\n");
    let _ = writeln!(s, "var a in {{0..{}}};", states - 1);
    let _ = writeln!(s, "var b in {{0..{}}};", k - 1);
    let _ = writeln!(s, "let a = {};", d.start);
    s.push_str("read x; if x < 0 then let x = -x;\n");
    let _ = writeln!(s, "let y = 1; let x = {k}*x + 1{scratch};");
    let _ = writeln!(s, "L2: if y > x then goto L3; let y = {k}*y{scratch}; goto L2;");
    let _ = writeln!(s, "L3: let x = {k}*x{scratch}; if x = y then goto L4;");
    s.push_str("let (b, x) = (floor(x / y), rem(x, y));\n");
    for (q, row) in d.delta.iter().enumerate() {
        // group the digits by target state
        let mut targets: Vec<(usize, Vec<u32>)> = Vec::new();
        for (digit, &t) in row.iter().enumerate() {
            match targets.iter_mut().find(|(u, _)| *u == t) {
                Some((_, ds)) => ds.push(digit as u32),
                None => targets.push((t, alloc::vec![digit as u32])),
            }
        }
        for (t, ds) in targets {
            let set = ds.iter().map(|d| format!("{d}")).collect::<Vec<_>>().join(", ");
            if t == q {
                let _ = writeln!(s, "if (a in {{{q}}} and b in {{{set}}}) then goto L3;");
            } else {
                let _ = writeln!(s, "if (a in {{{q}}} and b in {{{set}}}) then begin let a = {t}; goto L3 end;");
            }
        }
    }
    s.push_str("L4: ");
    let acc: Vec<String> = d.accept.iter().map(|a| format!("{a}")).collect();
    if acc.is_empty() {
        s.push_str("let x = 0;\n");
    } else if acc.len() == d.names.len() {
        s.push_str("let x = 1;\n");
    } else {
        let _ = writeln!(s, "if a in {{{}}} then let x = 1 else let x = 0;", acc.join(", "));
    }
    s.push_str("write x;\n");
    s
}

/// Accepts iff the exclusive or of all octal digits is 3, 5 or 6.
pub fn octal_xor() -> Dfa {
    Dfa::from_fn(8, 8, 0, [3, 5, 6], |s, d| s ^ d as usize)
}

/// Accepts iff exactly three decimal digits are nonzero.
pub fn three_nonzero_decimal() -> Dfa {
    Dfa::from_fn(10, 5, 0, [3], |s, d| if d == 0 { s } else { (s + 1).min(4) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembler::expand;
    use crate::interpreter::run;
    use crate::isa::count_registers;
    use alloc::vec;

    fn compiled_output(d: &Dfa, x: i64) -> BigInt {
        let p = expand(&compile_dfa(d).unwrap()).unwrap();
        let r = run(&p, &[x.into()], 1_000_000);
        assert_eq!(r.outputs.len(), 1);
        r.outputs[0].clone()
    }

    #[test]
    fn fixture_values() {
        let t = three_nonzero_decimal();
        assert!(dfa_run(&t, &537.into()));
        assert!(!dfa_run(&t, &507.into()));
        assert!(!dfa_run(&t, &0.into()));
        assert!(dfa_run(&octal_xor(), &29.into()));
        assert!(!dfa_run(&octal_xor(), &0.into()));
    }

    #[test]
    fn normalization_adds_a_start_only_when_needed() {
        assert!(three_nonzero_decimal().is_normalized());
        let o = octal_xor();
        assert!(!o.is_normalized());
        let n = o.normalize();
        assert!(n.is_normalized());
        assert_eq!(n.names.len(), 9);
        for x in 0..5000i64 {
            assert_eq!(dfa_run(&o, &x.into()), dfa_run(&n, &x.into()));
        }
    }

    #[test]
    fn compiled_programs_answer_like_the_automaton() {
        assert_eq!(compiled_output(&octal_xor(), 29), 1.into());
        assert_eq!(compiled_output(&three_nonzero_decimal(), 537), 1.into());
        assert_eq!(compiled_output(&three_nonzero_decimal(), 507), 0.into());
        assert_eq!(compiled_output(&three_nonzero_decimal(), 0), 0.into());
        assert_eq!(compiled_output(&three_nonzero_decimal(), -537), 1.into());
    }

    #[test]
    fn register_counts_follow_the_base() {
        let o = expand(&compile_dfa(&octal_xor()).unwrap()).unwrap();
        let t = expand(&compile_dfa(&three_nonzero_decimal()).unwrap()).unwrap();
        assert_eq!(count_registers(&o).unwrap(), 2);
        assert_eq!(count_registers(&t).unwrap(), 3);
    }

    #[test]
    fn start_acceptance_decides_zero() {
        let d = Dfa::from_fn(2, 2, 0, [0], |_, b| b as usize);
        assert_eq!(compiled_output(&d, 0), 1.into());
        assert_eq!(compiled_output(&d, 2), 1.into());
        assert_eq!(compiled_output(&d, 3), 0.into());
    }

    #[test]
    fn single_state_automata_compile() {
        let all = Dfa::from_fn(3, 1, 0, [0], |_, _| 0);
        let none = Dfa::from_fn(3, 1, 0, [], |_, _| 0);
        assert_eq!(compiled_output(&all, 17), 1.into());
        assert_eq!(compiled_output(&none, 17), 0.into());
    }

    #[test]
    fn missing_transitions_are_listed() {
        let mut d = three_nonzero_decimal();
        d.delta[2].truncate(8);
        match d.validate() {
            Err(AutomatonError::MissingTransitions(m)) => assert_eq!(m, vec![("q2".into(), 8), ("q2".into(), 9)]),
            other => panic!("{other:?}"),
        }
        d.base = 1;
        assert_eq!(d.validate(), Err(AutomatonError::InvalidBase(1)));
    }
}
