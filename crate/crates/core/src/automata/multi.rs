//! Automatic functions of several arguments via the convolution of their
//! digit strings.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write as _;

use num_bigint::BigInt;
use num_traits::Zero;

use super::dfa::digits;
use super::tm::{self, digit_code, Move, TuringMachine, SPACE};
use crate::assembler::{parse, StructuredProgram};
use crate::error::AutomatonError;

pub const DEFAULT_MAX_INPUTS: usize = 3;

/// `realizer` reads the convolution in the product of `input_bases` and
/// writes a number in base `output_base`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AutomaticFunctionSpec {
    pub input_bases: Vec<u32>,
    pub output_base: u32,
    pub realizer: TuringMachine,
}

impl AutomaticFunctionSpec {
    pub fn product_base(&self) -> u32 {
        self.input_bases.iter().product()
    }

    /// The intended value, computed by running the realizer directly.
    pub fn eval(&self, inputs: &[BigInt], step_limit: u64) -> Result<BigInt, AutomatonError> {
        let conv = convolution(inputs, &self.input_bases);
        tm::tm_run_bases(&self.realizer, &conv, self.product_base(), self.output_base, step_limit).map(|r| r.output)
    }
}

/// Pairs up digits at equal positions: digit `t` of the combined number
/// is `sum_s d_s * (i_1 * ... * i_{s-1})`, read in the product base.
/// Absolute values are used.
pub fn convolution(inputs: &[BigInt], bases: &[u32]) -> BigInt {
    let p: u32 = bases.iter().product();
    let mut total = BigInt::zero();
    let mut weight = 1u32;
    for (x, &i) in inputs.iter().zip(bases) {
        let same_digits = digits(x, i).into_iter().fold(BigInt::zero(), |acc, d| acc * p + d);
        total += same_digits * weight;
        weight *= i;
    }
    total
}

pub fn compile_automatic_multi(spec: &AutomaticFunctionSpec) -> Result<StructuredProgram, AutomatonError> {
    compile_automatic_multi_with_max(spec, DEFAULT_MAX_INPUTS)
}

/// Registers: `x` collects the convolution, `y`, `z`, `v` convert each
/// argument, `w` is scratch for bases that are not powers of two.
pub fn compile_automatic_multi_with_max(spec: &AutomaticFunctionSpec, max_inputs: usize) -> Result<StructuredProgram, AutomatonError> {
    let r = spec.input_bases.len();
    if !(2..=max_inputs).contains(&r) {
        return Err(AutomatonError::InputCount { got: r, max: max_inputs });
    }
    if let Some(&b) = spec.input_bases.iter().find(|&&b| b < 2) {
        return Err(AutomatonError::InvalidBase(b));
    }
    let p = spec.product_base();
    if p > 64 {
        return Err(AutomatonError::Spec(format!("product base {p} exceeds 64")));
    }
    let t = &spec.realizer;
    t.validate()?;
    t.check_bases(p, spec.output_base)?;

    let widest = *spec.input_bases.iter().max().expect("r >= 2");
    let mut s = String::new();
    let _ = writeln!(s, "// automatic function of {r} arguments in bases {:?}", spec.input_bases);
    s.push_str("program automatic;\n");
    s.push_str(&tm::decls(t, p));
    let _ = writeln!(s, "var e in {{0..{}}};", widest - 1);
    s.push_str("let x = 0;\n");
    let mut weight = 1u32;
    for (n, &i) in spec.input_bases.iter().enumerate() {
        let acc = if n == 0 { "x" } else { "v" };
        let l = format!("C{n}_");
        s.push_str("read y; if y < 0 then let y = -y;\n");
        if n > 0 {
            s.push_str("let v = 0;\n");
        }
        let with = |k: u32| if k.is_power_of_two() { String::new() } else { String::from(" using w") };
        // same digit loop as the automaton compiler, accumulating in base p
        let _ = writeln!(s, "let y = {i}*y + 1{}; let z = 1;", with(i));
        let _ = writeln!(s, "{l}2: if z > y then goto {l}3; let z = {i}*z{}; goto {l}2;", with(i));
        let _ = writeln!(s, "{l}3: let y = {i}*y{}; if y = z then goto {l}4;", with(i));
        let _ = writeln!(s, "let (e, y) = (floor(y / z), rem(y, z)); let {acc} = {p}*{acc} + e{}; goto {l}3;", with(p));
        let _ = write!(s, "{l}4: ");
        if n > 0 {
            let _ = write!(s, "let x = x + {weight}*v");
        }
        s.push_str(";\n");
        weight *= i;
    }
    s.push_str(&tm::body(t, p, spec.output_base, "S"));
    parse(&s).map_err(AutomatonError::from)
}

/// Largest digit at each position, written in the largest input base.
pub fn digitwise_max(bases: &[u32]) -> AutomaticFunctionSpec {
    let p: u32 = bases.iter().product();
    let j = *bases.iter().max().expect("at least one base");
    let mut kappa = 3;
    while digit_code(p - 1) >= 1 << kappa {
        kappa += 1;
    }
    let max_digit = |mut c: u32| {
        let mut m = 0;
        for &i in bases {
            m = m.max(c % i);
            c /= i;
        }
        m
    };
    let mut alphabet: Vec<u32> = (0..p).map(digit_code).collect();
    alphabet.push(SPACE);
    let mut rules = alloc::vec![(0, SPACE, 1, SPACE, Move::Right), (1, SPACE, 1, SPACE, Move::Halt)];
    // the product base is at least `j`, so every output digit is a symbol
    for c in 0..p {
        rules.push((0, digit_code(c), 0, digit_code(c), Move::Halt));
        rules.push((1, digit_code(c), 1, digit_code(max_digit(c)), Move::Right));
    }
    AutomaticFunctionSpec {
        input_bases: bases.to_vec(),
        output_base: j,
        realizer: TuringMachine::from_head_rules(kappa, &["begin", "map"], 0, &alphabet, &rules),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembler::expand;
    use crate::interpreter::run;
    use crate::isa::count_registers;

    #[test]
    fn convolution_of_the_worked_pair() {
        // 1101 in binary and 2323 in base five, combined in base ten
        let v = convolution(&[13.into(), 338.into()], &[2, 5]);
        assert_eq!(v, 5747.into());
        assert_eq!(BigInt::from(1101) + BigInt::from(2323) * 2, v);
    }

    #[test]
    fn binary_max_is_or() {
        let spec = digitwise_max(&[2, 2]);
        assert_eq!(spec.eval(&[13.into(), 10.into()], 10_000).unwrap(), 15.into());
        let p = expand(&compile_automatic_multi(&spec).unwrap()).unwrap();
        assert_eq!(count_registers(&p).unwrap(), 4);
        assert_eq!(run(&p, &[13.into(), 10.into()], 1_000_000).outputs, [BigInt::from(15)]);
        for a in 0..24i64 {
            for b in 0..24i64 {
                assert_eq!(run(&p, &[a.into(), b.into()], 1_000_000).outputs, [BigInt::from(a | b)], "{a} {b}");
            }
        }
    }

    #[test]
    fn mixed_bases_need_five_registers() {
        let spec = digitwise_max(&[2, 3]);
        let p = expand(&compile_automatic_multi(&spec).unwrap()).unwrap();
        assert_eq!(count_registers(&p).unwrap(), 5);
        for (a, b) in [(0i64, 0i64), (5, 7), (13, 100), (1, 80)] {
            let want = spec.eval(&[a.into(), b.into()], 100_000).unwrap();
            assert_eq!(run(&p, &[a.into(), b.into()], 1_000_000).outputs, [want]);
        }
    }

    #[test]
    fn input_count_is_capped() {
        let spec = digitwise_max(&[2, 2, 2, 2]);
        assert_eq!(compile_automatic_multi(&spec).unwrap_err(), AutomatonError::InputCount { got: 4, max: 3 });
        let one = digitwise_max(&[2]);
        assert!(compile_automatic_multi(&one).is_err());
    }

    #[test]
    fn three_binary_inputs() {
        let spec = digitwise_max(&[2, 2, 2]);
        let p = expand(&compile_automatic_multi(&spec).unwrap()).unwrap();
        assert_eq!(count_registers(&p).unwrap(), 4);
        assert_eq!(run(&p, &[1.into(), 2.into(), 8.into()], 1_000_000).outputs, [BigInt::from(11)]);
    }
}
