//! Conversion to the constant-free cost model.
//!
//! The converted program first reads the constant 1 into a fresh register
//! and then replaces every constant operand by repeated additions or
//! subtractions of that register. Comparisons against a constant `k` shift
//! the register by `k - 1`, compare with the `one` register and shift back
//! on both outcomes.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec::Vec;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive};

use crate::error::FkError;
use crate::isa::{Instr, IntVal, Label, Program, RegId};

pub const DEFAULT_CONSTANT_CAP: u64 = 64;

/// Converts with the default constant cap.
pub fn to_fk_model(p: &Program) -> Result<Program, FkError> {
    to_fk_model_with_cap(p, DEFAULT_CONSTANT_CAP)
}

pub fn to_fk_model_with_cap(p: &Program, cap: u64) -> Result<Program, FkError> {
    p.validate()?;
    let existing = p.registers();
    let mut name = alloc::string::String::from("one");
    let mut n = 0;
    while existing.iter().any(|r| r.as_str() == name) {
        n += 1;
        name = format!("one{n}");
    }
    let one = RegId::new(name);

    let mut out = Vec::with_capacity(p.instrs.len() + 1);
    out.push(Instr::Read { dst: one.clone() });
    // first emitted index for each original instruction
    let mut starts = Vec::with_capacity(p.instrs.len() + 1);
    let mut trampolines: Vec<(Label, RegId, i64, Label)> = Vec::new();

    for (index, instr) in p.instrs.iter().enumerate() {
        starts.push(out.len());
        let small = |c: &IntVal| -> Result<i64, FkError> {
            match c.abs().to_u64() {
                Some(m) if m <= cap => Ok(c.to_i64().expect("within cap")),
                _ => Err(FkError::ConstantTooLarge {
                    index,
                    constant: c.clone(),
                    cap,
                }),
            }
        };
        match instr {
            Instr::AddRC { dst, a, c } => {
                let c = small(c)?;
                if c == 0 {
                    if dst != a {
                        out.push(Instr::AddRR { dst: dst.clone(), a: a.clone(), b: one.clone() });
                        out.push(Instr::SubRR { dst: dst.clone(), a: dst.clone(), b: one.clone() });
                    }
                } else {
                    let first = if c > 0 {
                        Instr::AddRR { dst: dst.clone(), a: a.clone(), b: one.clone() }
                    } else {
                        Instr::SubRR { dst: dst.clone(), a: a.clone(), b: one.clone() }
                    };
                    out.push(first);
                    shift(&mut out, dst, &one, c - c.signum());
                }
            }
            Instr::SubCR { dst, c, a } => {
                let c = small(c)?;
                // dst = 1 - a works whether or not dst aliases a
                out.push(Instr::SubRR { dst: dst.clone(), a: one.clone(), b: a.clone() });
                shift(&mut out, dst, &one, c - 1);
            }
            Instr::SetC { dst, c } => {
                let c = small(c)?;
                out.push(Instr::SubRR { dst: dst.clone(), a: dst.clone(), b: dst.clone() });
                shift(&mut out, dst, &one, c);
            }
            Instr::BranchRC { a, op, c, target } => {
                let k = small(c)?;
                let offset = k - 1;
                if offset == 0 {
                    out.push(Instr::BranchRR { a: a.clone(), op: *op, b: one.clone(), target: target.clone() });
                } else {
                    let tramp = format!("_fk{}", trampolines.len());
                    shift(&mut out, a, &one, -offset);
                    out.push(Instr::BranchRR { a: a.clone(), op: *op, b: one.clone(), target: tramp.clone() });
                    shift(&mut out, a, &one, offset);
                    trampolines.push((tramp, a.clone(), offset, target.clone()));
                }
            }
            other => out.push(other.clone()),
        }
    }
    starts.push(out.len());

    let mut labels: BTreeMap<Label, usize> = p.labels.iter().map(|(l, &i)| (l.clone(), starts[i])).collect();
    if !trampolines.is_empty() {
        if out.last().is_none_or(|i| i.falls_through()) {
            out.push(Instr::Halt);
        }
        for (tramp, reg, offset, target) in trampolines {
            labels.insert(tramp, out.len());
            shift(&mut out, &reg, &one, offset);
            out.push(Instr::Jump { target });
        }
    }

    let mut declared = p.declared_registers.clone();
    declared.push(one);
    Ok(Program {
        instrs: out,
        labels,
        name: p.name.clone(),
        declared_registers: declared,
    })
}

/// Adds `amount` copies of `one` to `reg` (subtracts when negative).
fn shift(out: &mut Vec<Instr>, reg: &RegId, one: &RegId, amount: i64) {
    for _ in 0..amount.unsigned_abs() {
        out.push(if amount > 0 {
            Instr::AddRR { dst: reg.clone(), a: reg.clone(), b: one.clone() }
        } else {
            Instr::SubRR { dst: reg.clone(), a: reg.clone(), b: one.clone() }
        });
    }
}

/// Inputs for the converted program: the constant 1 followed by the original inputs.
pub fn fk_inputs(inputs: &[IntVal]) -> Vec<IntVal> {
    let mut v = Vec::with_capacity(inputs.len() + 1);
    v.push(BigInt::one());
    v.extend_from_slice(inputs);
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::isa::{count_registers, validate_model, ModelFlavor, Relop};
    use crate::interpreter::run;
    use alloc::vec;

    fn r(s: &str) -> RegId {
        RegId::from(s)
    }

    #[test]
    fn adds_exactly_one_register() {
        let p = Program::new(vec![Instr::Read { dst: r("x") }, Instr::Write { src: r("x") }], BTreeMap::new());
        let q = to_fk_model(&p).unwrap();
        assert_eq!(count_registers(&q).unwrap(), count_registers(&p).unwrap() + 1);
        assert!(validate_model(&q, ModelFlavor::FloydKnuth).unwrap().is_empty());
    }

    #[test]
    fn fresh_register_avoids_collisions() {
        let p = Program::new(
            vec![Instr::Read { dst: r("one") }, Instr::AddRC { dst: r("one"), a: r("one"), c: 2.into() }, Instr::Write { src: r("one") }],
            BTreeMap::new(),
        );
        let q = to_fk_model(&p).unwrap();
        assert_eq!(count_registers(&q).unwrap(), 2);
        let out = run(&q, &fk_inputs(&[5.into()]), 1000);
        assert_eq!(out.outputs, vec![BigInt::from(7)]);
    }

    #[test]
    fn constant_comparison_restores_the_register_on_both_paths() {
        // if x >= 3 then write x else write (x - 5)
        let mut labels = BTreeMap::new();
        labels.insert("big".into(), 4);
        let p = Program::new(
            vec![
                Instr::Read { dst: r("x") },
                Instr::BranchRC { a: r("x"), op: Relop::Ge, c: 3.into(), target: "big".into() },
                Instr::AddRC { dst: r("x"), a: r("x"), c: (-5).into() },
                Instr::Write { src: r("x") },
                Instr::Write { src: r("x") },
            ],
            labels,
        );
        let q = to_fk_model(&p).unwrap();
        assert!(validate_model(&q, ModelFlavor::FloydKnuth).unwrap().is_empty());
        for x in -6i64..8 {
            let a = run(&p, &[x.into()], 10_000);
            let b = run(&q, &fk_inputs(&[x.into()]), 10_000);
            assert_eq!(a.outputs, b.outputs, "x = {x}");
        }
    }

    #[test]
    fn large_constants_are_refused() {
        let p = Program::new(vec![Instr::SetC { dst: r("x"), c: 65.into() }], BTreeMap::new());
        assert!(matches!(to_fk_model(&p), Err(FkError::ConstantTooLarge { .. })));
        assert!(to_fk_model_with_cap(&p, 100).is_ok());
    }

    #[test]
    fn negation_in_place() {
        let p = Program::new(
            vec![Instr::Read { dst: r("x") }, Instr::SubCR { dst: r("x"), c: 0.into(), a: r("x") }, Instr::Write { src: r("x") }],
            BTreeMap::new(),
        );
        let q = to_fk_model(&p).unwrap();
        assert_eq!(run(&q, &fk_inputs(&[9.into()]), 100).outputs, vec![BigInt::from(-9)]);
    }
}
