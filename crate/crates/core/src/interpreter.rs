//! Unit-cost execution of flat programs.
//!
//! Every executed instruction adds exactly one step, including reads,
//! writes, jumps, taken and untaken branches and the final `halt`.
//! Registers start at zero. Running off the end of the instruction list
//! halts without charging a step.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use num_bigint::BigInt;
use num_traits::Zero;

use crate::isa::{Instr, IntVal, Program, RegId, Relop};

pub const DEFAULT_STEP_LIMIT: u64 = 100_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RunStatus {
    Halted,
    StepLimit,
    InputExhausted,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RunResult {
    pub outputs: Vec<IntVal>,
    pub steps: u64,
    pub status: RunStatus,
}

/// Register valuation plus control state of one execution.
#[derive(Clone, Debug)]
pub struct MachineState {
    pub regs: Vec<IntVal>,
    pub pc: usize,
    pub input_cursor: usize,
    pub outputs: Vec<IntVal>,
    pub steps: u64,
}

#[derive(Clone, Debug)]
enum Src {
    Reg(usize),
    Const(IntVal),
}

#[derive(Clone, Debug)]
enum Op {
    Add(usize, usize, Src),
    Sub(usize, Src, Src),
    Set(usize, IntVal),
    Read(usize),
    Write(usize),
    Branch(usize, Relop, Src, usize),
    Jump(usize),
    Halt,
}

/// A program lowered to register indices and resolved jump targets.
#[derive(Clone, Debug)]
pub struct Compiled {
    ops: Vec<Op>,
    pub registers: Vec<RegId>,
}

impl Compiled {
    /// Panics if a label does not resolve; call [`Program::validate`] first
    /// when the program comes from an untrusted source.
    pub fn new(p: &Program) -> Self {
        let registers = p.registers();
        let index: BTreeMap<&RegId, usize> = registers.iter().enumerate().map(|(i, r)| (r, i)).collect();
        let reg = |r: &RegId| index[r];
        let tgt = |l: &str| *p.labels.get(l).unwrap_or_else(|| panic!("unresolved label `{l}`"));
        let ops = p
            .instrs
            .iter()
            .map(|instr| match instr {
                Instr::AddRR { dst, a, b } => Op::Add(reg(dst), reg(a), Src::Reg(reg(b))),
                Instr::AddRC { dst, a, c } => Op::Add(reg(dst), reg(a), Src::Const(c.clone())),
                Instr::SubRR { dst, a, b } => Op::Sub(reg(dst), Src::Reg(reg(a)), Src::Reg(reg(b))),
                Instr::SubCR { dst, c, a } => Op::Sub(reg(dst), Src::Const(c.clone()), Src::Reg(reg(a))),
                Instr::SetC { dst, c } => Op::Set(reg(dst), c.clone()),
                Instr::Read { dst } => Op::Read(reg(dst)),
                Instr::Write { src } => Op::Write(reg(src)),
                Instr::BranchRR { a, op, b, target } => Op::Branch(reg(a), *op, Src::Reg(reg(b)), tgt(target)),
                Instr::BranchRC { a, op, c, target } => Op::Branch(reg(a), *op, Src::Const(c.clone()), tgt(target)),
                Instr::Jump { target } => Op::Jump(tgt(target)),
                Instr::Halt => Op::Halt,
            })
            .collect();
        Compiled { ops, registers }
    }

    pub fn initial_state(&self) -> MachineState {
        MachineState {
            regs: alloc::vec![BigInt::zero(); self.registers.len()],
            pc: 0,
            input_cursor: 0,
            outputs: Vec::new(),
            steps: 0,
        }
    }

    /// Executes one instruction. Returns `Some(status)` when execution
    /// stops before or at this instruction, otherwise the index of the
    /// register the instruction wrote, if any.
    pub fn step(&self, st: &mut MachineState, inputs: &[IntVal]) -> Result<Option<usize>, RunStatus> {
        let Some(op) = self.ops.get(st.pc) else {
            return Err(RunStatus::Halted);
        };
        let val = |regs: &[IntVal], s: &Src| -> IntVal {
            match s {
                Src::Reg(i) => regs[*i].clone(),
                Src::Const(c) => c.clone(),
            }
        };
        let mut next = st.pc + 1;
        let mut changed = None;
        match op {
            Op::Add(d, a, b) => {
                let v = match b {
                    Src::Reg(b) => &st.regs[*a] + &st.regs[*b],
                    Src::Const(c) => &st.regs[*a] + c,
                };
                st.regs[*d] = v;
                changed = Some(*d);
            }
            Op::Sub(d, a, b) => {
                let v = val(&st.regs, a) - val(&st.regs, b);
                st.regs[*d] = v;
                changed = Some(*d);
            }
            Op::Set(d, c) => {
                st.regs[*d] = c.clone();
                changed = Some(*d);
            }
            Op::Read(d) => {
                let Some(v) = inputs.get(st.input_cursor) else {
                    return Err(RunStatus::InputExhausted);
                };
                st.regs[*d] = v.clone();
                st.input_cursor += 1;
                changed = Some(*d);
            }
            Op::Write(s) => st.outputs.push(st.regs[*s].clone()),
            Op::Branch(a, rel, b, t) => {
                let taken = match b {
                    Src::Reg(b) => rel.eval(&st.regs[*a], &st.regs[*b]),
                    Src::Const(c) => rel.eval(&st.regs[*a], c),
                };
                if taken {
                    next = *t;
                }
            }
            Op::Jump(t) => next = *t,
            Op::Halt => {
                st.steps += 1;
                return Err(RunStatus::Halted);
            }
        }
        st.steps += 1;
        st.pc = next;
        Ok(changed)
    }

    pub fn run(&self, inputs: &[IntVal], step_limit: u64) -> RunResult {
        let mut st = self.initial_state();
        let status = loop {
            if st.steps >= step_limit && st.pc < self.ops.len() {
                break RunStatus::StepLimit;
            }
            if let Err(status) = self.step(&mut st, inputs) {
                break status;
            }
        };
        RunResult {
            outputs: st.outputs,
            steps: st.steps,
            status,
        }
    }
}

/// Runs `p` from a zeroed state on `inputs`.
pub fn run(p: &Program, inputs: &[IntVal], step_limit: u64) -> RunResult {
    Compiled::new(p).run(inputs, step_limit)
}

/// One executed instruction with the register file after it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraceEntry {
    pub step: u64,
    pub pc: usize,
    pub instr: Instr,
    /// Register index written by the instruction, if any.
    pub changed: Option<usize>,
    pub regs: Vec<IntVal>,
}

#[derive(Clone, Debug)]
pub struct Trace {
    pub registers: Vec<RegId>,
    pub entries: Vec<TraceEntry>,
    pub result: RunResult,
}

impl Trace {
    /// Register snapshot before the instruction at `pc` executed, for
    /// every time control reached it.
    pub fn snapshots_at(&self, pc: usize) -> Vec<BTreeMap<String, IntVal>> {
        let zero: Vec<IntVal> = alloc::vec![BigInt::zero(); self.registers.len()];
        let before = core::iter::once(&zero).chain(self.entries.iter().map(|e| &e.regs));
        before
            .zip(self.entries.iter())
            .filter(|(_, e)| e.pc == pc)
            .map(|(regs, _)| self.registers.iter().map(|r| String::from(r.as_str())).zip(regs.iter().cloned()).collect())
            .collect()
    }

    pub fn value<'e>(&self, entry: &'e TraceEntry, reg: &str) -> Option<&'e IntVal> {
        let i = self.registers.iter().position(|r| r.as_str() == reg)?;
        entry.regs.get(i)
    }
}

/// Runs `p` and records every executed instruction.
pub fn trace(p: &Program, inputs: &[IntVal], step_limit: u64) -> Trace {
    let compiled = Compiled::new(p);
    let mut st = compiled.initial_state();
    let mut entries = Vec::new();
    let status = loop {
        if st.steps >= step_limit && st.pc < p.instrs.len() {
            break RunStatus::StepLimit;
        }
        let pc = st.pc;
        let step = st.steps;
        match compiled.step(&mut st, inputs) {
            Ok(changed) => entries.push(TraceEntry {
                step,
                pc,
                instr: p.instrs[pc].clone(),
                changed,
                regs: st.regs.clone(),
            }),
            Err(status) => {
                if status == RunStatus::Halted && pc < p.instrs.len() {
                    entries.push(TraceEntry {
                        step,
                        pc,
                        instr: Instr::Halt,
                        changed: None,
                        regs: st.regs.clone(),
                    });
                }
                break status;
            }
        }
    };
    Trace {
        registers: compiled.registers,
        entries,
        result: RunResult {
            outputs: st.outputs,
            steps: st.steps,
            status,
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn r(s: &str) -> RegId {
        RegId::from(s)
    }

    #[test]
    fn halt_only_costs_one_step() {
        let res = run(&Program::halt_only(), &[], 10);
        assert_eq!(res, RunResult { outputs: vec![], steps: 1, status: RunStatus::Halted });
        assert_eq!(trace(&Program::halt_only(), &[], 10).entries.len(), 1);
    }

    #[test]
    fn empty_program_halts_without_cost() {
        let res = run(&Program::default(), &[], 10);
        assert_eq!(res.steps, 0);
        assert_eq!(res.status, RunStatus::Halted);
    }

    #[test]
    fn read_past_end_reports_partial_output() {
        let p = Program::new(
            vec![Instr::Read { dst: r("x") }, Instr::Write { src: r("x") }, Instr::Read { dst: r("x") }, Instr::Write { src: r("x") }],
            BTreeMap::new(),
        );
        let res = run(&p, &[4.into()], 100);
        assert_eq!(res.status, RunStatus::InputExhausted);
        assert_eq!(res.outputs, vec![BigInt::from(4)]);
        assert_eq!(res.steps, 2);
    }

    #[test]
    fn step_limit_stops_an_infinite_loop() {
        let mut labels = BTreeMap::new();
        labels.insert("top".into(), 0);
        let p = Program::new(vec![Instr::Jump { target: "top".into() }], labels);
        let res = run(&p, &[], 1000);
        assert_eq!(res.status, RunStatus::StepLimit);
        assert_eq!(res.steps, 1000);
    }

    #[test]
    fn uninitialised_registers_read_zero_and_big_values_stay_exact() {
        let p = Program::new(
            vec![
                Instr::Read { dst: r("x") },
                Instr::AddRR { dst: r("x"), a: r("x"), b: r("x") },
                Instr::SubRR { dst: r("x"), a: r("x"), b: r("y") },
                Instr::Write { src: r("x") },
            ],
            BTreeMap::new(),
        );
        let big = BigInt::from(1u8) << 3000usize;
        let res = run(&p, core::slice::from_ref(&big), 100);
        assert_eq!(res.outputs, vec![big << 1usize]);
        assert_eq!(res.steps, 4);
    }

    #[test]
    fn trace_length_equals_steps() {
        let mut labels = BTreeMap::new();
        labels.insert("loop".into(), 1);
        labels.insert("done".into(), 4);
        let p = Program::new(
            vec![
                Instr::Read { dst: r("x") },
                Instr::BranchRC { a: r("x"), op: Relop::Le, c: 0.into(), target: "done".into() },
                Instr::AddRC { dst: r("x"), a: r("x"), c: (-1).into() },
                Instr::Jump { target: "loop".into() },
                Instr::Write { src: r("x") },
                Instr::Halt,
            ],
            labels,
        );
        let t = trace(&p, &[5.into()], 1000);
        assert_eq!(t.entries.len() as u64, t.result.steps);
        assert_eq!(run(&p, &[5.into()], 1000), t.result);
        assert_eq!(t.snapshots_at(1).len(), 6);
    }
}
