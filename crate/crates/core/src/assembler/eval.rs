//! Direct interpretation of structured programs.
//!
//! Bounded variables are ordinary tracked values here and `swap`
//! exchanges register contents, so this evaluator shares nothing with the
//! expansion beyond the syntax tree. It serves as the reference semantics.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use num_bigint::BigInt;
use num_traits::{ToPrimitive, Zero};

use super::ast::{Cond, Expr, Stmt, StmtKind, StructuredProgram};
use crate::error::AsmError;
use crate::isa::IntVal;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EvalStatus {
    Halted,
    InputExhausted,
    /// More statements executed than the fuel allowed.
    OutOfFuel,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EvalResult {
    pub outputs: Vec<IntVal>,
    pub status: EvalStatus,
}

enum Flow {
    Normal,
    Goto(String),
    Stop(EvalStatus),
}

struct Machine<'a> {
    sp: &'a StructuredProgram,
    regs: BTreeMap<String, BigInt>,
    bvals: BTreeMap<String, i64>,
    inputs: &'a [IntVal],
    cursor: usize,
    outputs: Vec<IntVal>,
    fuel: u64,
}

fn label_paths(list: &[Stmt], prefix: &mut Vec<usize>, out: &mut BTreeMap<String, Vec<usize>>) {
    for (i, s) in list.iter().enumerate() {
        prefix.push(i);
        stmt_paths(s, prefix, out);
        prefix.pop();
    }
}

fn stmt_paths(s: &Stmt, prefix: &mut Vec<usize>, out: &mut BTreeMap<String, Vec<usize>>) {
    for l in &s.labels {
        out.insert(l.clone(), prefix.clone());
    }
    match &s.kind {
        StmtKind::If { then, els, .. } => {
            prefix.push(0);
            stmt_paths(then, prefix, out);
            prefix.pop();
            if let Some(e) = els {
                prefix.push(1);
                stmt_paths(e, prefix, out);
                prefix.pop();
            }
        }
        StmtKind::Block(b) => label_paths(b, prefix, out),
        _ => {}
    }
}

impl Machine<'_> {
    fn value(&self, e: &Expr) -> BigInt {
        let mut total = BigInt::zero();
        for t in &e.terms {
            let mut v = t.coef.clone();
            for f in &t.factors {
                match self.bvals.get(f) {
                    Some(b) => v *= *b,
                    None => v *= self.regs.get(f).cloned().unwrap_or_default(),
                }
            }
            total += v;
        }
        total
    }

    fn holds(&self, c: &Cond) -> bool {
        match c {
            Cond::Cmp(a, op, b) => op.eval(&self.value(a), &self.value(b)),
            Cond::Member { var, values, negated } => values.contains(&self.bvals[var]) != *negated,
            Cond::And(cs) => cs.iter().all(|c| self.holds(c)),
            Cond::Or(cs) => cs.iter().any(|c| self.holds(c)),
        }
    }

    fn set_bounded(&mut self, s: &Stmt, name: &str, v: BigInt) -> Result<(), AsmError> {
        let decl = self.sp.decl(name).expect("checked at parse time");
        match v.to_i64().filter(|v| decl.values.contains(v)) {
            Some(v) => {
                self.bvals.insert(name.into(), v);
                Ok(())
            }
            None => Err(AsmError::OutOfDomain {
                pos: s.pos,
                name: name.into(),
                value: v.to_i64().unwrap_or(i64::MAX),
            }),
        }
    }

    fn exec_list(&mut self, list: &[Stmt], path: &[usize]) -> Result<Flow, AsmError> {
        let (first, sub) = match path.split_first() {
            Some((f, rest)) => (*f, rest),
            None => (0, &[][..]),
        };
        for (i, s) in list.iter().enumerate().skip(first) {
            let sub = if i == first { sub } else { &[][..] };
            match self.exec(s, sub)? {
                Flow::Normal => {}
                f => return Ok(f),
            }
        }
        Ok(Flow::Normal)
    }

    fn exec(&mut self, s: &Stmt, path: &[usize]) -> Result<Flow, AsmError> {
        if let Some((&branch, rest)) = path.split_first() {
            return match &s.kind {
                StmtKind::If { then, els, .. } => match (branch, els) {
                    (0, _) => self.exec(then, rest),
                    (_, Some(e)) => self.exec(e, rest),
                    _ => unreachable!("label path into a missing else"),
                },
                StmtKind::Block(b) => self.exec_list(b, path),
                _ => unreachable!("label path into a simple statement"),
            };
        }
        if self.fuel == 0 {
            return Ok(Flow::Stop(EvalStatus::OutOfFuel));
        }
        self.fuel -= 1;
        match &s.kind {
            StmtKind::Empty => {}
            StmtKind::Let { dst, expr, .. } => {
                let v = self.value(expr);
                if self.sp.is_bounded(dst) {
                    self.set_bounded(s, dst, v)?;
                } else {
                    self.regs.insert(dst.clone(), v);
                }
            }
            StmtKind::LetTuple { dsts, exprs } => {
                let vals: Vec<BigInt> = exprs.iter().map(|e| self.value(e)).collect();
                for (d, v) in dsts.iter().zip(vals) {
                    self.set_bounded(s, d, v)?;
                }
            }
            StmtKind::FloorDiv { quot, num, den } => {
                let k = self.sp.decl(quot).and_then(|d| d.values.iter().max().copied()).unwrap_or(0) + 1;
                let y = self.regs.get(den).cloned().unwrap_or_default();
                let mut x = self.regs.get(num).cloned().unwrap_or_default();
                let mut b = 0i64;
                for _ in 1..k {
                    if x >= y {
                        x -= &y;
                        b += 1;
                    }
                }
                self.regs.insert(num.clone(), x);
                self.bvals.insert(quot.clone(), b);
            }
            StmtKind::Read(r) => {
                let Some(v) = self.inputs.get(self.cursor) else {
                    return Ok(Flow::Stop(EvalStatus::InputExhausted));
                };
                self.cursor += 1;
                self.regs.insert(r.clone(), v.clone());
            }
            StmtKind::Write(r) => self.outputs.push(self.regs.get(r).cloned().unwrap_or_default()),
            StmtKind::Goto(l) => return Ok(Flow::Goto(l.clone())),
            StmtKind::Halt => return Ok(Flow::Stop(EvalStatus::Halted)),
            StmtKind::Swap(a, b) => {
                let va = self.regs.remove(a).unwrap_or_default();
                let vb = self.regs.remove(b).unwrap_or_default();
                self.regs.insert(a.clone(), vb);
                self.regs.insert(b.clone(), va);
            }
            StmtKind::If { cond, then, els } => {
                if self.holds(cond) {
                    return self.exec(then, &[]);
                } else if let Some(e) = els {
                    return self.exec(e, &[]);
                }
            }
            StmtKind::Block(b) => return self.exec_list(b, &[]),
        }
        Ok(Flow::Normal)
    }
}

/// Runs `sp` on `inputs`, executing at most `fuel` statements.
pub fn evaluate(sp: &StructuredProgram, inputs: &[IntVal], fuel: u64) -> Result<EvalResult, AsmError> {
    let mut paths = BTreeMap::new();
    label_paths(&sp.body, &mut Vec::new(), &mut paths);
    let mut m = Machine {
        sp,
        regs: BTreeMap::new(),
        bvals: sp.decls.iter().map(|d| (d.name.clone(), d.values[0])).collect(),
        inputs,
        cursor: 0,
        outputs: Vec::new(),
        fuel,
    };
    let mut path: Vec<usize> = Vec::new();
    let status = loop {
        match m.exec_list(&sp.body, &path)? {
            Flow::Normal => break EvalStatus::Halted,
            Flow::Stop(s) => break s,
            Flow::Goto(l) => path = paths[&l].clone(),
        }
    };
    Ok(EvalResult { outputs: m.outputs, status })
}
