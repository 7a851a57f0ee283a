//! Lowering of structured programs to flat instruction lists.
//!
//! Statements are first flattened to a linear list of operations with
//! explicit jumps. Bounded variables and `swap` renamings are then
//! compiled away by emitting one copy of each operation per reachable
//! environment (bounded valuation plus register renaming). Bounded
//! variables that are dead at a position are reset to their first value in
//! the environment key, which keeps the number of copies small.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::ast::{is_signed_power_of_two_or_zero, Cond, Expr, Stmt, StmtKind, StructuredProgram};
use crate::error::{AsmError, Pos};
use crate::isa::{Instr, Label, Program, RegId, Relop};

pub const DEFAULT_ENV_LIMIT: usize = 4096;

/// Expands with the default limit of 4096 environments.
pub fn expand(sp: &StructuredProgram) -> Result<Program, AsmError> {
    expand_with_limit(sp, DEFAULT_ENV_LIMIT)
}

pub fn expand_with_limit(sp: &StructuredProgram, env_limit: usize) -> Result<Program, AsmError> {
    let lowered = Lowering::run(sp)?;
    if sp.decls.len() > 64 {
        return Err(AsmError::Invalid { pos: sp.decls[64].pos, msg: "at most 64 bounded variables".into() });
    }
    let live = liveness(sp, &lowered.ops);
    let mut em = Emitter {
        sp,
        ir: &lowered,
        live,
        env_limit,
        envs: Vec::new(),
        env_ids: BTreeMap::new(),
        out: Vec::new(),
        bound: BTreeMap::new(),
        names: BTreeMap::new(),
        label_defs: Vec::new(),
        pending: BTreeSet::new(),
    };
    em.run()?;
    Ok(em.finish())
}

// ---------------------------------------------------------------------
// flattening

#[derive(Clone, Debug)]
enum Op {
    Lin { dst: usize, expr: Expr, using: Option<usize>, pos: Pos },
    BAssign { dsts: Vec<usize>, exprs: Vec<Expr>, free: bool, pos: Pos },
    /// Jump to `target` when `cond` differs from `negated`.
    Branch { cond: Cond, negated: bool, target: usize },
    Jump { target: usize, synthetic: bool },
    Read(usize),
    Write(usize),
    Halt,
    Swap(usize, usize),
}

struct Lowering<'a> {
    sp: &'a StructuredProgram,
    ops: Vec<Op>,
    regs: Vec<String>,
    label_pos: BTreeMap<String, usize>,
    gotos: Vec<(usize, String)>,
    /// Source labels by flattened position, in source order.
    pos_labels: BTreeMap<usize, Vec<String>>,
}

impl<'a> Lowering<'a> {
    fn run(sp: &'a StructuredProgram) -> Result<Lowered, AsmError> {
        let mut l = Lowering {
            sp,
            ops: Vec::new(),
            regs: Vec::new(),
            label_pos: BTreeMap::new(),
            gotos: Vec::new(),
            pos_labels: BTreeMap::new(),
        };
        for s in &sp.body {
            l.stmt(s)?;
        }
        for (at, label) in core::mem::take(&mut l.gotos) {
            let Some(&t) = l.label_pos.get(&label) else {
                return Err(AsmError::UnknownLabel { pos: Pos::default(), label });
            };
            match &mut l.ops[at] {
                Op::Jump { target, .. } | Op::Branch { target, .. } => *target = t,
                _ => unreachable!("goto fixup on a non-jump"),
            }
        }
        Ok(Lowered { ops: l.ops, regs: l.regs, pos_labels: l.pos_labels })
    }

    fn reg(&mut self, name: &str) -> usize {
        match self.regs.iter().position(|r| r == name) {
            Some(i) => i,
            None => {
                self.regs.push(name.into());
                self.regs.len() - 1
            }
        }
    }

    fn bvar(&self, name: &str, pos: Pos) -> Result<usize, AsmError> {
        self.sp
            .decls
            .iter()
            .position(|d| d.name == name)
            .ok_or_else(|| AsmError::UndeclaredVariable { pos, name: name.into() })
    }

    fn intern_expr(&mut self, e: &Expr) {
        for n in e.names() {
            if !self.sp.is_bounded(n) {
                self.reg(n);
            }
        }
    }

    fn intern_cond(&mut self, c: &Cond) {
        match c {
            Cond::Cmp(a, _, b) => {
                self.intern_expr(a);
                self.intern_expr(b);
            }
            Cond::Member { .. } => {}
            Cond::And(cs) | Cond::Or(cs) => cs.iter().for_each(|c| self.intern_cond(c)),
        }
    }

    fn stmt(&mut self, s: &Stmt) -> Result<(), AsmError> {
        let here = self.ops.len();
        for l in &s.labels {
            self.label_pos.insert(l.clone(), here);
            self.pos_labels.entry(here).or_default().push(l.clone());
        }
        let pos = s.pos;
        match &s.kind {
            StmtKind::Empty => {}
            StmtKind::Let { dst, expr, using } => {
                if self.sp.is_bounded(dst) {
                    let d = self.bvar(dst, pos)?;
                    self.ops.push(Op::BAssign { dsts: alloc::vec![d], exprs: alloc::vec![expr.clone()], free: false, pos });
                } else {
                    let d = self.reg(dst);
                    self.intern_expr(expr);
                    let using = using.as_ref().map(|u| self.reg(u));
                    self.ops.push(Op::Lin { dst: d, expr: expr.clone(), using, pos });
                }
            }
            StmtKind::LetTuple { dsts, exprs } => {
                let dsts = dsts.iter().map(|d| self.bvar(d, pos)).collect::<Result<_, _>>()?;
                self.ops.push(Op::BAssign { dsts, exprs: exprs.clone(), free: false, pos });
            }
            StmtKind::FloorDiv { quot, num, den } => {
                let b = self.bvar(quot, pos)?;
                let k = self.sp.decls[b].values.iter().max().copied().unwrap_or(0) + 1;
                let (x, y) = (self.reg(num), self.reg(den));
                let x_name = &self.regs[x];
                let y_name = &self.regs[y];
                let lt = Cond::Cmp(Expr::name(x_name), Relop::Lt, Expr::name(y_name));
                let sub = Expr { terms: alloc::vec![super::ast::Term::name(1, x_name), super::ast::Term::name(-1, y_name)] };
                let inc = Expr { terms: alloc::vec![super::ast::Term::name(1, quot), super::ast::Term::constant(1)] };
                self.ops.push(Op::BAssign { dsts: alloc::vec![b], exprs: alloc::vec![Expr::default()], free: true, pos });
                for _ in 1..k {
                    let branch_at = self.ops.len();
                    self.ops.push(Op::Branch { cond: lt.clone(), negated: false, target: 0 });
                    self.ops.push(Op::Lin { dst: x, expr: sub.clone(), using: None, pos });
                    self.ops.push(Op::BAssign { dsts: alloc::vec![b], exprs: alloc::vec![inc.clone()], free: false, pos });
                    let skip = self.ops.len();
                    if let Op::Branch { target, .. } = &mut self.ops[branch_at] {
                        *target = skip;
                    }
                }
            }
            StmtKind::Read(r) => {
                let r = self.reg(r);
                self.ops.push(Op::Read(r));
            }
            StmtKind::Write(r) => {
                let r = self.reg(r);
                self.ops.push(Op::Write(r));
            }
            StmtKind::Goto(l) => {
                self.gotos.push((self.ops.len(), l.clone()));
                self.ops.push(Op::Jump { target: 0, synthetic: false });
            }
            StmtKind::Halt => self.ops.push(Op::Halt),
            StmtKind::Swap(a, b) => {
                let (a, b) = (self.reg(a), self.reg(b));
                self.ops.push(Op::Swap(a, b));
            }
            StmtKind::If { cond, then, els } => {
                self.intern_cond(cond);
                if let (StmtKind::Goto(l), true, None) = (&then.kind, then.labels.is_empty(), els) {
                    self.gotos.push((self.ops.len(), l.clone()));
                    self.ops.push(Op::Branch { cond: cond.clone(), negated: false, target: 0 });
                    return Ok(());
                }
                let branch_at = self.ops.len();
                self.ops.push(Op::Branch { cond: cond.clone(), negated: true, target: 0 });
                self.stmt(then)?;
                let else_at = match els {
                    Some(e) => {
                        let jump_at = self.ops.len();
                        self.ops.push(Op::Jump { target: 0, synthetic: true });
                        let else_at = self.ops.len();
                        self.stmt(e)?;
                        let end = self.ops.len();
                        if let Op::Jump { target, .. } = &mut self.ops[jump_at] {
                            *target = end;
                        }
                        else_at
                    }
                    None => self.ops.len(),
                };
                if let Op::Branch { target, .. } = &mut self.ops[branch_at] {
                    *target = else_at;
                }
            }
            StmtKind::Block(b) => {
                for s in b {
                    self.stmt(s)?;
                }
            }
        }
        Ok(())
    }
}

impl Expr {
    fn name(n: &str) -> Expr {
        Expr { terms: alloc::vec![super::ast::Term::name(1, n)] }
    }
}

struct Lowered {
    ops: Vec<Op>,
    regs: Vec<String>,
    pos_labels: BTreeMap<usize, Vec<String>>,
}


// ---------------------------------------------------------------------
// bounded-variable liveness

fn expr_mask(sp: &StructuredProgram, e: &Expr) -> u64 {
    e.names()
        .filter_map(|n| sp.decls.iter().position(|d| &d.name == n))
        .fold(0, |m, i| m | (1u64 << i))
}

fn cond_mask(sp: &StructuredProgram, c: &Cond) -> u64 {
    match c {
        Cond::Cmp(a, _, b) => expr_mask(sp, a) | expr_mask(sp, b),
        Cond::Member { var, .. } => sp.decls.iter().position(|d| &d.name == var).map_or(0, |i| 1u64 << i),
        Cond::And(cs) | Cond::Or(cs) => cs.iter().fold(0, |m, c| m | cond_mask(sp, c)),
    }
}

/// Live-in set of bounded variables (one bit each) per position, with a
/// final entry for the end of the program.
fn liveness(sp: &StructuredProgram, ops: &[Op]) -> Vec<u64> {
    let n = ops.len();
    let mut uses = alloc::vec![0u64; n];
    let mut defs = alloc::vec![0u64; n];
    let mut succ: Vec<[Option<usize>; 2]> = alloc::vec![[None, None]; n];
    for (i, op) in ops.iter().enumerate() {
        match op {
            Op::Lin { expr, .. } => {
                uses[i] = expr_mask(sp, expr);
                succ[i] = [Some(i + 1), None];
            }
            Op::BAssign { dsts, exprs, .. } => {
                uses[i] = exprs.iter().fold(0, |m, e| m | expr_mask(sp, e));
                defs[i] = dsts.iter().fold(0, |m, &d| m | (1u64 << d));
                succ[i] = [Some(i + 1), None];
            }
            Op::Branch { cond, target, .. } => {
                uses[i] = cond_mask(sp, cond);
                succ[i] = [Some(i + 1), Some(*target)];
            }
            Op::Jump { target, .. } => succ[i] = [Some(*target), None],
            Op::Halt => {}
            Op::Read(_) | Op::Write(_) | Op::Swap(..) => succ[i] = [Some(i + 1), None],
        }
    }
    let mut live = alloc::vec![0u64; n + 1];
    loop {
        let mut changed = false;
        for i in (0..n).rev() {
            let out = succ[i].iter().flatten().fold(0, |m, &s| m | live[s]);
            let new = uses[i] | (out & !defs[i]);
            if new != live[i] {
                live[i] = new;
                changed = true;
            }
        }
        if !changed {
            return live;
        }
    }
}

// ---------------------------------------------------------------------
// product construction

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
struct Env {
    vals: Vec<i64>,
    /// Logical register index to physical register index.
    perm: Vec<usize>,
}

/// `(environment id, flattened position)`; ordered so that the copies of
/// the first environment are laid out first.
type Key = (usize, usize);

enum LabelRef {
    Key(Key),
    Index(usize),
}

/// A condition after bounded variables and constants are folded in.
enum Residual {
    Static(bool),
    Cmp(usize, Relop, Operand),
    And(Vec<Residual>),
    Or(Vec<Residual>),
}

enum Operand {
    Reg(usize),
    Const(BigInt),
}

struct Emitter<'a> {
    sp: &'a StructuredProgram,
    ir: &'a Lowered,
    live: Vec<u64>,
    env_limit: usize,
    envs: Vec<Env>,
    env_ids: BTreeMap<Env, usize>,
    out: Vec<Instr>,
    bound: BTreeMap<Key, usize>,
    names: BTreeMap<Key, String>,
    label_defs: Vec<(String, LabelRef)>,
    pending: BTreeSet<Key>,
}

impl<'a> Emitter<'a> {
    fn run(&mut self) -> Result<(), AsmError> {
        let initial = Env {
            vals: self.sp.decls.iter().map(|d| d.values[0]).collect(),
            perm: (0..self.ir.regs.len()).collect(),
        };
        let start = self.key(0, initial)?;
        self.pending.insert(start);
        while let Some(k) = self.pending.pop_first() {
            if !self.bound.contains_key(&k) {
                self.run_from(k)?;
            }
        }
        Ok(())
    }

    fn key(&mut self, pos: usize, mut env: Env) -> Result<Key, AsmError> {
        let live = self.live[pos];
        for (i, d) in self.sp.decls.iter().enumerate() {
            if live & (1u64 << i) == 0 {
                env.vals[i] = d.values[0];
            }
        }
        if let Some(&id) = self.env_ids.get(&env) {
            return Ok((id, pos));
        }
        let id = self.envs.len();
        if id + 1 > self.env_limit {
            return Err(AsmError::Blowup { count: id + 1, limit: self.env_limit });
        }
        self.envs.push(env.clone());
        self.env_ids.insert(env, id);
        Ok((id, pos))
    }

    fn name_for(&self, (env, pos): Key) -> String {
        match self.ir.pos_labels.get(&pos) {
            Some(ls) if env == 0 => ls[0].clone(),
            Some(ls) => format!("{}_e{env}", ls[0]),
            None => format!("_p{pos}_e{env}"),
        }
    }

    fn ensure_name(&mut self, k: Key) -> String {
        if let Some(n) = self.names.get(&k) {
            return n.clone();
        }
        let n = self.name_for(k);
        self.names.insert(k, n.clone());
        self.label_defs.push((n.clone(), LabelRef::Key(k)));
        n
    }

    /// Name of the copy `k`, scheduling it for emission if needed.
    fn label_of(&mut self, k: Key) -> Label {
        if !self.bound.contains_key(&k) {
            self.pending.insert(k);
        }
        self.ensure_name(k)
    }

    fn local_label(&mut self) -> Label {
        let n = format!("_s{}", self.label_defs.len());
        self.label_defs.push((n.clone(), LabelRef::Index(usize::MAX)));
        n
    }

    fn bind_local(&mut self, name: &str) {
        let at = self.out.len();
        if let Some((_, r)) = self.label_defs.iter_mut().rev().find(|(n, _)| n == name) {
            *r = LabelRef::Index(at);
        }
    }

    fn bind(&mut self, k: Key, at: usize) {
        self.bound.insert(k, at);
        self.pending.remove(&k);
        if self.ir.pos_labels.contains_key(&k.1) {
            self.ensure_name(k);
        }
    }

    fn emit(&mut self, waiting: &mut Vec<Key>, instr: Instr) {
        let at = self.out.len();
        for k in waiting.drain(..) {
            self.bind(k, at);
        }
        self.out.push(instr);
    }

    fn preg(&self, env: &Env, logical: usize) -> RegId {
        RegId::new(self.ir.regs[env.perm[logical]].clone())
    }

    fn bvalue(&self, env: &Env, name: &str) -> Option<i64> {
        self.sp.decls.iter().position(|d| d.name == name).map(|i| env.vals[i])
    }

    /// Folds bounded factors into coefficients. Terms that drop to
    /// coefficient 0 are removed; a literal constant 0 is kept so that
    /// `a + 0` still reads as a single copy instruction.
    fn terms(&self, env: &Env, e: &Expr) -> Vec<(Option<usize>, BigInt)> {
        let mut out = Vec::new();
        for t in &e.terms {
            let mut coef = t.coef.clone();
            let mut reg = None;
            for f in &t.factors {
                match self.bvalue(env, f) {
                    Some(v) => coef *= v,
                    None => reg = self.ir.regs.iter().position(|r| r == f),
                }
            }
            if !coef.is_zero() || t.factors.is_empty() {
                out.push((reg, coef));
            }
        }
        out
    }

    fn run_from(&mut self, start: Key) -> Result<(), AsmError> {
        let mut cur = start;
        let mut waiting: Vec<Key> = Vec::new();
        let mut emitted_any = false;
        loop {
            if let Some(&at) = self.bound.get(&cur) {
                for k in core::mem::take(&mut waiting) {
                    self.bind(k, at);
                }
                if emitted_any {
                    let l = self.label_of(cur);
                    self.emit(&mut waiting, Instr::Jump { target: l });
                }
                return Ok(());
            }
            if waiting.contains(&cur) {
                // a cycle through operations that emit nothing
                let l = self.label_of(cur);
                self.emit(&mut waiting, Instr::Jump { target: l });
                return Ok(());
            }
            waiting.push(cur);
            let (env_id, pos) = cur;
            let env = self.envs[env_id].clone();
            let Some(op) = self.ir.ops.get(pos) else {
                if self.pending.iter().any(|k| !waiting.contains(k)) {
                    self.emit(&mut waiting, Instr::Halt);
                } else {
                    let at = self.out.len();
                    for k in waiting.drain(..) {
                        self.bind(k, at);
                    }
                }
                return Ok(());
            };
            match op {
                Op::Lin { dst, expr, using, pos: spos } => {
                    let terms: Vec<(Option<RegId>, BigInt)> = self
                        .terms(&env, expr)
                        .into_iter()
                        .map(|(r, c)| (r.map(|r| self.preg(&env, r)), c))
                        .collect();
                    let dst = self.preg(&env, *dst);
                    let using = using.map(|u| self.preg(&env, u));
                    for instr in lower_lin(&dst, &terms, using.as_ref(), *spos)? {
                        self.emit(&mut waiting, instr);
                        emitted_any = true;
                    }
                    cur = self.key(pos + 1, env)?;
                }
                Op::BAssign { dsts, exprs, free, pos: spos } => {
                    let mut next = env.clone();
                    for (&d, e) in dsts.iter().zip(exprs) {
                        let decl = &self.sp.decls[d];
                        let mut v = BigInt::zero();
                        for (reg, c) in self.terms(&env, e) {
                            if reg.is_some() {
                                return Err(AsmError::Invalid { pos: *spos, msg: format!("register value assigned to `{}`", decl.name) });
                            }
                            v += c;
                        }
                        let v = v.to_i64().filter(|v| decl.values.contains(v)).ok_or_else(|| AsmError::OutOfDomain {
                            pos: *spos,
                            name: decl.name.clone(),
                            value: v.to_i64().unwrap_or(if v.is_negative() { i64::MIN } else { i64::MAX }),
                        })?;
                        next.vals[d] = v;
                    }
                    let unchanged = next == env;
                    let k = self.key(pos + 1, next)?;
                    // storing the value a variable already holds stays in this copy
                    if *free || unchanged {
                        cur = k;
                    } else {
                        let l = self.label_of(k);
                        self.emit(&mut waiting, Instr::Jump { target: l });
                        return Ok(());
                    }
                }
                Op::Branch { cond, negated, target, .. } => {
                    let (target, negated) = (*target, *negated);
                    match self.residual(&env, cond) {
                        Residual::Static(b) => {
                            let dest = if b != negated { target } else { pos + 1 };
                            cur = self.key(dest, env)?;
                        }
                        r => {
                            let k = self.key(target, env.clone())?;
                            let l = self.label_of(k);
                            self.emit_cond(&r, !negated, &l, &mut waiting);
                            emitted_any = true;
                            cur = self.key(pos + 1, env)?;
                        }
                    }
                }
                Op::Jump { target, synthetic } => {
                    let k = self.key(*target, env)?;
                    if *synthetic {
                        cur = k;
                    } else {
                        let l = self.label_of(k);
                        self.emit(&mut waiting, Instr::Jump { target: l });
                        return Ok(());
                    }
                }
                Op::Read(r) => {
                    let dst = self.preg(&env, *r);
                    self.emit(&mut waiting, Instr::Read { dst });
                    emitted_any = true;
                    cur = self.key(pos + 1, env)?;
                }
                Op::Write(r) => {
                    let src = self.preg(&env, *r);
                    self.emit(&mut waiting, Instr::Write { src });
                    emitted_any = true;
                    cur = self.key(pos + 1, env)?;
                }
                Op::Halt => {
                    self.emit(&mut waiting, Instr::Halt);
                    return Ok(());
                }
                Op::Swap(a, b) => {
                    let mut next = env;
                    next.perm.swap(*a, *b);
                    cur = self.key(pos + 1, next)?;
                }
            }
        }
    }

    fn side(&self, env: &Env, e: &Expr) -> Operand {
        let terms = self.terms(env, e);
        match terms.as_slice() {
            [(Some(r), c)] if c.is_one() => Operand::Reg(env.perm[*r]),
            _ => Operand::Const(terms.into_iter().map(|(_, c)| c).sum()),
        }
    }

    fn residual(&self, env: &Env, c: &Cond) -> Residual {
        match c {
            Cond::Cmp(a, op, b) => match (self.side(env, a), self.side(env, b)) {
                (Operand::Const(x), Operand::Const(y)) => Residual::Static(op.eval(&x, &y)),
                (Operand::Reg(a), b) => Residual::Cmp(a, *op, b),
                (Operand::Const(c), Operand::Reg(b)) => Residual::Cmp(b, op.flip(), Operand::Const(c)),
            },
            Cond::Member { var, values, negated } => {
                let v = self.bvalue(env, var).expect("checked at parse time");
                Residual::Static(values.contains(&v) != *negated)
            }
            Cond::And(cs) | Cond::Or(cs) => {
                let is_and = matches!(c, Cond::And(_));
                let mut parts = Vec::new();
                for c in cs {
                    match self.residual(env, c) {
                        Residual::Static(b) if b == is_and => {}
                        Residual::Static(b) => return Residual::Static(b),
                        r => parts.push(r),
                    }
                }
                match parts.len() {
                    0 => Residual::Static(is_and),
                    1 => parts.pop().unwrap(),
                    _ if is_and => Residual::And(parts),
                    _ => Residual::Or(parts),
                }
            }
        }
    }

    /// Emits branches that reach `target` exactly when `r` evaluates to
    /// `want`, and fall through otherwise.
    fn emit_cond(&mut self, r: &Residual, want: bool, target: &str, waiting: &mut Vec<Key>) {
        match r {
            Residual::Static(_) => unreachable!("static parts are folded away"),
            Residual::Cmp(a, op, b) => {
                let op = if want { *op } else { op.negate() };
                let a = RegId::new(self.ir.regs[*a].clone());
                let target = String::from(target);
                let instr = match b {
                    Operand::Reg(b) => Instr::BranchRR { a, op, b: RegId::new(self.ir.regs[*b].clone()), target },
                    Operand::Const(c) => Instr::BranchRC { a, op, c: c.clone(), target },
                };
                self.emit(waiting, instr);
            }
            Residual::And(parts) | Residual::Or(parts) => {
                // jump on the first decisive part; the last part decides alone
                let decisive = matches!(r, Residual::Or(_));
                if decisive == want {
                    for p in parts {
                        self.emit_cond(p, want, target, waiting);
                    }
                } else {
                    let skip = self.local_label();
                    let (last, init) = parts.split_last().expect("two or more parts");
                    for p in init {
                        self.emit_cond(p, !want, &skip, waiting);
                    }
                    self.emit_cond(last, want, target, waiting);
                    self.bind_local(&skip);
                }
            }
        }
    }

    fn finish(self) -> Program {
        let mut index_of = BTreeMap::new();
        let mut by_index: BTreeMap<usize, Vec<&String>> = BTreeMap::new();
        for (name, r) in &self.label_defs {
            let at = match r {
                LabelRef::Key(k) => self.bound[k],
                LabelRef::Index(i) => *i,
            };
            index_of.insert(name.clone(), at);
            by_index.entry(at).or_default().push(name);
        }
        let mut canonical: BTreeMap<String, String> = BTreeMap::new();
        let mut labels = BTreeMap::new();
        for (at, names) in &by_index {
            let chosen = names.iter().find(|n| !n.starts_with('_')).unwrap_or(&names[0]);
            for n in names {
                canonical.insert((*n).clone(), (*chosen).clone());
            }
            labels.insert((*chosen).clone(), *at);
        }
        let mut instrs = self.out;
        for i in &mut instrs {
            if let Some(t) = i.target_mut() {
                *t = canonical[t.as_str()].clone();
            }
        }
        Program {
            instrs,
            labels,
            name: self.sp.name.clone(),
            declared_registers: self.sp.registers().into_iter().map(RegId::new).collect(),
        }
    }
}

// ---------------------------------------------------------------------
// linear combinations

/// Instructions for `dst = Σ coef·reg + constant`, with `terms` in source
/// order and zero coefficients already removed.
pub(crate) fn lower_lin(
    dst: &RegId,
    terms: &[(Option<RegId>, BigInt)],
    using: Option<&RegId>,
    pos: Pos,
) -> Result<Vec<Instr>, AsmError> {
    use Instr::*;
    let d = || dst.clone();
    let one = BigInt::one();
    let m1 = -BigInt::one();
    // shapes that are a single primitive map to it directly
    let direct = match terms {
        [] => Some(SetC { dst: d(), c: BigInt::zero() }),
        [(None, c)] => Some(SetC { dst: d(), c: c.clone() }),
        [(Some(a), c)] if *c == one && a != dst => Some(AddRC { dst: d(), a: a.clone(), c: BigInt::zero() }),
        [(Some(a), c)] if *c == m1 => Some(SubCR { dst: d(), c: BigInt::zero(), a: a.clone() }),
        [(Some(a), ca), (Some(b), cb)] if *ca == one && *cb == one => Some(AddRR { dst: d(), a: a.clone(), b: b.clone() }),
        [(Some(a), ca), (Some(b), cb)] if *ca == one && *cb == m1 => Some(SubRR { dst: d(), a: a.clone(), b: b.clone() }),
        [(Some(a), ca), (Some(b), cb)] if *ca == m1 && *cb == one => Some(SubRR { dst: d(), a: b.clone(), b: a.clone() }),
        [(Some(a), ca), (None, c)] | [(None, c), (Some(a), ca)] if *ca == one => Some(AddRC { dst: d(), a: a.clone(), c: c.clone() }),
        [(Some(a), ca), (None, c)] | [(None, c), (Some(a), ca)] if *ca == m1 => Some(SubCR { dst: d(), c: c.clone(), a: a.clone() }),
        _ => None,
    };
    if let Some(i) = direct {
        return Ok(alloc::vec![i]);
    }

    let mut self_coef = BigInt::zero();
    let mut constant = BigInt::zero();
    let mut others: Vec<(RegId, BigInt)> = Vec::new();
    for (r, c) in terms {
        match r {
            None => constant += c,
            Some(r) if r == dst => self_coef += c,
            Some(r) => match others.iter_mut().find(|(o, _)| o == r) {
                Some((_, acc)) => *acc += c,
                None => others.push((r.clone(), c.clone())),
            },
        }
    }
    let mut pieces: Vec<(RegId, bool)> = Vec::new();
    for (r, c) in &others {
        let n = c.abs().to_usize().ok_or_else(|| AsmError::Invalid { pos, msg: format!("coefficient {c} is too large") })?;
        pieces.extend(core::iter::repeat_n((r.clone(), c.is_positive()), n));
    }
    let mut out = Vec::new();
    let mut constant_used = false;
    let mut rest = &pieces[..];

    if self_coef.is_zero() {
        match pieces.as_slice() {
            [] => {
                out.push(SetC { dst: d(), c: constant.clone() });
                constant_used = true;
            }
            [(a, true), (b, pb), ..] => {
                out.push(if *pb { AddRR { dst: d(), a: a.clone(), b: b.clone() } } else { SubRR { dst: d(), a: a.clone(), b: b.clone() } });
                rest = &pieces[2..];
            }
            [(a, false), (b, true), ..] => {
                out.push(SubRR { dst: d(), a: b.clone(), b: a.clone() });
                rest = &pieces[2..];
            }
            [(a, true), ..] => {
                out.push(AddRC { dst: d(), a: a.clone(), c: constant.clone() });
                constant_used = true;
                rest = &pieces[1..];
            }
            [(a, false), ..] => {
                out.push(SubCR { dst: d(), c: constant.clone(), a: a.clone() });
                constant_used = true;
                rest = &pieces[1..];
            }
        }
    } else {
        let magnitude = self_coef.abs();
        if self_coef.is_negative() {
            if magnitude.is_one() {
                out.push(SubCR { dst: d(), c: constant.clone(), a: d() });
                constant_used = true;
            } else {
                out.push(SubCR { dst: d(), c: BigInt::zero(), a: d() });
            }
        }
        if is_signed_power_of_two_or_zero(&magnitude) {
            for _ in 0..magnitude.bits() - 1 {
                out.push(AddRR { dst: d(), a: d(), b: d() });
            }
        } else {
            let Some(z) = using else {
                return Err(AsmError::NonPowerOfTwoSelf { pos, reg: dst.as_str().into(), coef: self_coef });
            };
            let k = magnitude.to_usize().ok_or_else(|| AsmError::Invalid { pos, msg: format!("coefficient {magnitude} is too large") })?;
            out.push(AddRC { dst: z.clone(), a: d(), c: BigInt::zero() });
            for _ in 1..k {
                out.push(AddRR { dst: d(), a: d(), b: z.clone() });
            }
        }
    }
    for (r, positive) in rest {
        out.push(if *positive { AddRR { dst: d(), a: d(), b: r.clone() } } else { SubRR { dst: d(), a: d(), b: r.clone() } });
    }
    if !constant_used && !constant.is_zero() {
        out.push(AddRC { dst: d(), a: d(), c: constant });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembler::{assemble, evaluate, parse, reassemble};
    use crate::interpreter::{run, RunStatus};
    use crate::isa::count_registers;
    use alloc::vec;

    const WITH_BIT: &str = "
        var b in {0, 1};
        read x; read y;
        if x < y then let b = 1 else let b = 0;
        let x = x + y; let y = x + x;
        let y = y + b;
        write y;";

    const HAND_OPTIMISED: &str = "
        L1: read x; read y;
        L2: if x < y then goto L5;
        L3: let x = x + y; let y = x + x;
        L4: goto L7;
        L5: let x = x + y; let y = x + x;
        L6: let y = y + 1;
        L7: write y;";

    fn ints(v: &[i64]) -> Vec<BigInt> {
        v.iter().map(|&x| BigInt::from(x)).collect()
    }

    #[test]
    fn bit_variable_matches_hand_optimised_copy() {
        let a = assemble(WITH_BIT).unwrap();
        let b = assemble(HAND_OPTIMISED).unwrap();
        assert_eq!(count_registers(&a).unwrap(), 2);
        for input in [[2, 5], [5, 2]] {
            let ra = run(&a, &ints(&input), 1000);
            let rb = run(&b, &ints(&input), 1000);
            assert_eq!(ra.outputs, rb.outputs);
            assert_eq!(ra.status, RunStatus::Halted);
        }
        assert_eq!(run(&a, &ints(&[2, 5]), 100).outputs, ints(&[15]));
        assert_eq!(run(&a, &ints(&[5, 2]), 100).outputs, ints(&[14]));
    }

    #[test]
    fn bounded_assignment_costs_one_jump() {
        // two reads, one branch, one jump for b, two adds, the constant add, write
        let a = assemble(WITH_BIT).unwrap();
        // reads, branch, jump into the b = 1 copy, three adds, jump back, write, halt
        assert_eq!(run(&a, &ints(&[2, 5]), 100).steps, 10);
        // b = 0 is already the value here, and adding b = 0 is free
        assert_eq!(run(&a, &ints(&[5, 2]), 100).steps, 7);
    }

    #[test]
    fn scaled_addition_is_repeated_addition() {
        let p = assemble("let x = x + 3*y;").unwrap();
        let y = RegId::from("y");
        let x = RegId::from("x");
        assert_eq!(p.instrs, vec![Instr::AddRR { dst: x.clone(), a: x.clone(), b: y.clone() }; 3]);
    }

    #[test]
    fn cost_law_for_linear_combinations() {
        let cases = [
            ("let x = x + 5*y;", 5),
            ("let x = x - 4*y;", 4),
            ("let x = 8*x;", 3),
            ("let x = 2*x + 1;", 2),
            ("let x = 4*x + 2*y + 3;", 5),
            ("let x = 3*x using z;", 3),
            ("let x = -x;", 1),
        ];
        for (src, cost) in cases {
            let p = assemble(src).unwrap();
            assert_eq!(p.instrs.len(), cost, "{src}");
            assert_eq!(run(&p, &[], 100).steps, cost as u64, "{src}");
        }
    }

    #[test]
    fn linear_combination_values() {
        let p = assemble("read x; read y; let x = 4*x - 3*y + 7; write x; let y = 5*y + x using z; write y;").unwrap();
        let r = run(&p, &ints(&[6, -2]), 100);
        assert_eq!(r.outputs, ints(&[37, 27]));
    }

    #[test]
    fn odd_self_coefficient_needs_scratch() {
        assert!(matches!(assemble("let x = 3*x;"), Err(AsmError::NonPowerOfTwoSelf { .. })));
        assert!(matches!(assemble("var b in {1, 3}; let b = 3; let x = b*x;"), Err(AsmError::NonPowerOfTwoSelf { .. })));
        // a power of two ignores the scratch register
        let p = assemble("let x = 4*x using z;").unwrap();
        assert_eq!(count_registers(&p).unwrap(), 1);
    }

    #[test]
    fn division_macro() {
        let src = "var b in {0..3}; read x; read y; let (b, x) = (floor(x / y), rem(x, y)); write x;
                   if b = 0 then goto W0; if b = 1 then goto W1; if b = 2 then goto W2;
                   let x = 3; write x; halt;
                   W0: let x = 0; write x; halt;
                   W1: let x = 1; write x; halt;
                   W2: let x = 2; write x; halt;";
        let p = assemble(src).unwrap();
        let r = run(&p, &ints(&[7, 2]), 1000);
        assert_eq!(r.outputs, ints(&[1, 3]));
        for (x, y) in [(0, 5), (5, 5), (11, 3), (14, 5)] {
            let r = run(&p, &ints(&[x, y]), 1000);
            assert_eq!(r.outputs, ints(&[x % y, x / y]), "{x} {y}");
        }
        assert_eq!(count_registers(&p).unwrap(), 2);
    }

    #[test]
    fn division_macro_cost_bound() {
        let p = assemble("var b in {0..3}; read x; read y; let (b, x) = (floor(x / y), rem(x, y));").unwrap();
        for (x, y) in [(0, 1), (7, 2), (9, 3), (3, 1)] {
            // two reads and the final halt are not part of the macro
            let steps = run(&p, &ints(&[x, y]), 1000).steps - 3;
            assert!(steps <= 9, "{x} {y}: {steps}");
        }
    }

    #[test]
    fn swap_compiles_to_renaming() {
        let src = "read x; read y; swap x, y; let x = x - y; write x;";
        let p = assemble(src).unwrap();
        assert_eq!(p.instrs.len(), 4);
        assert_eq!(run(&p, &ints(&[10, 3]), 100).outputs, ints(&[-7]));
    }

    #[test]
    fn swap_in_a_loop_reaches_a_fixed_point() {
        let src = "read n; let x = 1; let y = 0;
                   L: if n <= 0 then goto Done; let y = y + x; swap x, y; let n = n - 1; goto L;
                   Done: write y;";
        let sp = parse(src).unwrap();
        let p = expand(&sp).unwrap();
        for n in 0..10 {
            let expect = evaluate(&sp, &ints(&[n]), 10_000).unwrap().outputs;
            assert_eq!(run(&p, &ints(&[n]), 10_000).outputs, expect);
        }
    }

    #[test]
    fn compound_conditions() {
        let src = "read x; read y;
                   if (x > 0 and y > 0) or x = 7 then let z = 1 else let z = 2; write z;
                   if x < 0 or (y < 0 and x != 3) then let z = 3 else let z = 4; write z;";
        let sp = parse(src).unwrap();
        let p = expand(&sp).unwrap();
        for x in -2..9 {
            for y in -2..3 {
                let expect = evaluate(&sp, &ints(&[x, y]), 1000).unwrap().outputs;
                assert_eq!(run(&p, &ints(&[x, y]), 1000).outputs, expect, "{x} {y}");
            }
        }
    }

    #[test]
    fn out_of_domain_assignment_is_refused() {
        assert!(matches!(assemble("var a in {0, 1}; let a = 2;"), Err(AsmError::OutOfDomain { value: 2, .. })));
    }

    #[test]
    fn blowup_is_refused() {
        // a counter that is never reset needs a copy per value
        let src = "var a in {0..9}; L: let a = a + 1; if a < 9 then goto L; write x;";
        assert!(expand_with_limit(&parse(src).unwrap(), 10).is_ok());
        let err = expand_with_limit(&parse(src).unwrap(), 5).unwrap_err();
        assert!(matches!(err, AsmError::Blowup { limit: 5, .. }));
    }

    #[test]
    fn dead_bounded_values_share_a_copy() {
        let src = "var a in {0, 1}; read x; if x > 0 then let a = 1 else let a = 0; if a = 1 then let x = x + 1;
                   let a = 0; write x; L: read x; write x; goto L;";
        let p = assemble(src).unwrap();
        assert_eq!(p.instrs.iter().filter(|i| matches!(i, Instr::Read { .. })).count(), 2);
    }

    #[test]
    fn labels_name_every_copy() {
        let p = assemble(WITH_BIT.replace("let y = y + b", "M: let y = y + b").as_str()).unwrap();
        assert_eq!(p.label_copies("M").len(), 2);
    }

    #[test]
    fn round_trip_is_instruction_identical() {
        for src in [WITH_BIT, HAND_OPTIMISED, "read n; L: if n <= 0 then goto D; let n = n - 1; goto L; D: write n;"] {
            let p = assemble(src).unwrap();
            assert_eq!(reassemble(&p).unwrap().instrs, p.instrs, "{src}");
        }
    }

    #[test]
    fn empty_static_loop_becomes_a_self_jump() {
        let p = assemble("var a in {0, 1}; L: if a = 0 then goto L;").unwrap();
        assert_eq!(run(&p, &[], 50).status, RunStatus::StepLimit);
    }
}
