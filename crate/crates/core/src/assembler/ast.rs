//! Structured assembly: bounded variables, linear combinations, blocks.

use alloc::boxed::Box;
use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use crate::error::Pos;
use crate::isa::Relop;

/// `var <name> in {v1, ..., vk};`
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VarDecl {
    pub name: String,
    pub values: Vec<i64>,
    pub pos: Pos,
}

/// One summand: `coef * f1 * f2 * ...`. At most one factor may be a
/// register; the rest are bounded variables.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Term {
    pub coef: BigInt,
    pub factors: Vec<String>,
}

impl Term {
    pub fn constant(c: impl Into<BigInt>) -> Self {
        Term { coef: c.into(), factors: Vec::new() }
    }

    pub fn name(coef: impl Into<BigInt>, name: &str) -> Self {
        Term { coef: coef.into(), factors: alloc::vec![String::from(name)] }
    }
}

/// A sum of terms, kept in source order.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Expr {
    pub terms: Vec<Term>,
}

impl Expr {
    pub fn names(&self) -> impl Iterator<Item = &String> {
        self.terms.iter().flat_map(|t| t.factors.iter())
    }

    /// The expression is just one name with coefficient 1.
    pub fn as_single_name(&self) -> Option<&str> {
        match self.terms.as_slice() {
            [t] if t.coef.is_one() && t.factors.len() == 1 => Some(&t.factors[0]),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Cond {
    Cmp(Expr, Relop, Expr),
    /// `b in {..}` (or `notin` when `negated`) for a bounded variable.
    Member { var: String, values: Vec<i64>, negated: bool },
    And(Vec<Cond>),
    Or(Vec<Cond>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum StmtKind {
    Empty,
    /// `let dst = expr [using scratch]`; `dst` may be a register or a bounded variable.
    Let { dst: String, expr: Expr, using: Option<String> },
    /// Simultaneous assignment of bounded variables.
    LetTuple { dsts: Vec<String>, exprs: Vec<Expr> },
    /// `let (quot, num) = (floor(num / den), rem(num, den))`
    FloorDiv { quot: String, num: String, den: String },
    Read(String),
    Write(String),
    Goto(String),
    Halt,
    Swap(String, String),
    If { cond: Cond, then: Box<Stmt>, els: Option<Box<Stmt>> },
    Block(Vec<Stmt>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Stmt {
    pub labels: Vec<String>,
    pub kind: StmtKind,
    pub pos: Pos,
}

impl Stmt {
    pub fn new(kind: StmtKind) -> Self {
        Stmt { labels: Vec::new(), kind, pos: Pos::default() }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct StructuredProgram {
    pub name: Option<String>,
    pub decls: Vec<VarDecl>,
    pub body: Vec<Stmt>,
}

impl StructuredProgram {
    pub fn decl(&self, name: &str) -> Option<&VarDecl> {
        self.decls.iter().find(|d| d.name == name)
    }

    pub fn is_bounded(&self, name: &str) -> bool {
        self.decl(name).is_some()
    }

    /// Every statement, depth first.
    pub fn statements(&self) -> Vec<&Stmt> {
        fn walk<'a>(s: &'a Stmt, out: &mut Vec<&'a Stmt>) {
            out.push(s);
            match &s.kind {
                StmtKind::If { then, els, .. } => {
                    walk(then, out);
                    if let Some(e) = els {
                        walk(e, out);
                    }
                }
                StmtKind::Block(b) => b.iter().for_each(|s| walk(s, out)),
                _ => {}
            }
        }
        let mut out = Vec::new();
        self.body.iter().for_each(|s| walk(s, &mut out));
        out
    }

    /// Register names used anywhere, in first-use order. Bounded
    /// variables are excluded.
    pub fn registers(&self) -> Vec<String> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        let mut add = |n: &String| {
            if !self.is_bounded(n) && seen.insert(n.clone()) {
                out.push(n.clone());
            }
        };
        fn cond_names<'a>(c: &'a Cond, out: &mut Vec<&'a String>) {
            match c {
                Cond::Cmp(a, _, b) => out.extend(a.names().chain(b.names())),
                Cond::Member { var, .. } => out.push(var),
                Cond::And(cs) | Cond::Or(cs) => cs.iter().for_each(|c| cond_names(c, out)),
            }
        }
        for s in self.statements() {
            let mut names: Vec<&String> = Vec::new();
            match &s.kind {
                StmtKind::Let { dst, expr, using } => {
                    names.push(dst);
                    names.extend(expr.names());
                    // `using` only counts when the expansion actually needs it
                    if let Some(u) = using {
                        if needs_scratch(dst, expr) {
                            names.push(u);
                        }
                    }
                }
                StmtKind::LetTuple { dsts, exprs } => {
                    names.extend(dsts.iter());
                    exprs.iter().for_each(|e| names.extend(e.names()));
                }
                StmtKind::FloorDiv { quot, num, den } => names.extend([quot, num, den]),
                StmtKind::Read(r) | StmtKind::Write(r) => names.push(r),
                StmtKind::Swap(a, b) => names.extend([a, b]),
                StmtKind::If { cond, .. } => cond_names(cond, &mut names),
                _ => {}
            }
            names.into_iter().for_each(&mut add);
        }
        out
    }
}

/// Whether `dst = expr` has a self-coefficient that is not 0 or a signed
/// power of two when every bounded factor is ignored. Only literal
/// coefficients are inspected; callers with bounded factors resolve them
/// at expansion time.
fn needs_scratch(dst: &str, expr: &Expr) -> bool {
    let mut coef = BigInt::zero();
    for t in &expr.terms {
        if t.factors.len() == 1 && t.factors[0] == dst {
            coef += &t.coef;
        }
    }
    !is_signed_power_of_two_or_zero(&coef)
}

pub fn is_signed_power_of_two_or_zero(c: &BigInt) -> bool {
    if c.is_zero() {
        return true;
    }
    let m = c.abs();
    (&m & (&m - 1u8)).is_zero()
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // sign is printed by the enclosing expression
        let c = self.coef.abs();
        if self.factors.is_empty() {
            return write!(f, "{c}");
        }
        if !c.is_one() {
            write!(f, "{c}*")?;
        }
        for (i, n) in self.factors.iter().enumerate() {
            if i > 0 {
                f.write_str("*")?;
            }
            f.write_str(n)?;
        }
        Ok(())
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (i, t) in self.terms.iter().enumerate() {
            let neg = t.coef.is_negative();
            match (i, neg) {
                (0, true) => f.write_str("-")?,
                (0, false) => {}
                (_, true) => f.write_str(" - ")?,
                (_, false) => f.write_str(" + ")?,
            }
            write!(f, "{t}")?;
        }
        Ok(())
    }
}

fn write_set(f: &mut fmt::Formatter<'_>, values: &[i64]) -> fmt::Result {
    f.write_str("{")?;
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            f.write_str(", ")?;
        }
        write!(f, "{v}")?;
    }
    f.write_str("}")
}

impl fmt::Display for Cond {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cond::Cmp(a, op, b) => write!(f, "{a} {op} {b}"),
            Cond::Member { var, values, negated } => {
                write!(f, "{var} {} ", if *negated { "notin" } else { "in" })?;
                write_set(f, values)
            }
            Cond::And(cs) | Cond::Or(cs) => {
                let sep = if matches!(self, Cond::And(_)) { " and " } else { " or " };
                f.write_str("(")?;
                for (i, c) in cs.iter().enumerate() {
                    if i > 0 {
                        f.write_str(sep)?;
                    }
                    write!(f, "{c}")?;
                }
                f.write_str(")")
            }
        }
    }
}

struct Indented<'a>(&'a Stmt, usize);

impl fmt::Display for Indented<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let Indented(s, depth) = *self;
        for l in &s.labels {
            write!(f, "{l}: ")?;
        }
        match &s.kind {
            StmtKind::Empty => Ok(()),
            StmtKind::Let { dst, expr, using } => {
                write!(f, "let {dst} = {expr}")?;
                if let Some(u) = using {
                    write!(f, " using {u}")?;
                }
                Ok(())
            }
            StmtKind::LetTuple { dsts, exprs } => {
                f.write_str("let (")?;
                for (i, d) in dsts.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    f.write_str(d)?;
                }
                f.write_str(") = (")?;
                for (i, e) in exprs.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{e}")?;
                }
                f.write_str(")")
            }
            StmtKind::FloorDiv { quot, num, den } => {
                write!(f, "let ({quot}, {num}) = (floor({num} / {den}), rem({num}, {den}))")
            }
            StmtKind::Read(r) => write!(f, "read {r}"),
            StmtKind::Write(r) => write!(f, "write {r}"),
            StmtKind::Goto(l) => write!(f, "goto {l}"),
            StmtKind::Halt => f.write_str("halt"),
            StmtKind::Swap(a, b) => write!(f, "swap {a}, {b}"),
            StmtKind::If { cond, then, els } => {
                if els.is_some() && matches!(then.kind, StmtKind::If { els: None, .. }) {
                    // keep the else attached to this if
                    let wrapped = Stmt::new(StmtKind::Block(alloc::vec![(**then).clone()]));
                    write!(f, "if {cond} then {}", Indented(&wrapped, depth))?;
                } else {
                    write!(f, "if {cond} then {}", Indented(then, depth))?;
                }
                if let Some(e) = els {
                    write!(f, " else {}", Indented(e, depth))?;
                }
                Ok(())
            }
            StmtKind::Block(b) => {
                f.write_str("begin\n")?;
                for s in b {
                    writeln!(f, "{:width$}{};", "", Indented(s, depth + 1), width = 4 * (depth + 1))?;
                }
                write!(f, "{:width$}end", "", width = 4 * depth)
            }
        }
    }
}

/// Prints parseable `.amasm` source.
impl fmt::Display for StructuredProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(n) = &self.name {
            writeln!(f, "program {n};")?;
        }
        for d in &self.decls {
            write!(f, "var {} in ", d.name)?;
            write_set(f, &d.values)?;
            f.write_str(";\n")?;
        }
        for s in &self.body {
            writeln!(f, "{};", Indented(s, 0))?;
        }
        Ok(())
    }
}
