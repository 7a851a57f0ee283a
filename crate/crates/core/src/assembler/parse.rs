//! Lexer and recursive-descent parser for `.amasm` text.

use alloc::boxed::Box;
use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use num_bigint::BigInt;
use num_traits::{One, Pow};

use super::ast::{Cond, Expr, Stmt, StmtKind, StructuredProgram, Term, VarDecl};
use crate::error::{AsmError, Pos};
use crate::isa::Relop;

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Int(BigInt),
    Sym(&'static str),
    Eof,
}

const SYMBOLS: [&str; 19] = [
    "<=", ">=", "!=", "<>", "==", ";", ",", "(", ")", "{", "}", "+", "-", "*", "/", ":", "=", "<", ">",
];
const EXTRA: [&str; 2] = ["^", "."];

fn ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

fn ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '\''
}

fn lex(src: &str) -> Result<Vec<(Tok, Pos)>, AsmError> {
    let mut out = Vec::new();
    let chars: Vec<char> = src.chars().collect();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    while i < chars.len() {
        let c = chars[i];
        let pos = Pos { line, col };
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'/') {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        if ident_start(c) {
            let s = i;
            while i < chars.len() && (ident_char(chars[i]) || (chars[i] == '.' && chars.get(i + 1).is_some_and(|&d| ident_char(d)))) {
                i += 1;
            }
            let word: String = chars[s..i].iter().collect();
            col += i - s;
            out.push((Tok::Ident(word), pos));
            continue;
        }
        if c.is_ascii_digit() {
            let s = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let digits: String = chars[s..i].iter().collect();
            col += i - s;
            let n = BigInt::parse_bytes(digits.as_bytes(), 10).expect("ascii digits");
            out.push((Tok::Int(n), pos));
            continue;
        }
        let rest: String = chars[i..chars.len().min(i + 2)].iter().collect();
        let sym = SYMBOLS.iter().chain(EXTRA.iter()).find(|s| rest.starts_with(**s));
        match sym {
            Some(s) => {
                i += s.len();
                col += s.len();
                out.push((Tok::Sym(s), pos));
            }
            None => {
                return Err(AsmError::Syntax { pos, msg: format!("unexpected character `{c}`") });
            }
        }
    }
    out.push((Tok::Eof, Pos { line, col }));
    Ok(out)
}

const KEYWORDS: [&str; 20] = [
    "program", "var", "in", "notin", "begin", "end", "if", "then", "else", "goto", "halt", "let", "read", "write",
    "using", "swap", "and", "or", "floor", "rem",
];

struct Parser {
    toks: Vec<(Tok, Pos)>,
    at: usize,
    bounded: BTreeSet<String>,
}

type PResult<T> = Result<T, AsmError>;

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].0
    }

    fn peek2(&self) -> &Tok {
        &self.toks[(self.at + 1).min(self.toks.len() - 1)].0
    }

    fn pos(&self) -> Pos {
        self.toks[self.at].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.at].0.clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn err<T>(&self, msg: impl Into<String>) -> PResult<T> {
        Err(AsmError::Syntax { pos: self.pos(), msg: msg.into() })
    }

    fn is_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(w) if w.eq_ignore_ascii_case(kw))
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if self.is_kw(kw) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_kw(&mut self, kw: &str) -> PResult<()> {
        if self.eat_kw(kw) {
            Ok(())
        } else {
            self.err(format!("expected `{kw}`, found {}", describe(self.peek())))
        }
    }

    fn is_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Sym(t) if *t == s)
    }

    fn eat_sym(&mut self, s: &str) -> bool {
        if self.is_sym(s) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_sym(&mut self, s: &str) -> PResult<()> {
        if self.eat_sym(s) {
            Ok(())
        } else {
            self.err(format!("expected `{s}`, found {}", describe(self.peek())))
        }
    }

    fn ident(&mut self) -> PResult<String> {
        match self.peek().clone() {
            Tok::Ident(w) if !is_keyword(&w) => {
                self.bump();
                Ok(w)
            }
            other => self.err(format!("expected a name, found {}", describe(&other))),
        }
    }

    fn int(&mut self) -> PResult<BigInt> {
        let neg = self.eat_sym("-");
        match self.bump() {
            Tok::Int(n) => Ok(if neg { -n } else { n }),
            other => {
                self.at -= 1;
                self.err(format!("expected an integer, found {}", describe(&other)))
            }
        }
    }

    fn small_int(&mut self) -> PResult<i64> {
        let pos = self.pos();
        let n = self.int()?;
        i64::try_from(n).map_err(|_| AsmError::Syntax { pos, msg: "bounded value out of range".to_string() })
    }

    fn int_set(&mut self) -> PResult<Vec<i64>> {
        self.expect_sym("{")?;
        let mut vals = Vec::new();
        if !self.is_sym("}") {
            loop {
                let lo = self.small_int()?;
                if self.eat_sym(".") {
                    self.expect_sym(".")?;
                    let hi = self.small_int()?;
                    vals.extend(lo..=hi);
                } else {
                    vals.push(lo);
                }
                if !self.eat_sym(",") {
                    break;
                }
            }
        }
        self.expect_sym("}")?;
        Ok(vals)
    }

    fn program(&mut self) -> PResult<StructuredProgram> {
        let mut sp = StructuredProgram::default();
        if self.eat_kw("program") {
            sp.name = Some(self.ident()?);
            self.expect_sym(";")?;
        }
        while self.is_kw("var") {
            let pos = self.pos();
            self.bump();
            let mut names = alloc::vec![self.ident()?];
            while self.eat_sym(",") {
                names.push(self.ident()?);
            }
            self.expect_kw("in")?;
            let values = self.int_set()?;
            self.expect_sym(";")?;
            for name in names {
                let mut uniq = values.clone();
                uniq.sort_unstable();
                uniq.dedup();
                if uniq.len() != values.len() || !(2..=64).contains(&values.len()) {
                    return Err(AsmError::BadDomain { pos, name, count: uniq.len() });
                }
                if sp.decl(&name).is_some() {
                    return Err(AsmError::Invalid { pos, msg: format!("bounded variable `{name}` declared twice") });
                }
                self.bounded.insert(name.clone());
                sp.decls.push(VarDecl { name, values: values.clone(), pos });
            }
        }
        if self.is_kw("begin") && self.top_level_block() {
            self.bump();
            sp.body = self.stmts_until_end()?;
            let end_pos = self.pos();
            self.expect_kw("end")?;
            let mut halt = Stmt::new(StmtKind::Halt);
            halt.pos = end_pos;
            sp.body.push(halt);
            while self.eat_sym(".") || self.eat_sym(";") {}
        }
        while *self.peek() != Tok::Eof {
            let s = self.stmt()?;
            sp.body.push(s);
            if *self.peek() != Tok::Eof {
                self.expect_sym(";")?;
            }
        }
        Ok(sp)
    }

    /// A leading `begin` whose matching `end` closes the whole file is the
    /// program bracket; its `end` halts.
    fn top_level_block(&self) -> bool {
        let mut depth = 0i32;
        for (i, (t, _)) in self.toks.iter().enumerate().skip(self.at) {
            if let Tok::Ident(w) = t {
                if w.eq_ignore_ascii_case("begin") {
                    depth += 1;
                } else if w.eq_ignore_ascii_case("end") {
                    depth -= 1;
                    if depth == 0 {
                        return self.toks[i + 1..]
                            .iter()
                            .all(|(t, _)| matches!(t, Tok::Eof | Tok::Sym(".") | Tok::Sym(";")));
                    }
                }
            }
        }
        false
    }

    fn stmts_until_end(&mut self) -> PResult<Vec<Stmt>> {
        let mut out = Vec::new();
        loop {
            if self.is_kw("end") {
                return Ok(out);
            }
            if *self.peek() == Tok::Eof {
                return self.err("missing `end`");
            }
            let s = self.stmt()?;
            out.push(s);
            if !self.eat_sym(";") && !self.is_kw("end") {
                return self.err(format!("expected `;` or `end`, found {}", describe(self.peek())));
            }
        }
    }

    fn stmt(&mut self) -> PResult<Stmt> {
        let mut labels = Vec::new();
        while let (Tok::Ident(w), Tok::Sym(":")) = (self.peek().clone(), self.peek2().clone()) {
            if is_keyword(&w) {
                break;
            }
            self.bump();
            self.bump();
            labels.push(w);
        }
        let pos = self.pos();
        let kind = self.stmt_kind()?;
        Ok(Stmt { labels, kind, pos })
    }

    fn stmt_kind(&mut self) -> PResult<StmtKind> {
        if self.is_sym(";") || self.is_kw("end") || self.is_kw("else") || *self.peek() == Tok::Eof {
            return Ok(StmtKind::Empty);
        }
        if self.eat_kw("read") {
            return Ok(StmtKind::Read(self.ident()?));
        }
        if self.eat_kw("write") {
            return Ok(StmtKind::Write(self.ident()?));
        }
        if self.eat_kw("goto") {
            return Ok(StmtKind::Goto(self.ident()?));
        }
        if self.eat_kw("halt") {
            return Ok(StmtKind::Halt);
        }
        if self.eat_kw("swap") {
            let a = self.ident()?;
            self.expect_sym(",")?;
            let b = self.ident()?;
            return Ok(StmtKind::Swap(a, b));
        }
        if self.eat_kw("begin") {
            let body = self.stmts_until_end()?;
            self.expect_kw("end")?;
            return Ok(StmtKind::Block(body));
        }
        if self.eat_kw("if") {
            let cond = self.cond()?;
            self.expect_kw("then")?;
            let then = Box::new(self.stmt()?);
            let els = if self.eat_kw("else") {
                Some(Box::new(self.stmt()?))
            } else {
                None
            };
            return Ok(StmtKind::If { cond, then, els });
        }
        self.eat_kw("let");
        if self.is_sym("(") {
            return self.tuple_let();
        }
        let dst = self.ident()?;
        self.expect_sym("=")?;
        let expr = self.expr()?;
        let using = if self.eat_kw("using") { Some(self.ident()?) } else { None };
        Ok(StmtKind::Let { dst, expr, using })
    }

    fn tuple_let(&mut self) -> PResult<StmtKind> {
        self.expect_sym("(")?;
        let mut dsts = alloc::vec![self.ident()?];
        while self.eat_sym(",") {
            dsts.push(self.ident()?);
        }
        self.expect_sym(")")?;
        self.expect_sym("=")?;
        self.expect_sym("(")?;
        if self.eat_kw("floor") {
            // (b, x) = (floor(x / y), rem(x, y))
            self.expect_sym("(")?;
            let num = self.ident()?;
            self.expect_sym("/")?;
            let den = self.ident()?;
            self.expect_sym(")")?;
            self.expect_sym(",")?;
            self.expect_kw("rem")?;
            self.expect_sym("(")?;
            let num2 = self.ident()?;
            if !self.eat_sym(",") {
                self.expect_sym("/")?;
            }
            let den2 = self.ident()?;
            self.expect_sym(")")?;
            self.expect_sym(")")?;
            if dsts.len() != 2 || dsts[1] != num || num2 != num || den2 != den {
                return self.err("division macro must read `(b, x) = (floor(x / y), rem(x, y))`");
            }
            let quot = dsts.swap_remove(0);
            return Ok(StmtKind::FloorDiv { quot, num, den });
        }
        let mut exprs = alloc::vec![self.expr()?];
        while self.eat_sym(",") {
            exprs.push(self.expr()?);
        }
        self.expect_sym(")")?;
        if exprs.len() != dsts.len() {
            return self.err(format!("{} targets but {} values", dsts.len(), exprs.len()));
        }
        Ok(StmtKind::LetTuple { dsts, exprs })
    }

    fn cond(&mut self) -> PResult<Cond> {
        let mut parts = alloc::vec![self.conj()?];
        while self.eat_kw("or") {
            parts.push(self.conj()?);
        }
        Ok(if parts.len() == 1 { parts.pop().unwrap() } else { Cond::Or(parts) })
    }

    fn conj(&mut self) -> PResult<Cond> {
        let mut parts = alloc::vec![self.cond_atom()?];
        while self.eat_kw("and") {
            parts.push(self.cond_atom()?);
        }
        Ok(if parts.len() == 1 { parts.pop().unwrap() } else { Cond::And(parts) })
    }

    fn cond_atom(&mut self) -> PResult<Cond> {
        if self.eat_sym("(") {
            let c = self.cond()?;
            self.expect_sym(")")?;
            return Ok(c);
        }
        if let (Tok::Ident(w), Tok::Ident(k)) = (self.peek().clone(), self.peek2().clone()) {
            let negated = k.eq_ignore_ascii_case("notin");
            if negated || k.eq_ignore_ascii_case("in") {
                let pos = self.pos();
                if !self.bounded.contains(&w) {
                    return Err(AsmError::UndeclaredVariable { pos, name: w });
                }
                self.bump();
                self.bump();
                let values = self.int_set()?;
                return Ok(Cond::Member { var: w, values, negated });
            }
        }
        let a = self.expr()?;
        let op = match self.bump() {
            Tok::Sym("<") => Relop::Lt,
            Tok::Sym("<=") => Relop::Le,
            Tok::Sym("=") | Tok::Sym("==") => Relop::Eq,
            Tok::Sym("!=") | Tok::Sym("<>") => Relop::Ne,
            Tok::Sym(">=") => Relop::Ge,
            Tok::Sym(">") => Relop::Gt,
            other => {
                self.at -= 1;
                return self.err(format!("expected a comparison, found {}", describe(&other)));
            }
        };
        let b = self.expr()?;
        Ok(Cond::Cmp(a, op, b))
    }

    fn expr(&mut self) -> PResult<Expr> {
        let mut terms = Vec::new();
        let mut neg = self.eat_sym("-");
        if !neg {
            self.eat_sym("+");
        }
        loop {
            let mut t = self.term()?;
            if neg {
                t.coef = -t.coef;
            }
            terms.push(t);
            if self.eat_sym("+") {
                neg = false;
            } else if self.eat_sym("-") {
                neg = true;
            } else {
                break;
            }
        }
        Ok(Expr { terms })
    }

    fn term(&mut self) -> PResult<Term> {
        let mut t = Term { coef: BigInt::one(), factors: Vec::new() };
        loop {
            // a signed literal factor, as in `x + -3*y`
            let negative = matches!((self.peek(), self.peek2()), (Tok::Sym("-"), Tok::Int(_)));
            if negative {
                self.bump();
                t.coef = -t.coef;
            }
            match self.peek().clone() {
                Tok::Int(n) => {
                    self.bump();
                    let v = if self.eat_sym("^") {
                        let pos = self.pos();
                        let e = match self.bump() {
                            Tok::Int(e) => u32::try_from(e).ok(),
                            _ => None,
                        }
                        .ok_or(AsmError::Syntax { pos, msg: "expected a small exponent".to_string() })?;
                        Pow::pow(n, e)
                    } else {
                        n
                    };
                    t.coef *= v;
                }
                Tok::Ident(_) => t.factors.push(self.ident()?),
                other => return self.err(format!("expected a term, found {}", describe(&other))),
            }
            if !self.eat_sym("*") {
                return Ok(t);
            }
        }
    }
}

fn is_keyword(w: &str) -> bool {
    KEYWORDS.iter().any(|k| k.eq_ignore_ascii_case(w))
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Ident(w) => format!("`{w}`"),
        Tok::Int(n) => format!("`{n}`"),
        Tok::Sym(s) => format!("`{s}`"),
        Tok::Eof => "end of input".to_string(),
    }
}

/// Parses and checks names: labels resolve and are unique, bounded
/// variables are used only where a bounded value makes sense.
pub fn parse(text: &str) -> Result<StructuredProgram, AsmError> {
    let toks = lex(text)?;
    let mut p = Parser { toks, at: 0, bounded: BTreeSet::new() };
    let sp = p.program()?;
    check(&sp)?;
    Ok(sp)
}

fn check(sp: &StructuredProgram) -> Result<(), AsmError> {
    let mut labels = BTreeSet::new();
    for s in sp.statements() {
        for l in &s.labels {
            if !labels.insert(l.as_str()) {
                return Err(AsmError::DuplicateLabel { pos: s.pos, label: l.clone() });
            }
        }
    }
    let invalid = |pos: Pos, msg: String| Err(AsmError::Invalid { pos, msg });
    for s in sp.statements() {
        let pos = s.pos;
        match &s.kind {
            StmtKind::Goto(l) if !labels.contains(l.as_str()) => {
                return Err(AsmError::UnknownLabel { pos, label: l.clone() });
            }
            StmtKind::Let { dst, expr, using } => {
                check_expr(sp, expr, pos)?;
                if sp.is_bounded(dst) {
                    if expr.terms.iter().flat_map(|t| &t.factors).any(|f| !sp.is_bounded(f)) {
                        return invalid(pos, format!("bounded variable `{dst}` cannot take a register value"));
                    }
                    if using.is_some() {
                        return invalid(pos, "`using` applies only to register assignments".into());
                    }
                }
                if let Some(u) = using {
                    if sp.is_bounded(u) || u == dst || expr.names().any(|n| n == u) {
                        return invalid(pos, format!("`{u}` cannot serve as scratch register here"));
                    }
                }
            }
            StmtKind::LetTuple { dsts, exprs } => {
                let mut seen = BTreeSet::new();
                for (d, e) in dsts.iter().zip(exprs) {
                    if !sp.is_bounded(d) {
                        return Err(AsmError::UndeclaredVariable { pos, name: d.clone() });
                    }
                    if !seen.insert(d) {
                        return invalid(pos, format!("`{d}` assigned twice"));
                    }
                    if let Some(f) = e.names().find(|f| !sp.is_bounded(f)) {
                        return invalid(pos, format!("register `{f}` in a bounded assignment"));
                    }
                }
            }
            StmtKind::FloorDiv { quot, num, den } => {
                let Some(d) = sp.decl(quot) else {
                    return Err(AsmError::UndeclaredVariable { pos, name: quot.clone() });
                };
                let k = d.values.iter().max().copied().unwrap_or(0) + 1;
                if (0..k).any(|v| !d.values.contains(&v)) {
                    return invalid(pos, format!("domain of `{quot}` must contain 0..{}", k - 1));
                }
                if sp.is_bounded(num) || sp.is_bounded(den) || num == den {
                    return invalid(pos, "division needs two distinct registers".into());
                }
            }
            StmtKind::Read(r) | StmtKind::Write(r) if sp.is_bounded(r) => {
                return invalid(pos, format!("bounded variable `{r}` cannot be read or written"));
            }
            StmtKind::Swap(a, b) if sp.is_bounded(a) || sp.is_bounded(b) || a == b => {
                return invalid(pos, "swap needs two distinct registers".into());
            }
            StmtKind::If { cond, .. } => check_cond(sp, cond, pos)?,
            _ => {}
        }
    }
    Ok(())
}

fn check_expr(sp: &StructuredProgram, e: &Expr, pos: Pos) -> Result<(), AsmError> {
    for t in &e.terms {
        if t.factors.iter().filter(|f| !sp.is_bounded(f)).count() > 1 {
            return Err(AsmError::Invalid { pos, msg: format!("term `{t}` multiplies two registers") });
        }
    }
    Ok(())
}

fn check_cond(sp: &StructuredProgram, c: &Cond, pos: Pos) -> Result<(), AsmError> {
    match c {
        Cond::Cmp(a, _, b) => {
            for side in [a, b] {
                check_expr(sp, side, pos)?;
                let regs = side.terms.iter().filter(|t| t.factors.iter().any(|f| !sp.is_bounded(f))).count();
                if regs > 0 && (side.terms.len() != 1 || side.terms[0].factors.len() != 1 || !side.terms[0].coef.is_one()) {
                    return Err(AsmError::Invalid {
                        pos,
                        msg: format!("comparison side `{side}` must be a single register or a constant"),
                    });
                }
            }
            Ok(())
        }
        Cond::Member { .. } => Ok(()),
        Cond::And(cs) | Cond::Or(cs) => cs.iter().try_for_each(|c| check_cond(sp, c, pos)),
    }
}
