//! Primitive addition-machine instructions and flat programs.
//!
//! A flat [`Program`] is a list of [`Instr`] with symbolic labels. Every
//! instruction costs one step when executed. Registers hold unbounded
//! integers; the register count of a program is the number of distinct
//! register names mentioned by its instructions, so declared but unused
//! registers never count.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use num_bigint::BigInt;

use crate::error::ProgramError;

/// Unbounded signed integer held by a register.
pub type IntVal = BigInt;

/// Symbolic jump target.
pub type Label = String;

/// Name of a register.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RegId(String);

impl RegId {
    pub fn new(name: impl Into<String>) -> Self {
        RegId(name.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for RegId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for RegId {
    fn from(s: &str) -> Self {
        RegId(s.to_string())
    }
}

/// The six comparison operators.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Relop {
    Lt,
    Le,
    Eq,
    Ne,
    Ge,
    Gt,
}

impl Relop {
    pub const ALL: [Relop; 6] = [Relop::Lt, Relop::Le, Relop::Eq, Relop::Ne, Relop::Ge, Relop::Gt];

    pub fn eval<T: Ord + ?Sized>(self, a: &T, b: &T) -> bool {
        match self {
            Relop::Lt => a < b,
            Relop::Le => a <= b,
            Relop::Eq => a == b,
            Relop::Ne => a != b,
            Relop::Ge => a >= b,
            Relop::Gt => a > b,
        }
    }

    /// The operator that holds exactly when `self` does not.
    pub fn negate(self) -> Relop {
        match self {
            Relop::Lt => Relop::Ge,
            Relop::Le => Relop::Gt,
            Relop::Eq => Relop::Ne,
            Relop::Ne => Relop::Eq,
            Relop::Ge => Relop::Lt,
            Relop::Gt => Relop::Le,
        }
    }

    /// The operator obtained by exchanging the operands: `a op b` iff `b op.flip() a`.
    pub fn flip(self) -> Relop {
        match self {
            Relop::Lt => Relop::Gt,
            Relop::Le => Relop::Ge,
            Relop::Gt => Relop::Lt,
            Relop::Ge => Relop::Le,
            other => other,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Relop::Lt => "<",
            Relop::Le => "<=",
            Relop::Eq => "=",
            Relop::Ne => "!=",
            Relop::Ge => ">=",
            Relop::Gt => ">",
        }
    }
}

impl fmt::Display for Relop {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

/// One primitive instruction.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Instr {
    /// `dst = a + b`
    AddRR { dst: RegId, a: RegId, b: RegId },
    /// `dst = a - b`
    SubRR { dst: RegId, a: RegId, b: RegId },
    /// `dst = a + c`; subtraction of a constant uses a negative `c`.
    AddRC { dst: RegId, a: RegId, c: IntVal },
    /// `dst = c - a`
    SubCR { dst: RegId, c: IntVal, a: RegId },
    SetC { dst: RegId, c: IntVal },
    Read { dst: RegId },
    Write { src: RegId },
    BranchRR { a: RegId, op: Relop, b: RegId, target: Label },
    BranchRC { a: RegId, op: Relop, c: IntVal, target: Label },
    Jump { target: Label },
    Halt,
}

impl Instr {
    /// Registers read by this instruction, in operand order.
    pub fn reads(&self) -> Vec<&RegId> {
        match self {
            Instr::AddRR { a, b, .. } | Instr::SubRR { a, b, .. } => alloc::vec![a, b],
            Instr::AddRC { a, .. } | Instr::SubCR { a, .. } => alloc::vec![a],
            Instr::Write { src } => alloc::vec![src],
            Instr::BranchRR { a, b, .. } => alloc::vec![a, b],
            Instr::BranchRC { a, .. } => alloc::vec![a],
            Instr::SetC { .. } | Instr::Read { .. } | Instr::Jump { .. } | Instr::Halt => Vec::new(),
        }
    }

    /// The register written by this instruction, if any.
    pub fn writes(&self) -> Option<&RegId> {
        match self {
            Instr::AddRR { dst, .. }
            | Instr::SubRR { dst, .. }
            | Instr::AddRC { dst, .. }
            | Instr::SubCR { dst, .. }
            | Instr::SetC { dst, .. }
            | Instr::Read { dst } => Some(dst),
            _ => None,
        }
    }

    pub fn target(&self) -> Option<&Label> {
        match self {
            Instr::BranchRR { target, .. } | Instr::BranchRC { target, .. } | Instr::Jump { target } => {
                Some(target)
            }
            _ => None,
        }
    }

    pub fn target_mut(&mut self) -> Option<&mut Label> {
        match self {
            Instr::BranchRR { target, .. } | Instr::BranchRC { target, .. } | Instr::Jump { target } => {
                Some(target)
            }
            _ => None,
        }
    }

    /// The constant operand, if the instruction has one.
    pub fn constant(&self) -> Option<&IntVal> {
        match self {
            Instr::AddRC { c, .. } | Instr::SubCR { c, .. } | Instr::SetC { c, .. } | Instr::BranchRC { c, .. } => {
                Some(c)
            }
            _ => None,
        }
    }

    pub fn mnemonic(&self) -> &'static str {
        match self {
            Instr::AddRR { .. } => "addrr",
            Instr::SubRR { .. } => "subrr",
            Instr::AddRC { .. } => "addrc",
            Instr::SubCR { .. } => "subcr",
            Instr::SetC { .. } => "setc",
            Instr::Read { .. } => "read",
            Instr::Write { .. } => "write",
            Instr::BranchRR { .. } => "branchrr",
            Instr::BranchRC { .. } => "branchrc",
            Instr::Jump { .. } => "jump",
            Instr::Halt => "halt",
        }
    }

    /// Whether control can continue to the next instruction.
    pub fn falls_through(&self) -> bool {
        !matches!(self, Instr::Jump { .. } | Instr::Halt)
    }
}

/// Renders the instruction as an `.amasm` statement (without the `;`).
impl fmt::Display for Instr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Instr::AddRR { dst, a, b } => write!(f, "let {dst} = {a} + {b}"),
            Instr::SubRR { dst, a, b } => write!(f, "let {dst} = {a} - {b}"),
            Instr::AddRC { dst, a, c } => {
                if c.sign() == num_bigint::Sign::Minus {
                    write!(f, "let {dst} = {a} - {}", -c)
                } else {
                    write!(f, "let {dst} = {a} + {c}")
                }
            }
            Instr::SubCR { dst, c, a } => write!(f, "let {dst} = {c} - {a}"),
            Instr::SetC { dst, c } => write!(f, "let {dst} = {c}"),
            Instr::Read { dst } => write!(f, "read {dst}"),
            Instr::Write { src } => write!(f, "write {src}"),
            Instr::BranchRR { a, op, b, target } => write!(f, "if {a} {op} {b} then goto {target}"),
            Instr::BranchRC { a, op, c, target } => write!(f, "if {a} {op} {c} then goto {target}"),
            Instr::Jump { target } => write!(f, "goto {target}"),
            Instr::Halt => f.write_str("halt"),
        }
    }
}

/// Cost model: whether constants may appear as operands.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModelFlavor {
    /// Constants are free operands of add, subtract, set and compare.
    FreeConstants,
    /// No constant operands at all; the constant 1 is read into a register.
    FloydKnuth,
}

/// A flat, labelled instruction list.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Program {
    pub instrs: Vec<Instr>,
    /// Label name to instruction index. An index equal to `instrs.len()`
    /// denotes the end of the program.
    pub labels: BTreeMap<Label, usize>,
    pub name: Option<String>,
    /// Advisory only; [`count_registers`] is authoritative.
    pub declared_registers: Vec<RegId>,
}

impl Program {
    pub fn new(instrs: Vec<Instr>, labels: BTreeMap<Label, usize>) -> Self {
        Program {
            instrs,
            labels,
            ..Program::default()
        }
    }

    pub fn halt_only() -> Self {
        Program::new(alloc::vec![Instr::Halt], BTreeMap::new())
    }

    /// Checks that every jump target resolves.
    pub fn validate(&self) -> Result<(), ProgramError> {
        for (index, instr) in self.instrs.iter().enumerate() {
            if let Some(target) = instr.target() {
                match self.labels.get(target) {
                    Some(&at) if at <= self.instrs.len() => {}
                    Some(&at) => {
                        return Err(ProgramError::LabelOutOfRange {
                            label: target.clone(),
                            index: at,
                        })
                    }
                    None => {
                        return Err(ProgramError::UnresolvedLabel {
                            label: target.clone(),
                            index,
                        })
                    }
                }
            }
        }
        Ok(())
    }

    /// Distinct registers in order of first mention.
    pub fn registers(&self) -> Vec<RegId> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for instr in &self.instrs {
            let mentioned = instr.writes().into_iter().chain(instr.reads());
            for reg in mentioned {
                if seen.insert(reg.clone()) {
                    out.push(reg.clone());
                }
            }
        }
        out
    }

    /// Labels attached to each instruction index.
    pub fn labels_at(&self) -> BTreeMap<usize, Vec<&Label>> {
        let mut at: BTreeMap<usize, Vec<&Label>> = BTreeMap::new();
        for (label, &index) in &self.labels {
            at.entry(index).or_default().push(label);
        }
        at
    }

    /// Indices of every copy of a source label. Expansion names the first
    /// copy after the source label itself and later copies `<label>_e<k>`.
    pub fn label_copies(&self, base: &str) -> Vec<usize> {
        let prefix = alloc::format!("{base}_e");
        let mut out: Vec<usize> = self
            .labels
            .iter()
            .filter(|(name, _)| {
                name.as_str() == base
                    || name
                        .strip_prefix(prefix.as_str())
                        .is_some_and(|rest| !rest.is_empty() && rest.bytes().all(|c| c.is_ascii_digit()))
            })
            .map(|(_, &i)| i)
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Instruction list with targets replaced by their resolved indices;
    /// two programs with equal resolved lists behave identically.
    pub fn resolved(&self) -> Result<Vec<(Instr, Option<usize>)>, ProgramError> {
        self.validate()?;
        Ok(self
            .instrs
            .iter()
            .map(|instr| {
                let target = instr.target().map(|t| self.labels[t]);
                let mut plain = instr.clone();
                if let Some(t) = plain.target_mut() {
                    t.clear();
                }
                (plain, target)
            })
            .collect())
    }
}

/// Number of distinct registers mentioned by the program's instructions.
pub fn count_registers(p: &Program) -> Result<usize, ProgramError> {
    p.validate()?;
    Ok(p.registers().len())
}

/// An instruction that is illegal under a [`ModelFlavor`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub index: usize,
    pub constant: IntVal,
    pub mnemonic: &'static str,
}

/// Lists every instruction that uses a constant operand the flavor forbids.
pub fn validate_model(p: &Program, flavor: ModelFlavor) -> Result<Vec<Violation>, ProgramError> {
    p.validate()?;
    if flavor == ModelFlavor::FreeConstants {
        return Ok(Vec::new());
    }
    Ok(p.instrs
        .iter()
        .enumerate()
        .filter_map(|(index, instr)| {
            instr.constant().map(|c| Violation {
                index,
                constant: c.clone(),
                mnemonic: instr.mnemonic(),
            })
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn r(s: &str) -> RegId {
        RegId::from(s)
    }

    #[test]
    fn halt_only_has_no_registers() {
        assert_eq!(count_registers(&Program::halt_only()).unwrap(), 0);
    }

    #[test]
    fn unresolved_label_is_malformed() {
        let p = Program::new(vec![Instr::Jump { target: "nowhere".into() }], BTreeMap::new());
        assert!(matches!(count_registers(&p), Err(ProgramError::UnresolvedLabel { .. })));
    }

    #[test]
    fn counts_distinct_registers_only() {
        let p = Program::new(
            vec![
                Instr::Read { dst: r("x") },
                Instr::AddRR { dst: r("x"), a: r("x"), b: r("x") },
                Instr::AddRC { dst: r("y"), a: r("x"), c: 3.into() },
                Instr::Write { src: r("y") },
            ],
            BTreeMap::new(),
        );
        assert_eq!(count_registers(&p).unwrap(), 2);
    }

    #[test]
    fn fk_flavor_flags_constant_operands() {
        let p = Program::new(
            vec![
                Instr::Read { dst: r("x") },
                Instr::AddRC { dst: r("x"), a: r("x"), c: (-2).into() },
                Instr::Write { src: r("x") },
            ],
            BTreeMap::new(),
        );
        assert!(validate_model(&p, ModelFlavor::FreeConstants).unwrap().is_empty());
        let v = validate_model(&p, ModelFlavor::FloydKnuth).unwrap();
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].index, 1);
        assert_eq!(v[0].constant, (-2).into());
    }

    #[test]
    fn relop_negate_and_flip_are_consistent() {
        for op in Relop::ALL {
            for a in -2..=2 {
                for b in -2..=2 {
                    assert_eq!(op.negate().eval(&a, &b), !op.eval(&a, &b));
                    assert_eq!(op.flip().eval(&b, &a), op.eval(&a, &b));
                }
            }
        }
    }
}
