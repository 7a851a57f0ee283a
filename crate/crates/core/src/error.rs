use alloc::string::String;
use alloc::vec::Vec;

use thiserror::Error;

use crate::isa::{IntVal, Label};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProgramError {
    #[error("instruction {index} jumps to unknown label `{label}`")]
    UnresolvedLabel { label: Label, index: usize },
    #[error("label `{label}` points past the end of the program (index {index})")]
    LabelOutOfRange { label: Label, index: usize },
}

/// Source position, 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

impl core::fmt::Display for Pos {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AsmError {
    #[error("{pos}: syntax error: {msg}")]
    Syntax { pos: Pos, msg: String },
    #[error("{pos}: unknown label `{label}`")]
    UnknownLabel { pos: Pos, label: String },
    #[error("{pos}: duplicate label `{label}`")]
    DuplicateLabel { pos: Pos, label: String },
    #[error("{pos}: `{name}` is not a declared bounded variable")]
    UndeclaredVariable { pos: Pos, name: String },
    #[error("{pos}: bounded variable `{name}` needs between 2 and 64 values, got {count}")]
    BadDomain { pos: Pos, name: String, count: usize },
    #[error("{pos}: {msg}")]
    Invalid { pos: Pos, msg: String },
    #[error("{pos}: coefficient {coef} of `{reg}` on its own right-hand side is not 0 or a signed power of two; add `using <reg>`")]
    NonPowerOfTwoSelf { pos: Pos, reg: String, coef: IntVal },
    #[error("{pos}: value {value} is outside the domain of bounded variable `{name}`")]
    OutOfDomain { pos: Pos, name: String, value: i64 },
    #[error("expansion needs {count} joint bounded-variable valuations, above the limit of {limit}")]
    Blowup { count: usize, limit: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FkError {
    #[error(transparent)]
    Program(#[from] ProgramError),
    #[error("instruction {index}: constant {constant} exceeds the expansion cap of {cap}")]
    ConstantTooLarge { index: usize, constant: IntVal, cap: u64 },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AutomatonError {
    #[error("base {0} is invalid; need at least 2")]
    InvalidBase(u32),
    #[error("state index {0} out of range")]
    BadState(usize),
    #[error("missing transitions for {0:?}")]
    MissingTransitions(Vec<(String, u32)>),
    #[error("tape symbol {symbol} does not fit in an alphabet of 2^{kappa} codes")]
    SymbolOutOfRange { symbol: u32, kappa: u32 },
    #[error("tape symbol code {0} is reserved")]
    ReservedSymbol(u32),
    #[error("digit code {code} for base {base} does not fit in 2^{kappa} tape codes")]
    AlphabetTooSmall { base: u32, kappa: u32, code: u32 },
    #[error("no transition for state `{state}` on window {window:?}")]
    NoTransition { state: String, window: [u32; 3] },
    #[error("turing machine did not halt within {0} steps")]
    StepLimit(u64),
    #[error("need between 2 and {max} inputs, got {got}")]
    InputCount { got: usize, max: usize },
    #[error("{0}")]
    Spec(String),
    #[error(transparent)]
    Asm(#[from] AsmError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error("need at least 6 rows, got {0}")]
    InsufficientRows(usize),
    #[error("sizes span {0:.1}x; need at least 32x")]
    InsufficientSpan(f64),
    #[error("sizes must be strictly increasing")]
    NotIncreasing,
    #[error("table is incomplete: a measurement hit the step limit")]
    Incomplete,
}
