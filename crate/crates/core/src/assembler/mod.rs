//! The `.amasm` language: parsing, expansion to flat programs, printing.

mod ast;
mod eval;
mod expand;
mod parse;
mod serialize;

pub use ast::{Cond, Expr, Stmt, StmtKind, StructuredProgram, Term, VarDecl};
pub use eval::{evaluate, EvalResult, EvalStatus};
pub use expand::{expand, expand_with_limit, DEFAULT_ENV_LIMIT};
pub use parse::parse;
pub use serialize::{reassemble, serialize};

use crate::error::AsmError;
use crate::isa::Program;

/// Parses and expands in one go.
pub fn assemble(text: &str) -> Result<Program, AsmError> {
    expand(&parse(text)?)
}
