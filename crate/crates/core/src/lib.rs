//! Addition machines: unbounded-integer register machines whose only
//! operations are addition, subtraction, comparison, input and output.
//!
//! The crate is `no_std` and needs only an allocator.

#![no_std]

extern crate alloc;

pub mod analysis;
pub mod assembler;
pub mod automata;
pub mod corpus;
pub mod error;
pub mod fk;
pub mod interpreter;
pub mod isa;
pub mod oracle;

pub use error::{AnalysisError, AsmError, AutomatonError, FkError, ProgramError};
pub use fk::{fk_inputs, to_fk_model, to_fk_model_with_cap};
pub use interpreter::{run, trace, RunResult, RunStatus, DEFAULT_STEP_LIMIT};
pub use isa::{count_registers, validate_model, Instr, IntVal, ModelFlavor, Program, RegId, Relop};
