//! Finite automata and one-tape Turing machines, with compilers from
//! both to register programs.

mod dfa;
mod multi;
mod tm;

pub use dfa::{compile_dfa, dfa_run, digits, octal_xor, three_nonzero_decimal, Dfa};
pub use multi::{compile_automatic_multi, convolution, digitwise_max, AutomaticFunctionSpec, DEFAULT_MAX_INPUTS};
pub use tm::{
    binary_increment, compile_tm, compile_tm_bases, digit_code, identity, tm_run, tm_run_bases, Move, TmRun, TuringMachine, BITONE,
    BITZERO, SENTINEL, SPACE,
};
