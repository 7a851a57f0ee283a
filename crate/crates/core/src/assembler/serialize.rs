//! Flat programs back to `.amasm` text.

use alloc::format;
use alloc::string::String;

use crate::error::AsmError;
use crate::isa::Program;

/// One statement per line with labels in instruction order. Parsing and
/// expanding the output reproduces the instruction list.
pub fn serialize(p: &Program) -> String {
    let mut out = String::new();
    if let Some(name) = &p.name {
        let clean: String = name.chars().map(|c| if c.is_ascii_alphanumeric() || c == '_' { c } else { '_' }).collect();
        out.push_str(&format!("program {clean};\n"));
    }
    let at = p.labels_at();
    let prefix = |i: usize| -> String {
        at.get(&i).map(|ls| ls.iter().map(|l| format!("{l}: ")).collect()).unwrap_or_default()
    };
    for (i, instr) in p.instrs.iter().enumerate() {
        out.push_str(&format!("{}{instr};\n", prefix(i)));
    }
    let tail = prefix(p.instrs.len());
    if !tail.is_empty() {
        out.push_str(&format!("{tail};\n"));
    }
    out
}

/// `expand(parse(serialize(p)))`.
pub fn reassemble(p: &Program) -> Result<Program, AsmError> {
    super::assemble(&serialize(p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::isa::Instr;

    #[test]
    fn halt_only_serializes_to_halt() {
        let mut p = Program::halt_only();
        p.name = Some("h".into());
        assert_eq!(serialize(&p), "program h;\nhalt;\n");
        assert_eq!(reassemble(&p).unwrap().instrs, [Instr::Halt]);
    }
}
