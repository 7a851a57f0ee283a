use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use addmach::acceptance::{self, dfa_fixtures, register_table};
use addmach::spec_files::{parse_dfa, parse_tm};
use addmach_core::analysis::{assert_linear, compare_entry, measure_entry, measure_scaling, status_name, step_cap, ScalingTable, DEFAULT_EPS};
use addmach_core::assembler::{assemble, expand, reassemble, serialize};
use addmach_core::automata::{compile_dfa, compile_tm_bases};
use addmach_core::corpus::{self, ones};
use addmach_core::oracle::bit_length;
use addmach_core::{count_registers, fk_inputs, run, to_fk_model, trace, IntVal, RunStatus, DEFAULT_STEP_LIMIT};
use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "addmach", version, about = "Assemble, run and verify addition machine programs")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Parse and expand a program; prints its register count.
    Asm {
        file: PathBuf,
        /// Print the flat instruction listing.
        #[arg(long, conflicts_with = "roundtrip")]
        expand: bool,
        /// Check that printing and re-reading gives the same instructions.
        #[arg(long)]
        roundtrip: bool,
    },
    /// Run a program; reads the source from stdin when no file (or `-`) is given.
    Run {
        file: Option<PathBuf>,
        /// Comma-separated decimal integers.
        #[arg(long, allow_hyphen_values = true, value_delimiter = ',')]
        inputs: Vec<String>,
        /// Write an execution trace to stderr.
        #[arg(long, value_enum)]
        trace: Option<TraceFormat>,
        #[arg(long)]
        limit: Option<u64>,
        #[arg(long, value_enum, default_value = "this")]
        model: Model,
    },
    /// Print the source of a corpus program.
    Gen { name: String },
    /// Compile a `.dfa` automaton file.
    CompileDfa { spec: PathBuf },
    /// Compile a `.tm` machine file.
    CompileTm {
        spec: PathBuf,
        /// Input and output base, e.g. `10,10`.
        #[arg(long, value_delimiter = ',', num_args = 2)]
        bases: Option<Vec<u32>>,
    },
    /// Measure steps over a ladder of input sizes and fit a line.
    Bench {
        name: String,
        /// `lo:hi:xF`
        #[arg(long, default_value = "64:4096:x2")]
        sizes: String,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Verify one program against its oracle, or run the acceptance suite with `all`.
    Check {
        name: String,
        #[arg(long, default_value_t = acceptance::DEFAULT_SEED)]
        seed: u64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum TraceFormat {
    Tsv,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Model {
    /// Constants allowed as operands.
    This,
    /// Constant-free version with the 1 read first.
    Fk,
}

/// Exit 1 means a program or claim failed; everything in `Err` is exit 2.
enum Outcome {
    Ok,
    Failed,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.cmd) {
        Ok(Outcome::Ok) => ExitCode::SUCCESS,
        Ok(Outcome::Failed) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(cmd: Cmd) -> Result<Outcome> {
    match cmd {
        Cmd::Asm { file, expand: show, roundtrip } => asm(&file, show, roundtrip),
        Cmd::Run { file, inputs, trace, limit, model } => run_cmd(file.as_deref(), &inputs, trace, limit, model),
        Cmd::Gen { name } => {
            let e = corpus::entry(&name).ok_or_else(|| anyhow!("unknown program {name:?}; known: {}", entry_names()))?;
            print!("{}", e.source);
            Ok(Outcome::Ok)
        }
        Cmd::CompileDfa { spec } => {
            let d = parse_dfa(&read_file(&spec)?).with_context(|| spec.display().to_string())?;
            print!("{}", compile_dfa(&d)?);
            Ok(Outcome::Ok)
        }
        Cmd::CompileTm { spec, bases } => {
            let t = parse_tm(&read_file(&spec)?).with_context(|| spec.display().to_string())?;
            let (i, j) = bases.map(|b| (b[0], b[1])).unwrap_or((2, 2));
            print!("{}", compile_tm_bases(&t, i, j)?);
            Ok(Outcome::Ok)
        }
        Cmd::Bench { name, sizes, csv } => bench(&name, &sizes, csv.as_deref()),
        Cmd::Check { name, seed } => check(&name, seed),
    }
}

fn entry_names() -> String {
    corpus::ENTRIES.iter().map(|e| e.name).collect::<Vec<_>>().join(", ")
}

fn read_file(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn step_limit(flag: Option<u64>) -> Result<u64> {
    if let Some(n) = flag {
        return Ok(n);
    }
    match std::env::var("ADDMACH_STEP_LIMIT") {
        Ok(v) => v.trim().parse().with_context(|| format!("ADDMACH_STEP_LIMIT={v:?} is not a step count")),
        Err(_) => Ok(DEFAULT_STEP_LIMIT),
    }
}

fn asm(file: &Path, show: bool, roundtrip: bool) -> Result<Outcome> {
    let p = assemble(&read_file(file)?).with_context(|| file.display().to_string())?;
    if roundtrip {
        let back = reassemble(&p).context("printed listing does not re-assemble")?;
        if back.instrs != p.instrs {
            eprintln!("round trip changed the instruction list");
            return Ok(Outcome::Failed);
        }
        println!("ok: {} instructions", p.instrs.len());
    } else if show {
        print!("{}", serialize(&p));
    } else {
        println!("{} instructions, {} registers", p.instrs.len(), count_registers(&p)?);
    }
    Ok(Outcome::Ok)
}

fn run_cmd(file: Option<&Path>, inputs: &[String], tr: Option<TraceFormat>, limit: Option<u64>, model: Model) -> Result<Outcome> {
    let src = match file {
        Some(f) if f != Path::new("-") => read_file(f)?,
        _ => {
            let mut s = String::new();
            io::stdin().read_to_string(&mut s).context("cannot read stdin")?;
            s
        }
    };
    let mut p = assemble(&src)?;
    let mut inputs: Vec<IntVal> = inputs
        .iter()
        .filter(|s| !s.trim().is_empty())
        .map(|s| s.trim().parse().with_context(|| format!("{s:?} is not an integer")))
        .collect::<Result<_>>()?;
    if model == Model::Fk {
        p = to_fk_model(&p)?;
        inputs = fk_inputs(&inputs);
    }
    let limit = step_limit(limit)?;
    let result = match tr {
        None => run(&p, &inputs, limit),
        Some(TraceFormat::Tsv) => {
            let t = trace(&p, &inputs, limit);
            let mut err = io::stderr().lock();
            writeln!(err, "step\tpc\tmnemonic\tchanged\tvalue")?;
            for e in &t.entries {
                let (reg, val) = match e.changed {
                    Some(r) => (t.registers[r].to_string(), e.regs[r].to_string()),
                    None => (String::new(), String::new()),
                };
                writeln!(err, "{}\t{}\t{}\t{reg}\t{val}", e.step, e.pc, e.instr.mnemonic())?;
            }
            t.result
        }
    };
    let mut out = io::stdout().lock();
    for v in &result.outputs {
        writeln!(out, "{v}")?;
    }
    match result.status {
        RunStatus::Halted => Ok(Outcome::Ok),
        s => {
            eprintln!("{} after {} steps", status_name(s), result.steps);
            Ok(Outcome::Failed)
        }
    }
}

fn parse_sizes(s: &str) -> Result<Vec<u64>> {
    let parts: Vec<&str> = s.split(':').collect();
    let [lo, hi, f] = parts[..] else { bail!("sizes must look like 64:4096:x2") };
    let lo: u64 = lo.parse().context("bad lower size")?;
    let hi: u64 = hi.parse().context("bad upper size")?;
    let f: u64 = f.strip_prefix('x').unwrap_or(f).parse().context("bad growth factor")?;
    if lo == 0 || f < 2 || hi < lo {
        bail!("sizes need 0 < lo <= hi and a factor of at least 2");
    }
    Ok(addmach_core::analysis::geometric_sizes(lo, hi, f))
}

fn bench(name: &str, sizes: &str, csv: Option<&Path>) -> Result<Outcome> {
    let sizes = parse_sizes(sizes)?;
    let table: ScalingTable = if let Some(e) = corpus::entry(name) {
        measure_entry(e, &sizes)
    } else if let Some((_, d)) = dfa_fixtures().into_iter().find(|(n, _)| *n == name) {
        let p = expand(&compile_dfa(&d)?)?;
        measure_scaling(name, &p, &sizes, |n| vec![ones(n)], |x| bit_length(&x[0]), step_limit(None)?)
    } else {
        bail!("unknown program {name:?}; known: {}, dfa-octal-xor, dfa-three-nonzero", entry_names());
    };
    if let Some(path) = csv {
        fs::write(path, table.to_csv()).with_context(|| format!("cannot write {}", path.display()))?;
    }
    for r in &table.rows {
        println!("n={} steps={} status={}", r.n, r.steps, status_name(r.status));
    }
    let cap = step_cap(name).unwrap_or(f64::INFINITY);
    let report = assert_linear(&table, DEFAULT_EPS, cap)?;
    print!("{report}");
    Ok(if report.pass { Outcome::Ok } else { Outcome::Failed })
}

fn check(name: &str, seed: u64) -> Result<Outcome> {
    if name == "all" {
        println!("{:<22} {:>9} {:>12}", "program", "registers", "constant-free");
        for r in register_table().map_err(|e| anyhow!(e))? {
            println!("{:<22} {:>9} {:>12}", r.program, r.registers, r.fk_registers);
        }
        println!();
        let results = acceptance::run_all(seed);
        for r in &results {
            println!("{r}");
        }
        let failed = results.iter().filter(|r| !r.passed).count();
        println!("{} of {} criteria passed", results.len() - failed, results.len());
        return Ok(if failed == 0 { Outcome::Ok } else { Outcome::Failed });
    }
    if let Ok(id) = name.parse::<u8>() {
        let c = acceptance::criterion(id).ok_or_else(|| anyhow!("criteria are numbered 1 to {}", acceptance::CRITERIA.len()))?;
        let r = c.run(seed);
        println!("{r}");
        return Ok(if r.passed { Outcome::Ok } else { Outcome::Failed });
    }
    let e = corpus::entry(name).ok_or_else(|| anyhow!("unknown program {name:?}; use all, 1..11 or one of {}", entry_names()))?;
    let p = e.program();
    let regs = count_registers(&p)?;
    let mismatches = compare_entry(e, 256, 1000, seed);
    println!("program={} registers={regs} claimed={} trials=1000 mismatches={}", e.name, e.claimed_registers, mismatches.len());
    for m in mismatches.iter().take(5) {
        println!("trial {} inputs {:?}: {}", m.trial, m.inputs.iter().map(|x| x.to_string()).collect::<Vec<_>>(), m.diagnosis);
    }
    Ok(if mismatches.is_empty() && regs == e.claimed_registers { Outcome::Ok } else { Outcome::Failed })
}
