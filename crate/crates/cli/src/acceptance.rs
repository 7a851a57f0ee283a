//! The acceptance suite: eleven criteria, each with a runtime limit.
//!
//! A criterion passes only when its checks succeed and it finishes within
//! its limit. Tolerances are constants in this file.

use std::collections::BTreeMap;
use std::fmt;
use std::time::{Duration, Instant};

use addmach_core::analysis::{
    assert_linear, compare_inputs, compare_oracle, geometric_sizes, measure_entry, measure_scaling, step_cap, trial_rng, Mismatch, DEFAULT_EPS,
};
use addmach_core::assembler::{evaluate, expand, reassemble, EvalStatus};
use addmach_core::automata::{
    binary_increment, compile_automatic_multi, compile_dfa, compile_tm, dfa_run, digitwise_max, octal_xor, three_nonzero_decimal, tm_run, Dfa,
};
use addmach_core::corpus::{self, ones, CorpusEntry, ENTRIES};
use addmach_core::interpreter::{trace, Compiled};
use addmach_core::oracle::{self, bit_length};
use addmach_core::{count_registers, fk_inputs, to_fk_model, validate_model, IntVal, ModelFlavor, Program, RunStatus, DEFAULT_STEP_LIMIT};
use num_bigint::{BigInt, RandBigInt};
use rand::Rng;

pub const DEFAULT_SEED: u64 = 7;

/// Largest allowed steps(4096) / steps(64) for powers-of-two.
pub const POWERS_GROWTH_LIMIT: f64 = 80.0;
/// Allowed relative spread of the simulation constant around its median.
pub const TM_CONSTANT_SPREAD: f64 = 0.10;

type Check = fn(u64) -> Result<String, String>;

pub struct Criterion {
    pub id: u8,
    pub name: &'static str,
    pub limit: Duration,
    check: Check,
}

pub static CRITERIA: [Criterion; 11] = [
    Criterion { id: 1, name: "register counts", limit: Duration::from_secs(1), check: register_counts },
    Criterion { id: 2, name: "multiplication", limit: Duration::from_secs(30), check: multiplication },
    Criterion { id: 3, name: "division", limit: Duration::from_secs(30), check: division },
    Criterion { id: 4, name: "powers of two", limit: Duration::from_secs(30), check: powers_of_two },
    Criterion { id: 5, name: "linearity", limit: Duration::from_secs(60), check: linearity },
    Criterion { id: 6, name: "queue recall", limit: Duration::from_secs(20), check: queue_recall },
    Criterion { id: 7, name: "automaton compilation", limit: Duration::from_secs(60), check: dfa_compilation },
    Criterion { id: 8, name: "turing machine compilation", limit: Duration::from_secs(60), check: tm_compilation },
    Criterion { id: 9, name: "nonautomatic programs", limit: Duration::from_secs(20), check: nonautomatic },
    Criterion { id: 10, name: "assembler semantics", limit: Duration::from_secs(20), check: assembler_semantics },
    Criterion { id: 11, name: "constant-free conversions", limit: Duration::from_secs(60), check: fk_conversions },
];

#[derive(Clone, Debug)]
pub struct CriterionResult {
    pub id: u8,
    pub name: &'static str,
    pub passed: bool,
    pub elapsed: Duration,
    pub limit: Duration,
    pub detail: String,
}

impl fmt::Display for CriterionResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {:>2} {:<27} {:>7.2}s / {:>2}s  {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.elapsed.as_secs_f64(),
            self.limit.as_secs(),
            self.detail
        )
    }
}

impl Criterion {
    pub fn run(&self, seed: u64) -> CriterionResult {
        let t0 = Instant::now();
        let outcome = (self.check)(seed);
        let elapsed = t0.elapsed();
        let in_time = elapsed < self.limit;
        let (passed, mut detail) = match outcome {
            Ok(d) => (in_time, d),
            Err(d) => (false, d),
        };
        if !in_time {
            detail = format!("over the time limit; {detail}");
        }
        CriterionResult { id: self.id, name: self.name, passed, elapsed, limit: self.limit, detail }
    }
}

pub fn run_all(seed: u64) -> Vec<CriterionResult> {
    CRITERIA.iter().map(|c| c.run(seed)).collect()
}

pub fn criterion(id: u8) -> Option<&'static Criterion> {
    CRITERIA.iter().find(|c| c.id == id)
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn no_mismatches(what: &str, m: &[Mismatch]) -> Result<(), String> {
    match m.first() {
        None => Ok(()),
        Some(first) => Err(format!(
            "{what}: {} mismatches; first at trial {} on {:?}: {} (expected {:?}, got {:?})",
            m.len(),
            first.trial,
            first.inputs,
            first.diagnosis,
            first.expected,
            first.got.outputs
        )),
    }
}

/// One row of the register table.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RegisterRow {
    pub program: String,
    pub registers: usize,
    pub fk_registers: usize,
    /// Exact expected count, or an upper bound when `at_most` is set.
    pub claim: usize,
    pub at_most: bool,
}

impl RegisterRow {
    pub fn holds(&self) -> bool {
        let base = if self.at_most { self.registers <= self.claim } else { self.registers == self.claim };
        base && self.fk_registers == self.registers + 1
    }
}

pub fn dfa_fixtures() -> [(&'static str, Dfa); 2] {
    [("dfa-octal-xor", octal_xor()), ("dfa-three-nonzero", three_nonzero_decimal())]
}

/// Register counts of every generator, compiled fixture and their
/// constant-free versions.
pub fn register_table() -> Result<Vec<RegisterRow>, String> {
    let mut progs: Vec<(String, Program, usize, bool)> = ENTRIES.iter().map(|e| (e.name.to_string(), e.program(), e.claimed_registers, false)).collect();
    let compiled = |sp: Result<_, addmach_core::AutomatonError>| -> Result<Program, String> {
        expand(&sp.map_err(|e| e.to_string())?).map_err(|e| e.to_string())
    };
    progs.push(("dfa-octal-xor".into(), compiled(compile_dfa(&octal_xor()))?, 2, false));
    progs.push(("dfa-three-nonzero".into(), compiled(compile_dfa(&three_nonzero_decimal()))?, 3, false));
    progs.push(("tm-binary-increment".into(), compiled(compile_tm(&binary_increment()))?, 3, false));
    progs.push(("multi-max-2-2".into(), compiled(compile_automatic_multi(&digitwise_max(&[2, 2])))?, 4, false));
    progs.push(("multi-max-2-3".into(), compiled(compile_automatic_multi(&digitwise_max(&[2, 3])))?, 5, true));
    progs
        .into_iter()
        .map(|(program, p, claim, at_most)| {
            let registers = count_registers(&p).map_err(|e| e.to_string())?;
            let fk = to_fk_model(&p).map_err(|e| format!("{program}: {e}"))?;
            let fk_registers = count_registers(&fk).map_err(|e| e.to_string())?;
            Ok(RegisterRow { program, registers, fk_registers, claim, at_most })
        })
        .collect()
}

fn register_counts(_: u64) -> Result<String, String> {
    let rows = register_table()?;
    let bad: Vec<String> = rows.iter().filter(|r| !r.holds()).map(|r| format!("{} {}/{}", r.program, r.registers, r.fk_registers)).collect();
    ensure(bad.is_empty(), || format!("wrong counts: {}", bad.join(", ")))?;
    Ok(rows.iter().map(|r| format!("{}={}", r.program, r.registers)).collect::<Vec<_>>().join(" "))
}

fn ints(v: &[i64]) -> Vec<IntVal> {
    v.iter().map(|&x| BigInt::from(x)).collect()
}

fn fixed_cases(e: &CorpusEntry, cases: &[(&[i64], &[i64])]) -> Result<(), String> {
    let c = Compiled::new(&e.program());
    for (input, want) in cases {
        let r = c.run(&ints(input), DEFAULT_STEP_LIMIT);
        ensure(r.status == RunStatus::Halted && r.outputs == ints(want), || format!("{} on {input:?}: got {:?}", e.name, r.outputs))?;
    }
    Ok(())
}

/// Values of `regs` each time control reaches a copy of `label`.
fn snapshots(p: &Program, inputs: &[i64], label: &str, regs: &[&str]) -> Vec<Vec<BigInt>> {
    let t = trace(p, &ints(inputs), 1_000_000);
    p.label_copies(label)
        .into_iter()
        .flat_map(|i| t.snapshots_at(i))
        .map(|s: BTreeMap<String, IntVal>| regs.iter().map(|r| s[*r].clone()).collect())
        .collect()
}

fn multiplication(seed: u64) -> Result<String, String> {
    let e = &corpus::MULTIPLY;
    let mut trial = 0u32;
    let m = compare_oracle(
        &e.program(),
        e.oracle,
        |rng| {
            // cycle through the four sign patterns and put in zeros regularly
            let t = trial;
            trial += 1;
            let na = rng.gen_range(1..=1024);
            let mut a = BigInt::from(rng.gen_biguint(na));
            let nb = rng.gen_range(1..=1024);
            let mut b = BigInt::from(rng.gen_biguint(nb));
            if t % 4 >= 2 {
                a = -a;
            }
            if t % 2 == 1 {
                b = -b;
            }
            match t % 40 {
                0 => a = BigInt::from(0),
                20 => b = BigInt::from(0),
                _ => {}
            }
            vec![a, b]
        },
        1000,
        seed,
        DEFAULT_STEP_LIMIT,
    );
    no_mismatches("random pairs", &m)?;
    fixed_cases(e, &[(&[13, 33], &[429]), (&[-13, 33], &[-429]), (&[0, 0], &[0])])?;
    let got: Vec<(i64, i64)> = snapshots(&e.program(), &[13, 33], "L7", &["x", "w"])
        .into_iter()
        .map(|v| (i64::try_from(&v[0]).unwrap_or(-1), i64::try_from(&v[1]).unwrap_or(-1)))
        .collect();
    ensure(got == [(27, 0), (22, 33), (12, 99), (24, 198), (16, 429)], || format!("loop snapshots {got:?}"))?;
    let at8 = snapshots(&e.program(), &[13, 33], "L8", &["x", "w"]);
    ensure(at8 == [vec![BigInt::from(32), BigInt::from(429)]], || format!("exit snapshot {at8:?}"))?;
    Ok("1000 pairs up to 1024 bits, trace of 13*33 matches".into())
}

fn division(seed: u64) -> Result<String, String> {
    let e = &corpus::DIVIDE;
    let m = compare_oracle(&e.program(), e.oracle, |rng| (e.sample)(rng, 1024), 1000, seed, DEFAULT_STEP_LIMIT);
    no_mismatches("random pairs", &m)?;
    fixed_cases(e, &[(&[5, 7], &[0]), (&[-7, 2], &[-4])])?;
    Ok("1000 pairs up to 1024 bits, (5,7) -> 0, (-7,2) -> -4".into())
}

fn powers_of_two(seed: u64) -> Result<String, String> {
    let c = Compiled::new(&corpus::POWERS_OF_TWO.program());
    let check = |x: &BigInt| -> Result<(), String> {
        let r = c.run(std::slice::from_ref(x), DEFAULT_STEP_LIMIT);
        let mut got = r.outputs.clone();
        got.sort();
        let before = got.len();
        got.dedup();
        ensure(got.len() == before, || format!("repeated output on {x}"))?;
        let mut want = oracle::set_bit_powers(std::slice::from_ref(x)).unwrap_or_default();
        want.sort();
        ensure(r.status == RunStatus::Halted && got == want, || format!("wrong powers for {x}"))
    };
    for trial in 0..500 {
        let mut rng = trial_rng(seed, trial);
        let bits = rng.gen_range(1..=4096);
        check(&BigInt::from(rng.gen_biguint(bits)))?;
    }
    let set = |x: i64| {
        let mut v: Vec<BigInt> = c.run(&[x.into()], 1000).outputs;
        v.sort();
        v
    };
    ensure(set(13) == ints(&[1, 4, 8]), || format!("13 gives {:?}", set(13)))?;
    ensure(set(100) == ints(&[4, 32, 64]), || format!("100 gives {:?}", set(100)))?;
    Ok("500 values up to 4096 bits, 13 -> {8,4,1}, 100 -> {4,32,64}".into())
}

fn linearity(_: u64) -> Result<String, String> {
    let sizes = geometric_sizes(64, 4096, 2);
    let mut notes = Vec::new();
    let mut tables = Vec::new();
    for e in [&corpus::MULTIPLY, &corpus::DIVIDE, &corpus::POWERS_OF_TWO] {
        tables.push(measure_entry(e, &sizes));
    }
    for (name, d) in dfa_fixtures() {
        let p = expand(&compile_dfa(&d).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
        tables.push(measure_scaling(name, &p, &sizes, |n| vec![ones(n)], |x| bit_length(&x[0]), DEFAULT_STEP_LIMIT));
    }
    for t in &tables {
        let cap = step_cap(&t.program).ok_or_else(|| format!("no cap for {}", t.program))?;
        let r = assert_linear(t, DEFAULT_EPS, cap).map_err(|e| format!("{}: {e}", t.program))?;
        ensure(r.pass, || format!("{} is not linear:\n{r}", t.program))?;
        notes.push(format!("{} {:.2}", t.program, r.worst_doubling()));
    }
    let p = &tables[2];
    let growth = p.rows.last().map(|r| r.steps).unwrap_or(0) as f64 / p.rows[0].steps as f64;
    ensure(growth <= POWERS_GROWTH_LIMIT, || format!("powers-of-two grows {growth:.1}x from 64 to 4096 bits"))?;
    Ok(format!("worst doubling ratios: {}; powers-of-two growth {growth:.1}x", notes.join(", ")))
}

#[allow(clippy::unusual_byte_groupings)] // grouped by stored number
fn queue_recall(seed: u64) -> Result<String, String> {
    let e = &corpus::QUEUE;
    let m = compare_oracle(&e.program(), e.oracle, |rng| (e.sample)(rng, 64), 300, seed, DEFAULT_STEP_LIMIT);
    no_mismatches("random queues", &m)?;
    let t = measure_entry(e, &geometric_sizes(64, 4096, 2));
    let r = assert_linear(&t, DEFAULT_EPS, step_cap(e.name).unwrap_or(f64::INFINITY)).map_err(|e| e.to_string())?;
    ensure(r.pass, || format!("queue is not linear:\n{r}"))?;
    // the stored layout of 110, 101, 11011 when the third number has been added
    let p = e.program();
    let tr = trace(&p, &ints(&[3, 6, 5, 27, 1]), 10_000);
    let l3 = p.label_copies("L3").first().copied().ok_or("no L3")?;
    let branch = (l3..p.instrs.len()).find(|&i| p.instrs[i].target().is_some()).ok_or("no branch after L3")?;
    let snaps = tr.snapshots_at(branch);
    let s = snaps.get(2).ok_or("fewer than three visits")?;
    let want = [("u", BigInt::from(1) << 11), ("x", BigInt::from(0b110_101_11011)), ("y", BigInt::from(0b1_001_00001)), ("z", BigInt::from(1))];
    for (reg, v) in want {
        ensure(s[reg] == v, || format!("{reg} = {:b}, expected {v:b}", s[reg]))?;
    }
    Ok(format!("300 queues, worst doubling ratio {:.2}, layout matches", r.worst_doubling()))
}

fn dfa_compilation(seed: u64) -> Result<String, String> {
    for (name, d) in dfa_fixtures() {
        let p = expand(&compile_dfa(&d).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
        let oracle = |x: &[IntVal]| Some(vec![BigInt::from(dfa_run(&d, &x[0]) as u8)]);
        no_mismatches(name, &compare_inputs(&p, oracle, (0..100_000i64).map(|x| vec![x.into()]), DEFAULT_STEP_LIMIT))?;
        no_mismatches(name, &compare_oracle(&p, oracle, |rng| vec![BigInt::from(rng.gen_biguint(256))], 200, seed, DEFAULT_STEP_LIMIT))?;
    }
    Ok("both automata agree on 0..100000 and 200 values of 256 bits".into())
}

/// Ratio of compiled steps to machine steps plus input length, over a
/// ladder of sizes with all-ones and single-one inputs.
pub fn tm_step_ratios(seed: u64) -> Result<Vec<(u64, f64)>, String> {
    let t = binary_increment();
    let c = Compiled::new(&expand(&compile_tm(&t).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?);
    let mut out = Vec::new();
    for (i, n) in geometric_sizes(64, 4096, 2).into_iter().enumerate() {
        let mut rng = trial_rng(seed, i);
        let random = BigInt::from(rng.gen_biguint(n - 1)) + (BigInt::from(1) << (n - 1));
        for x in [ones(n), BigInt::from(1) << (n - 1), random] {
            let am = c.run(std::slice::from_ref(&x), DEFAULT_STEP_LIMIT);
            let tm = tm_run(&t, &x, u64::MAX).map_err(|e| e.to_string())?;
            ensure(am.outputs == [tm.output], || format!("outputs differ at {n} bits"))?;
            out.push((n, am.steps as f64 / (tm.steps + n) as f64));
        }
    }
    Ok(out)
}

fn tm_compilation(seed: u64) -> Result<String, String> {
    let t = binary_increment();
    let p = expand(&compile_tm(&t).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    let oracle = |x: &[IntVal]| Some(vec![tm_run(&t, &x[0], u64::MAX).ok()?.output]);
    no_mismatches("small inputs", &compare_inputs(&p, oracle, (0..2000i64).map(|x| vec![x.into()]), DEFAULT_STEP_LIMIT))?;
    no_mismatches("random inputs", &compare_oracle(&p, oracle, |rng| vec![BigInt::from(rng.gen_biguint(128))], 100, seed, DEFAULT_STEP_LIMIT))?;
    let mut ratios: Vec<f64> = tm_step_ratios(seed)?.into_iter().map(|(_, r)| r).collect();
    ratios.sort_by(f64::total_cmp);
    let c = ratios[ratios.len() / 2];
    let (lo, hi) = (ratios[0], ratios[ratios.len() - 1]);
    ensure(lo >= c * (1.0 - TM_CONSTANT_SPREAD) && hi <= c * (1.0 + TM_CONSTANT_SPREAD), || {
        format!("ratios {lo:.2}..{hi:.2} stray from C = {c:.2}")
    })?;
    Ok(format!("agrees on 0..2000 and 100 values of 128 bits; C = {c:.2} (range {lo:.2}..{hi:.2})"))
}

fn nonautomatic(seed: u64) -> Result<String, String> {
    for e in [&corpus::NONAUTO_SINGLE, &corpus::NONAUTO_PAIR] {
        let p = e.program();
        let regs = count_registers(&p).map_err(|e| e.to_string())?;
        ensure(regs == 2, || format!("{} uses {regs} registers", e.name))?;
        let small: Vec<Vec<IntVal>> = if e.name == "nonauto1" {
            (0..10_000i64).map(|x| vec![x.into()]).collect()
        } else {
            // y below, equal to and above x, and nonpositive
            (0..10_000i64).map(|x| vec![BigInt::from([x / 5, x, x + 1, -(x % 7)][x as usize % 4]), x.into()]).collect()
        };
        no_mismatches(e.name, &compare_inputs(&p, e.oracle, small, DEFAULT_STEP_LIMIT))?;
        no_mismatches(e.name, &compare_oracle(&p, e.oracle, |rng| (e.sample)(rng, 512), 200, seed, DEFAULT_STEP_LIMIT))?;
    }
    Ok("both programs agree on 0..10000 and 200 values of 512 bits with 2 registers".into())
}

fn assembler_semantics(seed: u64) -> Result<String, String> {
    for (n, e) in ENTRIES.iter().enumerate() {
        let sp = e.generator();
        let p = expand(&sp).map_err(|e| e.to_string())?;
        let back = reassemble(&p).map_err(|err| format!("{}: {err}", e.name))?;
        ensure(back.instrs == p.instrs && back.labels == p.labels, || format!("{} does not round-trip", e.name))?;
        let c = Compiled::new(&p);
        for trial in 0..100 {
            let mut rng = trial_rng(seed ^ (n as u64) << 32, trial);
            let input = (e.sample)(&mut rng, 256);
            let a = evaluate(&sp, &input, DEFAULT_STEP_LIMIT).map_err(|e| e.to_string())?;
            let b = c.run(&input, DEFAULT_STEP_LIMIT);
            ensure(a.status == EvalStatus::Halted && b.status == RunStatus::Halted && a.outputs == b.outputs, || {
                format!("{} differs on {input:?}", e.name)
            })?;
        }
    }
    Ok(format!("{} listings, 100 inputs each, round trips identical", ENTRIES.len()))
}

fn fk_conversions(seed: u64) -> Result<String, String> {
    for e in ENTRIES {
        let q = to_fk_model(&e.program()).map_err(|err| format!("{}: {err}", e.name))?;
        let v = validate_model(&q, ModelFlavor::FloydKnuth).map_err(|e| e.to_string())?;
        ensure(v.is_empty(), || format!("{}: {} uses of constants remain", e.name, v.len()))?;
        let m = compare_oracle(&q, |x| (e.oracle)(&x[1..]), |rng| fk_inputs(&(e.sample)(rng, 512)), 200, seed, DEFAULT_STEP_LIMIT);
        no_mismatches(e.name, &m)?;
    }
    Ok(format!("{} converted listings validate and pass 200 seeded trials each", ENTRIES.len()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn criteria_are_numbered_in_order() {
        for (i, c) in CRITERIA.iter().enumerate() {
            assert_eq!(c.id as usize, i + 1);
            assert!(c.limit >= Duration::from_secs(1));
        }
        assert!(criterion(0).is_none());
        assert_eq!(criterion(11).map(|c| c.name), Some("constant-free conversions"));
    }

    #[test]
    fn register_rows_check_the_fk_increment() {
        let row = |registers, fk_registers, claim, at_most| RegisterRow { program: "p".into(), registers, fk_registers, claim, at_most };
        assert!(row(4, 5, 4, false).holds());
        assert!(!row(4, 6, 4, false).holds());
        assert!(!row(3, 4, 4, false).holds());
        assert!(row(3, 4, 5, true).holds());
        assert!(!row(6, 7, 5, true).holds());
    }

    #[test]
    fn result_line_shows_verdict_and_timing() {
        let r = CriterionResult {
            id: 3,
            name: "division",
            passed: false,
            elapsed: Duration::from_millis(1500),
            limit: Duration::from_secs(30),
            detail: "boom".into(),
        };
        let line = r.to_string();
        assert!(line.starts_with("FAIL  3 division"));
        assert!(line.contains("1.50s / 30s"));
        assert!(line.ends_with("boom"));
    }

    #[test]
    fn register_table_holds() {
        let rows = register_table().unwrap();
        assert_eq!(rows.len(), 12);
        assert!(rows.iter().all(RegisterRow::holds), "{rows:?}");
    }
}
