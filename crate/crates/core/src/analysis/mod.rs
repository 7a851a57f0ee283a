//! Step-count scaling tables, the doubling-ratio linearity test and bulk
//! comparison against oracles.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::corpus::CorpusEntry;
use crate::error::AnalysisError;
use crate::interpreter::{Compiled, RunResult, RunStatus, DEFAULT_STEP_LIMIT};
use crate::isa::{IntVal, Program};

pub const DEFAULT_EPS: f64 = 0.25;

/// Steps-per-size caps used by the linearity checks. Measured maxima on
/// the all-ones ladders 64..4096 (8..2048 digits for the automata) are
/// multiply 10.3, divide 10.2, powers-of-two 16.3, fib-multiply 15.5,
/// queue 14.9, both nonautomatic programs 4.1, octal automaton 13.8 and
/// decimal automaton 21.0; each cap leaves about 20% headroom.
pub const STEP_CAPS: &[(&str, f64)] = &[
    ("multiply", 12.5),
    ("divide", 12.5),
    ("powers-of-two", 20.0),
    ("fib-multiply", 19.0),
    ("queue", 18.0),
    ("nonauto1", 5.0),
    ("nonauto2", 5.0),
    ("dfa-octal-xor", 17.0),
    ("dfa-three-nonzero", 26.0),
];

pub fn step_cap(program: &str) -> Option<f64> {
    STEP_CAPS.iter().find(|(n, _)| *n == program).map(|&(_, c)| c)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ScalingRow {
    pub n: u64,
    pub steps: u64,
    pub status: RunStatus,
    /// Short description of the input, e.g. `ones(64),ones(64)`.
    pub input: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct ScalingTable {
    pub program: String,
    pub rows: Vec<ScalingRow>,
}

impl ScalingTable {
    /// Builds a table from bare `(n, steps)` pairs.
    pub fn synthetic(program: &str, rows: impl IntoIterator<Item = (u64, u64)>) -> Self {
        ScalingTable {
            program: program.into(),
            rows: rows
                .into_iter()
                .map(|(n, steps)| ScalingRow { n, steps, status: RunStatus::Halted, input: String::from("-") })
                .collect(),
        }
    }

    pub fn complete(&self) -> bool {
        self.rows.iter().all(|r| r.status == RunStatus::Halted)
    }

    /// `program,n,steps,status` with a header line.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("program,n,steps,status\n");
        for r in &self.rows {
            s.push_str(&format!("{},{},{},{}\n", self.program, r.n, r.steps, status_name(r.status)));
        }
        s
    }

    pub fn steps_at(&self, n: u64) -> Option<u64> {
        self.rows.iter().find(|r| r.n == n).map(|r| r.steps)
    }
}

pub fn status_name(s: RunStatus) -> &'static str {
    match s {
        RunStatus::Halted => "halted",
        RunStatus::StepLimit => "step-limit",
        RunStatus::InputExhausted => "input-exhausted",
    }
}

/// `lo, lo*factor, ...` up to and including `hi`.
pub fn geometric_sizes(lo: u64, hi: u64, factor: u64) -> Vec<u64> {
    let mut v = Vec::new();
    let mut n = lo.max(1);
    while n <= hi {
        v.push(n);
        if factor < 2 {
            break;
        }
        n *= factor;
    }
    v
}

fn describe(inputs: &[IntVal]) -> String {
    inputs
        .iter()
        .map(|x| {
            let bits = x.bits();
            if bits <= 64 {
                format!("{x}")
            } else {
                format!("<{bits} bits>")
            }
        })
        .collect::<Vec<_>>()
        .join(",")
}

/// One row per requested size. The reported `n` is `size_of` applied to
/// the generated input, so it reflects what was actually run.
pub fn measure_scaling(
    name: &str,
    p: &Program,
    sizes: &[u64],
    input_for: impl Fn(u64) -> Vec<IntVal>,
    size_of: impl Fn(&[IntVal]) -> u64,
    step_limit: u64,
) -> ScalingTable {
    let c = Compiled::new(p);
    let rows = sizes
        .iter()
        .map(|&n| {
            let inputs = input_for(n);
            let r = c.run(&inputs, step_limit);
            ScalingRow { n: size_of(&inputs), steps: r.steps, status: r.status, input: describe(&inputs) }
        })
        .collect();
    ScalingTable { program: name.into(), rows }
}

/// Measures a corpus entry on its worst-case inputs.
pub fn measure_entry(e: &CorpusEntry, sizes: &[u64]) -> ScalingTable {
    measure_scaling(e.name, &e.program(), sizes, e.worst_case, e.size_measure, DEFAULT_STEP_LIMIT)
}

#[derive(Clone, Debug, PartialEq)]
pub struct FitReport {
    pub program: String,
    pub slope: f64,
    pub intercept: f64,
    pub max_ratio: f64,
    /// `steps(n') / steps(n)` scaled to a size factor of exactly 2.
    pub doubling_ratios: Vec<f64>,
    pub eps: f64,
    pub cap: f64,
    pub pass: bool,
}

impl FitReport {
    pub fn worst_doubling(&self) -> f64 {
        self.doubling_ratios.iter().copied().fold(0.0, f64::max)
    }
}

/// Flat `key=value` block.
impl fmt::Display for FitReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "program={}", self.program)?;
        writeln!(f, "slope={:.6}", self.slope)?;
        writeln!(f, "intercept={:.6}", self.intercept)?;
        writeln!(f, "max_ratio={:.6}", self.max_ratio)?;
        let d: Vec<String> = self.doubling_ratios.iter().map(|r| format!("{r:.6}")).collect();
        writeln!(f, "doubling_ratios={}", d.join(","))?;
        writeln!(f, "eps={}", self.eps)?;
        writeln!(f, "cap={}", self.cap)?;
        writeln!(f, "pass={}", self.pass)
    }
}

/// Linear iff every normalised doubling ratio is at most `2 + eps` and
/// no row exceeds `cap` steps per unit of size.
pub fn assert_linear(t: &ScalingTable, eps: f64, cap: f64) -> Result<FitReport, AnalysisError> {
    if !t.complete() {
        return Err(AnalysisError::Incomplete);
    }
    if t.rows.len() < 6 {
        return Err(AnalysisError::InsufficientRows(t.rows.len()));
    }
    if t.rows.windows(2).any(|w| w[0].n >= w[1].n) || t.rows[0].n == 0 {
        return Err(AnalysisError::NotIncreasing);
    }
    let (first, last) = (t.rows[0].n as f64, t.rows[t.rows.len() - 1].n as f64);
    if last / first < 32.0 {
        return Err(AnalysisError::InsufficientSpan(last / first));
    }
    let xs: Vec<f64> = t.rows.iter().map(|r| r.n as f64).collect();
    let ys: Vec<f64> = t.rows.iter().map(|r| r.steps as f64).collect();
    let len = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / len, ys.iter().sum::<f64>() / len);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let max_ratio = xs.iter().zip(&ys).map(|(x, y)| y / x).fold(0.0, f64::max);
    let doubling_ratios: Vec<f64> = t
        .rows
        .windows(2)
        .map(|w| {
            let growth = w[1].n as f64 / w[0].n as f64;
            (w[1].steps as f64 / (w[0].steps as f64).max(1.0)) * 2.0 / growth
        })
        .collect();
    let pass = doubling_ratios.iter().all(|&r| r <= 2.0 + eps) && max_ratio <= cap;
    Ok(FitReport { program: t.program.clone(), slope, intercept, max_ratio, doubling_ratios, eps, cap, pass })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Mismatch {
    pub trial: usize,
    pub inputs: Vec<IntVal>,
    /// `None` when the oracle leaves the output unspecified.
    pub expected: Option<Vec<IntVal>>,
    pub got: RunResult,
    pub diagnosis: String,
}

fn check(c: &Compiled, oracle: &dyn Fn(&[IntVal]) -> Option<Vec<IntVal>>, trial: usize, inputs: Vec<IntVal>, step_limit: u64) -> Option<Mismatch> {
    let got = c.run(&inputs, step_limit);
    let expected = oracle(&inputs);
    let diagnosis = match (&got.status, &expected) {
        (RunStatus::StepLimit, _) => format!("step limit {step_limit} reached"),
        (RunStatus::InputExhausted, _) => String::from("program read past the end of its input"),
        (RunStatus::Halted, Some(want)) if &got.outputs != want => String::from("output differs from the oracle"),
        _ => return None,
    };
    Some(Mismatch { trial, inputs, expected, got, diagnosis })
}

/// Runs `trials` seeded samples. Each trial draws from its own generator
/// seeded by `(seed, trial)`, so reports reproduce exactly and do not
/// depend on evaluation order.
pub fn compare_oracle(
    p: &Program,
    oracle: impl Fn(&[IntVal]) -> Option<Vec<IntVal>>,
    mut sampler: impl FnMut(&mut ChaCha8Rng) -> Vec<IntVal>,
    trials: usize,
    seed: u64,
    step_limit: u64,
) -> Vec<Mismatch> {
    let c = Compiled::new(p);
    (0..trials)
        .filter_map(|trial| {
            let mut rng = trial_rng(seed, trial);
            let inputs = sampler(&mut rng);
            check(&c, &oracle, trial, inputs, step_limit)
        })
        .collect()
}

/// The generator used for trial `trial` of a run seeded with `seed`.
pub fn trial_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    rng
}

/// Exhaustive variant over explicit input vectors.
pub fn compare_inputs(
    p: &Program,
    oracle: impl Fn(&[IntVal]) -> Option<Vec<IntVal>>,
    inputs: impl IntoIterator<Item = Vec<IntVal>>,
    step_limit: u64,
) -> Vec<Mismatch> {
    let c = Compiled::new(p);
    inputs
        .into_iter()
        .enumerate()
        .filter_map(|(trial, v)| check(&c, &oracle, trial, v, step_limit))
        .collect()
}

/// Compares a corpus entry with its own oracle and sampler.
pub fn compare_entry(e: &CorpusEntry, bits: u64, trials: usize, seed: u64) -> Vec<Mismatch> {
    compare_oracle(&e.program(), e.oracle, |rng| (e.sample)(rng, bits), trials, seed, DEFAULT_STEP_LIMIT)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{MULTIPLY, POWERS_OF_TWO};
    use crate::isa::Instr;
    use num_bigint::BigInt;

    #[test]
    fn quadratic_data_fails() {
        let t = ScalingTable::synthetic("sq", geometric_sizes(64, 4096, 2).into_iter().map(|n| (n, n * n)));
        let r = assert_linear(&t, DEFAULT_EPS, 1e12).unwrap();
        assert!(!r.pass);
        assert!((r.worst_doubling() - 4.0).abs() < 1e-9);
    }

    #[test]
    fn exact_linear_data_passes() {
        let t = ScalingTable::synthetic("lin", geometric_sizes(64, 4096, 2).into_iter().map(|n| (n, 7 * n + 3)));
        let r = assert_linear(&t, DEFAULT_EPS, 8.0).unwrap();
        assert!(r.pass);
        assert!((r.slope - 7.0).abs() < 1e-9);
        assert!((r.intercept - 3.0).abs() < 1e-6);
        // the cap applies as well
        assert!(!assert_linear(&t, DEFAULT_EPS, 7.0).unwrap().pass);
    }

    #[test]
    fn constant_program_is_linear() {
        let p = Program::halt_only();
        let t = measure_scaling("halt", &p, &geometric_sizes(64, 4096, 2), |n| alloc::vec![BigInt::from(n)], |_| 0, 10);
        assert!(t.rows.iter().all(|r| r.steps == 1));
        let t = ScalingTable::synthetic("halt", t.rows.iter().enumerate().map(|(i, r)| (64u64 << i, r.steps)));
        assert!(assert_linear(&t, DEFAULT_EPS, 1.0).unwrap().pass);
    }

    #[test]
    fn table_shape_errors() {
        let short = ScalingTable::synthetic("s", [(1, 1), (2, 2), (4, 4)]);
        assert_eq!(assert_linear(&short, DEFAULT_EPS, 10.0), Err(AnalysisError::InsufficientRows(3)));
        let narrow = ScalingTable::synthetic("s", (1..=6).map(|n| (n, n)));
        assert!(matches!(assert_linear(&narrow, DEFAULT_EPS, 10.0), Err(AnalysisError::InsufficientSpan(_))));
        let unsorted = ScalingTable::synthetic("s", [(64, 1), (32, 1), (128, 1), (256, 1), (512, 1), (4096, 1)]);
        assert_eq!(assert_linear(&unsorted, DEFAULT_EPS, 10.0), Err(AnalysisError::NotIncreasing));
        let mut t = ScalingTable::synthetic("s", geometric_sizes(1, 64, 2).into_iter().map(|n| (n, n)));
        t.rows[2].status = RunStatus::StepLimit;
        assert_eq!(assert_linear(&t, DEFAULT_EPS, 10.0), Err(AnalysisError::Incomplete));
    }

    #[test]
    fn powers_of_two_rows_increase() {
        let t = measure_entry(&POWERS_OF_TWO, &geometric_sizes(64, 4096, 2));
        assert_eq!(t.rows.len(), 7);
        assert!(t.rows.windows(2).all(|w| w[0].steps < w[1].steps));
        assert!(t.to_csv().starts_with("program,n,steps,status\npowers-of-two,64,"));
    }

    #[test]
    fn injected_off_by_one_is_caught() {
        let mut p = MULTIPLY.program();
        let at = p.instrs.iter().position(|i| matches!(i, Instr::Write { .. })).unwrap();
        let src = match &p.instrs[at] {
            Instr::Write { src } => src.clone(),
            _ => unreachable!(),
        };
        p.instrs.insert(at, Instr::AddRC { dst: src.clone(), a: src, c: 1.into() });
        p.labels.values_mut().filter(|i| **i > at).for_each(|i| *i += 1);
        let bad = compare_oracle(&p, MULTIPLY.oracle, |rng| (MULTIPLY.sample)(rng, 64), 1000, 3, DEFAULT_STEP_LIMIT);
        assert!(!bad.is_empty());
        assert_eq!(bad[0].diagnosis, "output differs from the oracle");
        assert!(compare_entry(&MULTIPLY, 64, 200, 3).is_empty());
    }

    #[test]
    fn reports_reproduce() {
        let a = compare_oracle(&Program::halt_only(), |_| Some(alloc::vec![]), |rng| alloc::vec![BigInt::from(rand::Rng::gen::<u32>(rng))], 5, 9, 10);
        assert!(a.is_empty());
        let mut r1 = trial_rng(9, 3);
        let mut r2 = trial_rng(9, 3);
        assert_eq!(rand::Rng::gen::<u64>(&mut r1), rand::Rng::gen::<u64>(&mut r2));
    }
}
