//! The algorithm listings as `.amasm` sources with their contracts.

use alloc::vec::Vec;

use num_bigint::{BigInt, RandBigInt, Sign};
use num_traits::{One, Zero};
use rand::{Rng, RngCore};

use crate::assembler::{expand, parse, StructuredProgram};
use crate::isa::{IntVal, Program};
use crate::oracle;

pub type Oracle = fn(&[IntVal]) -> Option<Vec<IntVal>>;

/// Random valid input whose operands have at most the given number of bits.
pub type Sampler = fn(&mut dyn RngCore, u64) -> Vec<IntVal>;

pub struct CorpusEntry {
    pub name: &'static str,
    pub source: &'static str,
    pub claimed_registers: usize,
    pub oracle: Oracle,
    pub sample: Sampler,
    /// Deterministic input whose size measure is about `n`, built from
    /// all-ones bit patterns.
    pub worst_case: fn(u64) -> Vec<IntVal>,
    pub size_measure: fn(&[IntVal]) -> u64,
}

impl CorpusEntry {
    pub fn generator(&self) -> StructuredProgram {
        parse(self.source).expect("corpus listings parse")
    }

    pub fn program(&self) -> Program {
        expand(&self.generator()).expect("corpus listings expand")
    }
}

impl core::fmt::Debug for CorpusEntry {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("CorpusEntry").field("name", &self.name).finish_non_exhaustive()
    }
}

pub fn ones(n: u64) -> BigInt {
    (BigInt::one() << n) - 1
}

pub fn random_signed(rng: &mut dyn RngCore, max_bits: u64) -> BigInt {
    // a zero now and then, otherwise a uniformly chosen length
    if rng.gen_ratio(1, 16) {
        return BigInt::zero();
    }
    let bits = rng.gen_range(1..=max_bits.max(1));
    let m = rng.gen_biguint(bits);
    let sign = if rng.gen::<bool>() { Sign::Minus } else { Sign::Plus };
    BigInt::from_biguint(sign, m)
}

pub fn random_positive(rng: &mut dyn RngCore, max_bits: u64) -> BigInt {
    let bits = rng.gen_range(1..=max_bits.max(1));
    BigInt::from(rng.gen_biguint(bits)) + 1
}

fn min_bits(x: &[IntVal]) -> u64 {
    x.iter().map(oracle::bit_length).min().unwrap_or(0)
}

fn first_bits(x: &[IntVal]) -> u64 {
    x.first().map(oracle::bit_length).unwrap_or(0)
}

fn last_bits(x: &[IntVal]) -> u64 {
    x.last().map(oracle::bit_length).unwrap_or(0)
}

pub const MULTIPLY: CorpusEntry = CorpusEntry {
    name: "multiply",
    source: include_str!("listings/multiply.amasm"),
    claimed_registers: 4,
    oracle: oracle::product,
    sample: |rng, bits| alloc::vec![random_signed(rng, bits), random_signed(rng, bits)],
    worst_case: |n| alloc::vec![ones(n), ones(n)],
    size_measure: min_bits,
};

pub const DIVIDE: CorpusEntry = CorpusEntry {
    name: "divide",
    source: include_str!("listings/divide.amasm"),
    claimed_registers: 4,
    oracle: oracle::floor_div,
    sample: |rng, bits| {
        let y = random_signed(rng, bits);
        let mut z = random_signed(rng, bits);
        while z.is_zero() {
            z = random_signed(rng, bits);
        }
        alloc::vec![y, z]
    },
    // z fixed, y grows
    worst_case: |n| alloc::vec![ones(n), BigInt::from(3)],
    size_measure: |x| match x {
        [y, z] => oracle::division_size(y, z),
        _ => 0,
    },
};

pub const POWERS_OF_TWO: CorpusEntry = CorpusEntry {
    name: "powers-of-two",
    source: include_str!("listings/powers_of_two.amasm"),
    claimed_registers: 4,
    oracle: oracle::set_bit_powers,
    sample: |rng, bits| alloc::vec![random_signed(rng, bits)],
    worst_case: |n| alloc::vec![ones(n)],
    size_measure: first_bits,
};

pub const FIB_MULTIPLY: CorpusEntry = CorpusEntry {
    name: "fib-multiply",
    source: include_str!("listings/fib_multiply.amasm"),
    claimed_registers: 6,
    oracle: oracle::nonnegative_product,
    sample: |rng, bits| {
        let mut v = alloc::vec![random_signed(rng, bits), random_signed(rng, bits)];
        // mostly the nonnegative domain, sometimes the guard
        if !rng.gen_ratio(1, 10) {
            v.iter_mut().for_each(|x| *x = BigInt::from(x.magnitude().clone()));
        }
        v
    },
    worst_case: |n| alloc::vec![ones(n), ones(n)],
    size_measure: last_bits,
};

pub const QUEUE: CorpusEntry = CorpusEntry {
    name: "queue",
    source: include_str!("listings/queue.amasm"),
    claimed_registers: 6,
    oracle: oracle::queue_recall,
    sample: |rng, bits| {
        let m = rng.gen_range(1..=12u32);
        let mut v = alloc::vec![BigInt::from(m)];
        for _ in 0..m {
            v.push(random_positive(rng, bits.min(64)).min(ones(64)));
        }
        v.push(BigInt::from(rng.gen_range(1..=m)));
        v
    },
    // four equal numbers, recall the last
    worst_case: |n| {
        let q = ones((n / 4).max(1));
        alloc::vec![BigInt::from(4), q.clone(), q.clone(), q.clone(), q, BigInt::from(4)]
    },
    size_measure: |x| {
        let m = x.len().saturating_sub(2);
        x.iter().skip(1).take(m).map(oracle::bit_length).sum()
    },
};

pub const NONAUTO_SINGLE: CorpusEntry = CorpusEntry {
    name: "nonauto1",
    source: include_str!("listings/nonauto_single.amasm"),
    claimed_registers: 2,
    oracle: oracle::nonautomatic_single,
    sample: |rng, bits| alloc::vec![random_signed(rng, bits)],
    worst_case: |n| alloc::vec![ones(n)],
    size_measure: first_bits,
};

pub const NONAUTO_PAIR: CorpusEntry = CorpusEntry {
    name: "nonauto2",
    source: include_str!("listings/nonauto_pair.amasm"),
    claimed_registers: 2,
    oracle: oracle::nonautomatic_pair,
    sample: |rng, bits| {
        let x = random_signed(rng, bits);
        // keep y below x often enough to exercise the loop
        let y = if rng.gen::<bool>() { random_positive(rng, (bits / 2).max(1)) } else { random_signed(rng, bits) };
        alloc::vec![y, x]
    },
    worst_case: |n| alloc::vec![BigInt::one(), ones(n)],
    size_measure: last_bits,
};

pub static ENTRIES: [&CorpusEntry; 7] =
    [&MULTIPLY, &DIVIDE, &POWERS_OF_TWO, &FIB_MULTIPLY, &QUEUE, &NONAUTO_SINGLE, &NONAUTO_PAIR];

/// Looks an entry up by its command-line name.
pub fn entry(name: &str) -> Option<&'static CorpusEntry> {
    ENTRIES.iter().copied().find(|e| e.name == name)
}

pub fn gen_multiply() -> StructuredProgram {
    MULTIPLY.generator()
}

pub fn gen_divide() -> StructuredProgram {
    DIVIDE.generator()
}

pub fn gen_powers_of_two() -> StructuredProgram {
    POWERS_OF_TWO.generator()
}

pub fn gen_fib_multiply() -> StructuredProgram {
    FIB_MULTIPLY.generator()
}

pub fn gen_queue_recall() -> StructuredProgram {
    QUEUE.generator()
}

pub fn gen_nonautomatic_single() -> StructuredProgram {
    NONAUTO_SINGLE.generator()
}

pub fn gen_nonautomatic_pair() -> StructuredProgram {
    NONAUTO_PAIR.generator()
}
