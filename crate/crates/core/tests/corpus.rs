use addmach_core::corpus::{self, ENTRIES};
use addmach_core::interpreter::{run, trace, RunStatus};
use addmach_core::{count_registers, IntVal, DEFAULT_STEP_LIMIT};
use num_bigint::BigInt;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn ints(v: &[i64]) -> Vec<IntVal> {
    v.iter().map(|&x| BigInt::from(x)).collect()
}

fn outputs(e: &corpus::CorpusEntry, inputs: &[i64]) -> Vec<IntVal> {
    let r = run(&e.program(), &ints(inputs), DEFAULT_STEP_LIMIT);
    assert_eq!(r.status, RunStatus::Halted, "{} on {inputs:?}", e.name);
    r.outputs
}

#[test]
fn register_counts_match_claims() {
    for e in ENTRIES {
        assert_eq!(count_registers(&e.program()).unwrap(), e.claimed_registers, "{}", e.name);
    }
}

#[test]
fn fixed_examples() {
    let cases: &[(&corpus::CorpusEntry, &[i64], &[i64])] = &[
        (&corpus::MULTIPLY, &[13, 33], &[429]),
        (&corpus::MULTIPLY, &[-13, 33], &[-429]),
        (&corpus::MULTIPLY, &[-13, -33], &[429]),
        (&corpus::MULTIPLY, &[0, 5], &[0]),
        (&corpus::DIVIDE, &[5, 7], &[0]),
        (&corpus::DIVIDE, &[13, 4], &[3]),
        (&corpus::DIVIDE, &[-7, 2], &[-4]),
        (&corpus::DIVIDE, &[9, 0], &[0]),
        (&corpus::POWERS_OF_TWO, &[13], &[1, 4, 8]),
        (&corpus::POWERS_OF_TWO, &[100], &[4, 32, 64]),
        (&corpus::POWERS_OF_TWO, &[0], &[]),
        (&corpus::FIB_MULTIPLY, &[3, 4], &[12]),
        (&corpus::FIB_MULTIPLY, &[5, 0], &[0]),
        (&corpus::FIB_MULTIPLY, &[1, 1], &[1]),
        (&corpus::FIB_MULTIPLY, &[-1, 1], &[]),
        (&corpus::QUEUE, &[3, 6, 5, 27, 1], &[6]),
        (&corpus::QUEUE, &[1, 1, 1], &[1]),
        (&corpus::QUEUE, &[4, 9, 2, 2, 9, 3], &[2]),
        (&corpus::NONAUTO_SINGLE, &[5], &[40]),
        (&corpus::NONAUTO_SINGLE, &[1], &[2]),
        (&corpus::NONAUTO_SINGLE, &[0], &[2]),
        (&corpus::NONAUTO_PAIR, &[0, 7], &[0]),
        (&corpus::NONAUTO_PAIR, &[1, 5], &[40]),
        (&corpus::NONAUTO_PAIR, &[3, 10], &[40]),
    ];
    for (e, input, expect) in cases {
        assert_eq!(outputs(e, input), ints(expect), "{} on {input:?}", e.name);
    }
}

#[test]
fn queue_with_index_past_the_end_still_halts() {
    let r = run(&corpus::QUEUE.program(), &ints(&[2, 5, 6, 3]), DEFAULT_STEP_LIMIT);
    assert_eq!(r.status, RunStatus::Halted);
}

#[test]
fn random_inputs_agree_with_oracles() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for e in ENTRIES {
        let p = e.program();
        for _ in 0..500 {
            let input = (e.sample)(&mut rng, 1024);
            let r = run(&p, &input, DEFAULT_STEP_LIMIT);
            assert_eq!(r.status, RunStatus::Halted, "{} on {input:?}", e.name);
            if let Some(expect) = (e.oracle)(&input) {
                assert_eq!(r.outputs, expect, "{} on {input:?}", e.name);
            }
        }
    }
}

#[test]
fn multiplication_is_sign_symmetric() {
    let p = corpus::MULTIPLY.program();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..100 {
        let x = corpus::random_signed(&mut rng, 200);
        let y = corpus::random_signed(&mut rng, 200);
        let a = run(&p, &[x.clone(), y.clone()], DEFAULT_STEP_LIMIT).outputs;
        let b = run(&p, &[-x.clone(), y.clone()], DEFAULT_STEP_LIMIT).outputs;
        let c = run(&p, &[x, -y], DEFAULT_STEP_LIMIT).outputs;
        assert_eq!(b, c);
        assert_eq!(a[0], -b[0].clone());
    }
}

#[test]
fn multiplication_trace_snapshots() {
    let p = corpus::MULTIPLY.program();
    let t = trace(&p, &ints(&[13, 33]), 10_000);
    let at = |label: &str| -> Vec<std::collections::BTreeMap<String, IntVal>> {
        p.label_copies(label).into_iter().flat_map(|i| t.snapshots_at(i)).collect()
    };
    let l7 = at("L7");
    let xw: Vec<(i64, i64)> = l7
        .iter()
        .map(|s| (i64::try_from(&s["x"]).unwrap(), i64::try_from(&s["w"]).unwrap()))
        .collect();
    assert_eq!(xw, [(27, 0), (22, 33), (12, 99), (24, 198), (16, 429)]);
    let first = &l7[0];
    assert_eq!(first["y"], BigInt::from(33));
    assert_eq!(first["v"], BigInt::from(32));
    let l8 = at("L8");
    assert_eq!(l8.len(), 1);
    assert_eq!(l8[0]["x"], BigInt::from(32));
    assert_eq!(l8[0]["w"], BigInt::from(429));
}

#[test]
fn powers_of_two_trace_after_collecting_bits() {
    let p = corpus::POWERS_OF_TWO.program();
    let t = trace(&p, &ints(&[13]), 10_000);
    let l4: Vec<_> = p.label_copies("L4").into_iter().flat_map(|i| t.snapshots_at(i)).collect();
    assert_eq!(l4.len(), 1);
    assert_eq!(l4[0]["u"], BigInt::from(0b10110));
}

#[test]
fn queue_layout_after_third_number() {
    let p = corpus::QUEUE.program();
    let t = trace(&p, &ints(&[3, 6, 5, 27, 1]), 10_000);
    // the branch that ends line 3 runs once per stored number
    let l3 = p.label_copies("L3")[0];
    let branch = (l3..p.instrs.len()).find(|&i| p.instrs[i].target().is_some()).unwrap();
    let snaps = t.snapshots_at(branch);
    assert_eq!(snaps.len(), 3);
    let s = &snaps[2];
    assert_eq!(s["u"], BigInt::from(1) << 11);
    assert_eq!(s["x"], BigInt::from(0b11010111011));
    assert_eq!(s["y"], BigInt::from(0b100100001));
    assert_eq!(s["z"], BigInt::from(1));
}
