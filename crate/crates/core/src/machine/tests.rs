use std::collections::HashMap;

use proptest::prelude::*;

use super::*;
use crate::bitcore::bits;

fn sigma0() -> BitString {
    bits("10110010")
}

fn with_sigma0() -> ReferenceMachine {
    let mut m = ReferenceMachine::new();
    let (id, c) = m.register_single(bits("00"), sigma0()).unwrap();
    assert_eq!((id, c), (0, 2));
    m
}

/// Minimum program length and total weight per output, by exhaustive enumeration.
fn brute_force(m: &ReferenceMachine, max_len: usize) -> HashMap<BitString, (u64, Dyadic)> {
    let mut table: HashMap<BitString, (u64, Dyadic)> = HashMap::new();
    for (p, out) in m.programs_up_to(max_len) {
        let e = table.entry(out).or_insert((u64::MAX, Dyadic::zero()));
        e.0 = e.0.min(p.len() as u64);
        e.1 += Dyadic::pow2(-(p.len() as i64));
    }
    table
}

#[test]
fn literal_costs() {
    let m = ReferenceMachine::new();
    assert_eq!(m.k_hat(&bits("")), 2);
    assert_eq!(m.k_hat(&bits("00000000")), 16);
    assert_eq!(m.deficiency(&bits("")), -2);
    assert_eq!(m.deficiency(&bits("11111111")), -8);
    assert_eq!(m.m_hat(&bits("")), Dyadic::pow2(-2));
    assert_eq!(m.m_hat(&bits("0")), Dyadic::pow2(-5));
    assert_eq!(m.k_hat_nat(0), 2);
}

#[test]
fn registered_compression() {
    let m = with_sigma0();
    assert_eq!(m.k_hat(&sigma0()), 4);
    assert_eq!(m.deficiency(&sigma0()), 4);
    assert_eq!(m.m_hat(&sigma0()), Dyadic::pow2(-16) + Dyadic::pow2(-4));
    let bf = brute_force(&m, 16);
    assert_eq!(bf[&sigma0()], (4, Dyadic::pow2(-16) + Dyadic::pow2(-4)));
    assert_eq!(
        m.run(&bits("1100")),
        Run::Halted {
            output: sigma0(),
            used: 4
        }
    );
}

#[test]
fn registration_uses_distinct_sub_prefixes() {
    let mut m = ReferenceMachine::new();
    let before: Vec<u64> = (0..64).map(|r| m.k_hat_nat(r)).collect();
    m.register_machine(PrefixFreeCodebook::new()).unwrap();
    let after: Vec<u64> = (0..64).map(|r| m.k_hat_nat(r)).collect();
    assert_eq!(before, after);
    let (id1, c1) = m.register_single(bits("0"), bits("1111")).unwrap();
    let (id2, c2) = m.register_single(bits("1"), bits("0000")).unwrap();
    assert_eq!((id1, id2), (1, 2));
    assert_eq!((sub_prefix(1), sub_prefix(2)), (bits("1010"), bits("1011")));
    assert_eq!((c1, c2), (4, 4));
    for (p, out) in m.programs_up_to(16) {
        assert_eq!(
            m.run(&p),
            Run::Halted {
                output: out,
                used: p.len()
            }
        );
    }
    let bf = brute_force(&m, 16);
    assert_eq!(bf[&bits("1111")].0, 5);
    assert_eq!(bf[&bits("0000")].0, 5);
}

#[test]
fn rejects_bad_codebooks() {
    let mut m = ReferenceMachine::new();
    assert!(PrefixFreeCodebook::from_entries([(bits("0"), bits("")), (bits("01"), bits(""))]).is_err());
    m.register_single(bits("0"), bits("11")).unwrap();
    assert!(m.extend(0, bits("00"), bits("1")).is_err());
    assert!(matches!(m.extend(3, bits("1"), bits("1")), Err(MachineError::UnknownMachine(3))));
}

#[test]
fn k_hat_matches_program_enumeration() {
    let mut m = with_sigma0();
    m.register_machine(
        PrefixFreeCodebook::from_entries([
            (bits("000"), bits("0101010101")),
            (bits("001"), bits("")),
            (bits("01"), bits("111")),
            (bits("1"), sigma0()),
        ])
        .unwrap(),
    )
    .unwrap();
    let bf = brute_force(&m, 24);
    for n in 0..=10 {
        for s in BitString::all_of_length(n) {
            let (k, w) = &bf[&s];
            assert_eq!(m.k_hat(&s), *k, "{s:?}");
            if literal_len(n) <= 24 {
                assert_eq!(&m.m_hat(&s), w, "{s:?}");
            }
        }
    }
}

#[test]
fn counting_examples() {
    let m = ReferenceMachine::new();
    assert_eq!(m.counting_check(2, 20), (1, true));
    assert_eq!(m.counting_check(1, 20), (0, true));
    let mut m = ReferenceMachine::new();
    m.register_machine(
        PrefixFreeCodebook::from_entries([
            (bits("000"), bits("00000000")),
            (bits("001"), bits("00000001")),
            (bits("010"), bits("00000010")),
        ])
        .unwrap(),
    )
    .unwrap();
    // Registered programs have length c + 3 = 5, the same as two literal programs.
    assert_eq!(m.counting_check(3, 20), (1, true));
    assert_eq!(m.counting_check(5, 20), (6, true));
}

#[test]
fn counting_matches_exhaustive_scan() {
    let mut m = with_sigma0();
    m.register_single(bits("0"), bits("0000000000000")).unwrap();
    for mm in 0..=16u64 {
        let scan = (0..=16)
            .flat_map(BitString::all_of_length)
            .filter(|s| m.k_hat(s) <= mm)
            .count() as u64;
        let (count, ok) = m.counting_check(mm, 16);
        assert_eq!(count, scan, "m = {mm}");
        assert!(ok);
        assert!(count < 1 << (mm + 1));
    }
}

#[test]
fn kraft_accounting() {
    let m = with_sigma0();
    assert_eq!(m.kraft(), Dyadic::pow2(-1) + Dyadic::pow2(-4));
    let mut prev = Dyadic::zero();
    for l in 0..30 {
        let p = ReferenceMachine::literal_kraft_partial(l);
        assert!(p >= prev && p < Dyadic::pow2(-1));
        prev = p;
    }
    let enumerated: Dyadic = m
        .programs_up_to(20)
        .iter()
        .map(|(p, _)| Dyadic::pow2(-(p.len() as i64)))
        .sum();
    assert_eq!(enumerated, ReferenceMachine::literal_kraft_partial(20) + Dyadic::pow2(-4));
}

#[test]
fn conditional_costs() {
    let mut m = ReferenceMachine::new();
    let tau = bits("0110");
    assert_eq!(m.k_hat_cond(&tau, &tau), Some(2));
    assert_eq!(m.k_hat_cond(&bits("01101011"), &tau), Some(10));
    assert_eq!(m.k_hat_cond(&bits("1"), &tau), None);
    let (id, c) = m.conditional_mut().register();
    assert_eq!(c, 2);
    m.conditional_mut().extend(id, tau.clone(), bits("010"), bits("1")).unwrap();
    assert_eq!(m.k_hat_cond(&bits("1"), &tau), Some(5));
    m.conditional_mut().extend(id, tau.clone(), bits("1"), bits("01101011")).unwrap();
    assert_eq!(m.k_hat_cond(&bits("01101011"), &tau), Some(3));
}

#[test]
fn chain_rule_overhead_is_bounded() {
    // K̂(τρ) ≤ K̂(τ) + K̂(τρ | τ) + c′ on the literal branches; the largest
    // observed overhead is frozen here.
    let m = ReferenceMachine::new();
    let mut worst = i64::MIN;
    for a in 0..=9 {
        for b in 0..=9 {
            let tau = BitString::zeros(a);
            let sigma = tau.concat(&BitString::zeros(b));
            let lhs = m.k_hat(&sigma) as i64;
            let rhs = (m.k_hat(&tau) + m.k_hat_cond(&sigma, &tau).unwrap()) as i64;
            worst = worst.max(lhs - rhs);
        }
    }
    assert_eq!(worst, -2);
}

#[test]
fn json_round_trip() {
    let mut m = with_sigma0();
    let (id, _) = m.conditional_mut().register();
    m.conditional_mut().extend(id, bits("1"), bits("0"), bits("0")).unwrap();
    let json = m.to_json();
    let back = ReferenceMachine::from_json(&json).unwrap();
    assert_eq!(back.to_json(), json);
    assert_eq!(back.k_hat(&sigma0()), 4);
    assert_eq!(back.k_hat_cond(&bits("0"), &bits("1")), Some(3));
    let tampered = json.replace("\"kraft\": \"9/2^4\"", "\"kraft\": \"1/2^1\"");
    assert_ne!(tampered, json);
    assert!(ReferenceMachine::from_json(&tampered).is_err());
}

fn arb_codebook() -> impl Strategy<Value = PrefixFreeCodebook> {
    proptest::collection::vec((0u64..256, 1usize..9, 0u64..1024, 0usize..11), 0..8).prop_map(|raw| {
        let mut cb = PrefixFreeCodebook::new();
        for (v, w, o, ow) in raw {
            let cw = BitString::from_value(v & ((1 << w) - 1), w);
            let out = BitString::from_value(o & ((1 << ow) - 1), ow);
            let _ = cb.insert(cw, out);
        }
        cb
    })
}

proptest! {
    #[test]
    fn kraft_and_monotonicity(books in proptest::collection::vec(arb_codebook(), 1..5)) {
        let mut m = ReferenceMachine::new();
        let probes: Vec<BitString> = (0..=10).flat_map(BitString::all_of_length).step_by(7).collect();
        for cb in books {
            let k_before: Vec<u64> = probes.iter().map(|s| m.k_hat(s)).collect();
            let m_before: Vec<Dyadic> = probes.iter().map(|s| m.m_hat(s)).collect();
            let outputs: Vec<BitString> = cb.entries().map(|(_, o)| o.clone()).collect();
            m.register_machine(cb).unwrap();
            prop_assert!(m.kraft() <= Dyadic::one());
            for (i, s) in probes.iter().enumerate() {
                prop_assert!(m.k_hat(s) <= k_before[i]);
                prop_assert!(m.m_hat(s) >= m_before[i]);
            }
            for o in outputs {
                prop_assert!(m.m_hat(&o) <= m.kraft());
            }
        }
        for mm in 0..=16 {
            prop_assert!(m.counting_check(mm, 16).1);
        }
    }
}
