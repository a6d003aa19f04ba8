//! End-to-end checks through the public API: codes issued by the allocator and
//! the adversaries run on the reference machine and survive serialization.

use proptest::prelude::*;
use treelab::adversaries::{run_deficiency_adversary, run_threshold_adversary};
use treelab::constructions::{d_set_enumerate, positive_tree, shattered_tree, wgt};
use treelab::functional::TotalFunctional;
use treelab::kcl::KclAllocator;
use treelab::machine::{sub_prefix, Run};
use treelab::order::OrderTable;
use treelab::{bits, BitString, Dyadic, PrefixFreeCodebook, ReferenceMachine};

#[test]
fn allocated_codes_run_on_the_machine() {
    let mut a = KclAllocator::new();
    let targets = [bits("1011001110"), bits("0000000000000"), bits("11111111")];
    for (len, t) in [3, 4, 2].into_iter().zip(&targets) {
        a.request(len, t.clone()).unwrap();
    }
    let mut m = ReferenceMachine::new();
    let (id, c) = m.register_machine(a.issued().clone()).unwrap();
    assert_eq!((id, c), (0, 2));
    for (cw, out) in a.issued().entries() {
        let p = sub_prefix(id).concat(cw);
        assert_eq!(m.run(&p), Run::Halted { output: out.clone(), used: p.len() });
        assert_eq!(m.k_hat(out), p.len() as u64);
    }
    assert!(m.kraft() <= Dyadic::one());
}

#[test]
fn adversary_machine_round_trips() {
    let phi = TotalFunctional::random(3, 7, 9);
    let run = run_deficiency_adversary(&phi, ReferenceMachine::new(), 3, 256).unwrap();
    assert!(run.converged);
    let m = &run.state.machine;
    let back = ReferenceMachine::from_json(&m.to_json()).unwrap();
    assert_eq!(back.to_json(), m.to_json());
    for a in &run.log {
        assert_eq!(back.k_hat(&a.sigma), m.k_hat(&a.sigma));
        assert!(back.deficiency(&a.sigma) > a.k as i64);
    }
    assert!(run.report(&phi, 7, 3).all_ok());
}

#[test]
fn deficient_strings_shrink_a_positive_tree() {
    let mut m = ReferenceMachine::new();
    let sigma = bits("110100111010");
    m.register_machine(PrefixFreeCodebook::from_entries([(bits("0"), sigma.clone())]).unwrap())
        .unwrap();
    // K̂(σ) = 3 against length 12
    assert_eq!(m.deficiency(&sigma), 9);
    let d = d_set_enumerate(&m, 12, 4);
    assert_eq!(d.len(), 4);
    assert_eq!(wgt(&d), Dyadic::pow2(-10));
    for k in 1..=4 {
        let t = positive_tree(&d, k, 12).unwrap();
        assert!(!t.tree.contains(&sigma));
        assert_eq!(t.complement, Dyadic::pow2(-12));
    }
}

#[test]
fn threshold_run_on_a_compressed_machine() {
    let mut m = ReferenceMachine::new();
    m.register_single(bits("01"), bits("1111111111")).unwrap();
    let phi = TotalFunctional::random(8, 6, 8);
    let theta = phi.map("zero", |_, _| 0i64);
    let run = run_threshold_adversary(&phi, &theta, m, 128).unwrap();
    // the second registered machine has constant 1 + |γ(2)| = 4
    assert_eq!(run.state.c, 4);
    let report = run.report(&phi, &theta).unwrap();
    assert!(report.weight_ok && report.accounting_ok);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn shattered_widths_follow_g(steps in proptest::collection::vec(any::<bool>(), 1..12), xs in any::<u16>()) {
        let mut g = vec![0u64];
        for s in &steps {
            g.push(g.last().unwrap() + *s as u64);
        }
        let depth = steps.len();
        let x = BitString::from_value(xs as u64 & ((1 << depth) - 1), depth);
        let t = shattered_tree(&x, &OrderTable::new(g.clone()), depth).unwrap();
        for (n, &gn) in g.iter().enumerate() {
            prop_assert_eq!(t.width(n), 1usize << gn);
            prop_assert!(t.contains(&x.prefix(n)));
        }
    }

    #[test]
    fn deficiency_runs_respect_their_weight_bound(seed in 0u64..10_000, horizon in 2usize..7, max_use in 0usize..8) {
        let phi = TotalFunctional::random(seed, horizon, max_use);
        let run = run_deficiency_adversary(&phi, ReferenceMachine::new(), 3, 256).unwrap();
        let report = run.report(&phi, horizon, 3);
        prop_assert!(report.converged);
        prop_assert!(report.weight_ok && report.disjoint_ok);
        prop_assert!(report.rows.iter().all(|r| r.ok));
    }
}
