use std::collections::BTreeSet;

use proptest::prelude::*;

use super::*;
use crate::bitcore::{bits, BitString, Dyadic};
use crate::machine::ReferenceMachine;
use crate::order::OrderTable;
use crate::trees::{BasicOpenClass, ExplicitExclusion, PrunedTree};

fn tables(f: &[u64], ell: &[u64], d: &[u64]) -> KfldTables {
    KfldTables {
        f: f.to_vec(),
        ell: ell.to_vec(),
        d: d.to_vec(),
    }
}

#[test]
fn kfld_on_the_empty_codebook() {
    let m = ReferenceMachine::new();
    let p = kfld_presentation(&tables(&[1, 2], &[2, 3], &[0, 1]), &m, 1000).unwrap();
    assert_eq!(p.levels[1].len(), 4);
    assert_eq!(p.levels[2].len(), 4 * 28);
    assert!(p.levels.iter().all(|l| l.values().all(|r| r.is_none())));
    assert!(p.levels[2].keys().all(|c| c.len() == 2 + 6));
    p.check().unwrap();
}

#[test]
fn kfld_after_one_compression() {
    let mut m = ReferenceMachine::new();
    let star = bits("10110");
    m.register_single(bits("0"), star.clone()).unwrap();
    assert_eq!(m.k_hat(&star), 3);
    let t = tables(&[1, 1], &[2, 5], &[0, 1]);
    let early = kfld_presentation(&t, &m, 2).unwrap();
    assert!(early.levels[2].values().all(|r| r.is_none()));
    let p = kfld_presentation(&t, &m, 3).unwrap();
    p.check().unwrap();
    for (code, r) in &p.levels[2] {
        let slot2 = code.suffix_from(2);
        assert_eq!(r.is_some(), slot2 == star, "{code}");
        if r.is_some() {
            assert_eq!(*r, Some(3));
        }
    }
    assert_eq!(p.survivors(2, 3).len(), 4 * 31);
    assert_eq!(p.survivors(2, 2).len(), 4 * 32);
}

#[test]
fn kfld_with_empty_slots() {
    let m = ReferenceMachine::new();
    let p = kfld_presentation(&tables(&[0, 0, 0], &[1, 2, 3], &[0, 0, 0]), &m, 10).unwrap();
    for n in 0..=3 {
        assert_eq!(p.survivors(n, 10), vec![&BitString::empty()]);
    }
}

#[test]
fn kfld_rejects_bad_tables() {
    let m = ReferenceMachine::new();
    assert!(matches!(
        kfld_presentation(&tables(&[1, 1], &[3, 3], &[0, 0]), &m, 0),
        Err(ClassError::Params(_))
    ));
    assert!(matches!(
        kfld_presentation(&tables(&[5], &[2], &[0]), &m, 0),
        Err(ClassError::Params(_))
    ));
    assert!(matches!(
        kfld_presentation(&tables(&[8, 8], &[8, 9], &[0, 0]), &m, 0),
        Err(ClassError::Guard(_))
    ));
}

#[test]
fn certificates() {
    let m = ReferenceMachine::new();
    let empty = DeepClassPresentation::new(vec![Default::default(), Default::default()], 0).unwrap();
    let rows = depth_certificate_check(&empty, &OrderTable::identity(4), 3, 0, &m);
    assert_eq!(rows.len(), 2);
    assert!(rows.iter().all(|r| r.ok && r.mass.is_zero() && r.provisional));

    let tau = bits("0110");
    let single = DeepClassPresentation::new(
        vec![
            [(BitString::empty(), None)].into_iter().collect(),
            [(tau.clone(), None)].into_iter().collect(),
        ],
        0,
    )
    .unwrap();
    let rows = depth_certificate_check(&single, &OrderTable::identity(3), 5, 0, &m);
    assert_eq!(rows[1].mass, Dyadic::pow2(-(m.k_hat(&tau) as i64)));

    let p = kfld_presentation(&tables(&[2, 3], &[2, 3], &[0, 0]), &m, 0).unwrap();
    let zero = OrderTable::new(vec![0; 3]);
    for r in depth_certificate_check(&p, &zero, 2, 0, &m) {
        assert_eq!(r.bound, Dyadic::one());
        assert!(r.ok);
    }
}

#[test]
fn presentation_check_rejects_orphans() {
    let bad = DeepClassPresentation::new(
        vec![
            [(bits("0"), None)].into_iter().collect(),
            [(bits("10"), None)].into_iter().collect(),
        ],
        0,
    );
    assert!(bad.is_err());
    let late = DeepClassPresentation::new(
        vec![
            [(BitString::empty(), Some(1))].into_iter().collect(),
            [(bits("1"), None)].into_iter().collect(),
        ],
        1,
    );
    assert!(late.is_err());
}

/// Strings of length `n` all of whose prefixes have `d̂ < c`.
fn legal_strings(m: &ReferenceMachine, c: i64, n: usize) -> Vec<BitString> {
    BitString::all_of_length(n)
        .filter(|x| (0..=n).all(|k| m.deficiency(&x.prefix(k)) < c))
        .collect()
}

/// The measure threshold recomputed by counting: `2|Q| · (total − alive) < total`.
fn check_by_counting(m: &ReferenceMachine, c: i64, d: usize, q: usize, tau: &BitString) -> bool {
    let alive = legal_strings(m, c, d).iter().filter(|x| tau.is_prefix_of(x)).count() as u64;
    let total = 1u64 << (d - tau.len());
    2 * q as u64 * (total - alive) < total
}

#[test]
fn density_on_the_empty_codebook() {
    let m = ReferenceMachine::new();
    let q: BTreeSet<BitString> = ["00", "01", "11"].iter().map(|s| bits(s)).collect();
    let out = density_extension_search(&q, &m, 0, 6).unwrap();
    assert_eq!(out.length, 2);
    assert!(out.extensions.iter().all(|(s, t)| s == t));
    assert_eq!(out.threshold_denominator, 6);
    assert_eq!(out.joint_lower, Dyadic::one());
}

#[test]
fn density_steers_away_from_a_dead_subtree() {
    let mut m = ReferenceMachine::new();
    let (id, _) = m.register_single(bits("0"), bits("010")).unwrap();
    m.extend(id, bits("1"), bits("011")).unwrap();
    assert_eq!(m.deficiency(&bits("010")), 0);
    let q: BTreeSet<BitString> = [bits("0"), bits("1")].into();
    let out = density_extension_search(&q, &m, 0, 5).unwrap();
    assert_eq!(out.length, 2);
    assert_eq!(out.extensions[&bits("0")], bits("00"));
    assert_eq!(out.extensions[&bits("1")], bits("10"));
    assert_eq!(out.measures[&bits("0")], Dyadic::one());
    let pc = PcApprox::new(&m, 0, 5);
    assert_eq!(pc.relative_measure(&bits("0")), Dyadic::pow2(-1));
    assert_eq!(pc.relative_measure(&bits("01")), Dyadic::zero());
    for tau in out.extensions.values() {
        assert!(check_by_counting(&m, 0, 5, 2, tau));
    }
}

#[test]
fn density_with_a_single_string() {
    let mut m = ReferenceMachine::new();
    let (id, _) = m.register_single(bits("00"), bits("000")).unwrap();
    m.extend(id, bits("01"), bits("0010")).unwrap();
    let q: BTreeSet<BitString> = [bits("0")].into();
    let pc = PcApprox::new(&m, -1, 4);
    assert_eq!(pc.relative_measure(&bits("0")), Dyadic::scaled(5, 3));
    let out = density_extension_search(&q, &m, -1, 4).unwrap();
    assert_eq!(out.extensions[&bits("0")], bits("0"));
    // exactly one half is not a majority
    m.extend(id, bits("10"), bits("0011")).unwrap();
    let pc = PcApprox::new(&m, -1, 4);
    assert_eq!(pc.relative_measure(&bits("0")), Dyadic::pow2(-1));
    let out = density_extension_search(&q, &m, -1, 4).unwrap();
    assert_eq!(out.threshold_denominator, 2);
    assert_eq!(out.extensions[&bits("0")], bits("01"));
    assert_eq!(out.measures[&bits("0")], Dyadic::one());
}

#[test]
fn density_failure_is_reported() {
    let mut m = ReferenceMachine::new();
    let (id, _) = m.register_single(bits("0"), bits("00")).unwrap();
    m.extend(id, bits("1"), bits("01")).unwrap();
    assert_eq!(m.deficiency(&bits("00")), -1);
    let q: BTreeSet<BitString> = [bits("0")].into();
    assert!(matches!(
        density_extension_search(&q, &m, -1, 6),
        Err(ClassError::NoExtension { .. })
    ));
}

fn frontier(depth: usize, leaves: &[&str]) -> Frontier {
    Frontier::from_leaves(depth, leaves.iter().map(|s| bits(s))).unwrap()
}

#[test]
fn frontier_basics() {
    let f = frontier(3, &["000", "001", "110"]);
    assert_eq!(f.widths(), [1, 2, 2, 3]);
    assert_eq!(f.level(1), [bits("0"), bits("1")]);
    assert!(f.contains(&bits("11")));
    assert!(!f.contains(&bits("10")));
    assert!(f.extends(&frontier(1, &["0", "1"])));
    assert!(!f.extends(&frontier(1, &["0"])));
    assert_eq!(f.to_prefix().width_profile(), [1, 2, 2, 3]);
    assert!(f.extends_prefix(&PrunedTree::full(1)));
    assert!(!f.branches_over(&frontier(1, &["0", "1"])));
    assert!(f.branches_over(&frontier(0, &[""])));
    assert_eq!(bits("0110").common_prefix_len(&bits("0101")), 2);
    assert!(Frontier::from_leaves(2, [bits("0")]).is_err());
}

#[test]
fn game_without_classes_branches_minimally() {
    let m = ReferenceMachine::new();
    let mut state = GameState::new(GameConfig::default(), Vec::new(), &m);
    let rec = banach_mazur_round(&mut state, None).unwrap();
    assert_eq!((rec.depth, rec.width), (1, 2));
    assert_eq!(rec.certificate, None);
    let reply = frontier(2, &["00", "11"]);
    let rec = banach_mazur_round(&mut state, Some(reply)).unwrap();
    assert_eq!((rec.depth, rec.width), (3, 4));
}

#[test]
fn game_rejects_illegal_moves() {
    let mut m = ReferenceMachine::new();
    m.register_single(bits("0"), bits("010")).unwrap();
    let config = GameConfig::default();
    let mut state = GameState::new(config, Vec::new(), &m);
    banach_mazur_round(&mut state, None).unwrap();
    assert!(matches!(
        banach_mazur_round(&mut state, None),
        Err(ClassError::IllegalMove { .. })
    ));
    let shallow = state.frontier.clone();
    assert!(matches!(
        banach_mazur_round(&mut state, Some(shallow)),
        Err(ClassError::IllegalMove { .. })
    ));
    assert!(matches!(
        banach_mazur_round(&mut state, Some(frontier(2, &["00", "01"]))),
        Err(ClassError::IllegalMove { .. })
    ));
    let compressed = frontier(3, &["010", "100"]);
    assert!(matches!(
        banach_mazur_round(&mut state, Some(compressed)),
        Err(ClassError::IllegalMove { .. })
    ));
}

#[test]
fn game_avoids_a_basic_open() {
    let m = ReferenceMachine::new();
    let f0 = PrunedTree::full(2);
    let classes: Vec<Box<dyn GameClass>> = vec![Box::new(BasicOpenClass(f0.clone()))];
    let config = GameConfig {
        rounds: 1,
        ..GameConfig::default()
    };
    let t = run_game(config, classes, &m, &mut seeded_opponent(1)).unwrap();
    assert_eq!(t.failure, None);
    let classes: Vec<Box<dyn GameClass>> = vec![Box::new(BasicOpenClass(f0.clone()))];
    let v = verify(&t, &classes, &m).unwrap();
    assert!(v.ok, "{v:?}");
    let last = Frontier::from_leaves(t.final_depth, t.final_leaves.clone()).unwrap();
    assert!(!last.extends_prefix(&f0));
}

#[test]
fn unkillable_class_is_a_strategy_failure() {
    let m = ReferenceMachine::new();
    let classes: Vec<Box<dyn GameClass>> =
        vec![Box::new(ConfinedClass { pattern: bits("1") }), Box::new(BasicOpenClass(PrunedTree::root()))];
    let t = run_game(GameConfig::default(), classes, &m, &mut seeded_opponent(2)).unwrap();
    let failure = t.failure.clone().unwrap();
    assert_eq!(failure.round, 1);
    let classes: Vec<Box<dyn GameClass>> =
        vec![Box::new(ConfinedClass { pattern: bits("1") }), Box::new(BasicOpenClass(PrunedTree::root()))];
    let v = verify(&t, &classes, &m).unwrap();
    assert!(!v.complete && !v.ok);
}

#[test]
fn explicit_exclusions_are_hit() {
    let m = ReferenceMachine::new();
    let mut x = ExplicitExclusion::new();
    x.exclude(0, PrunedTree::path(&bits("0110")));
    x.exclude(5, PrunedTree::full(1));
    let config = GameConfig {
        rounds: 2,
        ..GameConfig::default()
    };
    let t = run_game(config, vec![Box::new(x.clone())], &m, &mut seeded_opponent(3)).unwrap();
    assert_eq!(t.failure, None);
    assert_eq!(t.moves[0].certificate.as_ref().unwrap().witness, "extends exclusion 0");
    let v = verify(&t, &[Box::new(x) as Box<dyn GameClass>], &m).unwrap();
    assert!(v.ok, "{v:?}");
}

#[test]
fn seeded_game_verifies() {
    let mut m = ReferenceMachine::new();
    let (id, _) = m.register_single(bits("0"), bits("1110")).unwrap();
    m.extend(id, bits("10"), bits("10101")).unwrap();
    let config = GameConfig {
        rounds: 10,
        c: 0,
        ..GameConfig::default()
    };
    let t = run_game(config, seeded_classes(11, 10), &m, &mut seeded_opponent(11)).unwrap();
    assert_eq!(t.failure, None);
    let v = verify(&t, &seeded_classes(11, 10), &m).unwrap();
    assert!(v.ok, "{v:?}");
    assert_eq!(v.classes.len(), 10);
    assert!(!t.final_leaves.iter().any(|l| bits("1110").is_prefix_of(l)));
}

#[test]
fn verification_catches_tampering() {
    let m = ReferenceMachine::new();
    let config = GameConfig {
        rounds: 4,
        ..GameConfig::default()
    };
    let t = run_game(config, seeded_classes(5, 4), &m, &mut seeded_opponent(5)).unwrap();
    assert!(verify(&t, &seeded_classes(5, 4), &m).unwrap().ok);

    let mut cut = t.clone();
    cut.final_leaves.pop();
    let v = verify(&cut, &seeded_classes(5, 4), &m).unwrap();
    assert!(!v.ok && !v.moves_ok);

    let mut single = t.clone();
    single.final_leaves.truncate(1);
    let v = verify(&single, &seeded_classes(5, 4), &m).unwrap();
    assert!(!v.moves_ok && v.doubling_failure.is_some());

    let mut strict = m.clone();
    let leaf = t.final_leaves[0].prefix(6);
    strict.register_single(bits("0"), leaf.clone()).unwrap();
    let v = verify(&t, &seeded_classes(5, 4), &strict).unwrap();
    assert_eq!(v.violation, Some(leaf));
}

fn arb_leaves() -> impl Strategy<Value = (usize, Vec<BitString>)> {
    (1usize..8).prop_flat_map(|d| {
        (Just(d), proptest::collection::vec(0u64..(1 << d), 1..12))
            .prop_map(|(d, vs)| (d, vs.into_iter().map(|v| BitString::from_value(v, d)).collect()))
    })
}

fn arb_machine() -> impl Strategy<Value = ReferenceMachine> {
    proptest::collection::vec((1usize..4, 0u64..64, 3usize..7), 0..6).prop_map(|entries| {
        let mut m = ReferenceMachine::new();
        let (id, _) = m.register_machine(Default::default()).unwrap();
        let mut used = BTreeSet::new();
        for (k, v, n) in entries {
            let cw = BitString::from_value(v % (1 << k), k);
            if used.iter().any(|u: &BitString| u.is_comparable(&cw)) {
                continue;
            }
            used.insert(cw.clone());
            m.extend(id, cw, BitString::from_value(v % (1 << n), n)).unwrap();
        }
        m
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn frontier_widths_match_the_closure((d, leaves) in arb_leaves()) {
        let f = Frontier::from_leaves(d, leaves).unwrap();
        let p = f.to_prefix();
        prop_assert_eq!(f.widths(), &p.width_profile()[..]);
        for n in 0..=d {
            prop_assert!(f.extends(&f.truncate(n)));
            prop_assert_eq!(f.level(n), p.level(n).iter().cloned().collect::<Vec<_>>());
            prop_assert!(f.extends_prefix(&p.truncate(n)));
        }
    }

    #[test]
    fn certificate_mass_is_monotone(m in arb_machine()) {
        let t = tables(&[1, 1, 1], &[3, 5, 6], &[0, 1, 2]);
        let g = OrderTable::identity(4);
        let mut prev: Option<Vec<CertificateRow>> = None;
        let full = kfld_presentation(&t, &m, 64).unwrap();
        full.check().unwrap();
        for s in 0..12u64 {
            let rows = depth_certificate_check(&full, &g, 3, s, &m);
            if let Some(p) = &prev {
                for (a, b) in p.iter().zip(&rows) {
                    prop_assert!(b.mass <= a.mass);
                    prop_assert!(!a.ok || b.ok);
                }
            }
            // the staged snapshot agrees with the full one up to its stage
            let snap = kfld_presentation(&t, &m, s).unwrap();
            for n in 0..=3 {
                prop_assert_eq!(snap.survivors(n, s), full.survivors(n, s));
            }
            prev = Some(rows);
        }
    }

    #[test]
    fn density_meets_its_threshold(m in arb_machine(), qv in proptest::collection::btree_set(0u64..8, 1..5)) {
        let c = 0;
        let d = 7;
        let q: BTreeSet<BitString> = qv.iter().map(|&v| BitString::from_value(v, 3)).collect();
        let legal = legal_strings(&m, c, d);
        let pre = q.iter().all(|s| legal.iter().any(|x| s.is_prefix_of(x)));
        match density_extension_search(&q, &m, c, d) {
            Ok(out) => {
                prop_assert_eq!(out.extensions.len(), q.len());
                for (s, t) in &out.extensions {
                    prop_assert!(s.is_prefix_of(t));
                    prop_assert_eq!(t.len(), out.length);
                    prop_assert!(check_by_counting(&m, c, d, q.len(), t));
                }
                prop_assert!(out.joint_lower > Dyadic::zero());
            }
            Err(_) => prop_assert!(!pre),
        }
    }
}
