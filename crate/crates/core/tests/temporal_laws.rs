use std::collections::BTreeSet;

use proptest::prelude::*;
use rand::Rng;
use wiredsys::contracts::{PortSubset, StaticContract};
use wiredsys::temporal::{
    check_restriction_closed, complete_graph, glue_sections, lift_static, restrict_section, time_membership, Carrier,
    PortPredicate, Section, TimeContract, TimeContractKind,
};
use wiredsys::{Interface, PortType};
use wiredsys_testkit as tk;

fn two_trues_contract() -> TimeContract {
    let b = PortType::booleans();
    let iface = Interface::new("P", vec![b.clone()], vec![b.clone()]);
    let carriers = TimeContract::finite_carriers(&[b]).unwrap();
    let is = |v: usize| PortSubset::Labels(BTreeSet::from([v]));
    let kind = TimeContractKind::Implies {
        pattern: vec![PortPredicate::new(0, is(1)), PortPredicate::new(0, is(1))],
        response: PortPredicate::new(0, is(0)),
        within: 5,
    };
    TimeContract::new(iface, carriers.clone(), carriers, kind, None).unwrap()
}

#[test]
fn path_count_is_a_power() {
    for a in 1..=3usize {
        let labels: Vec<String> = (0..a).map(|v| v.to_string()).collect();
        let g = complete_graph(&labels);
        for n in 0..=4 {
            assert_eq!(g.sections(n).len(), a.pow(n as u32 + 1), "|A| = {a}, n = {n}");
        }
    }
}

#[test]
fn two_trues_matches_set_builder_formula() {
    let c = two_trues_contract();
    for len in 1..=7usize {
        for a in 0..1usize << len {
            for b in 0..1usize << len {
                let bits = |w: usize| (0..len).map(|i| w >> i & 1).collect::<Vec<_>>();
                let (xa, xb) = (bits(a), bits(b));
                let x = Section::in_complete(&xa, 2).unwrap();
                let y = Section::in_complete(&xb, 2).unwrap();
                let want = tk::two_trues_then_false(
                    &xa.iter().map(|&v| v == 1).collect::<Vec<_>>(),
                    &xb.iter().map(|&v| v == 1).collect::<Vec<_>>(),
                );
                assert_eq!(time_membership(&c, &x, &y).unwrap(), want, "a = {xa:?}, b = {xb:?}");
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn restriction_is_functorial(seed in any::<u64>()) {
        let mut r = tk::rng(seed);
        let n = r.gen_range(0..8);
        let carrier = r.gen_range(1..4);
        let values: Vec<usize> = (0..=n).map(|_| r.gen_range(0..carrier)).collect();
        let s = Section::in_complete(&values, carrier).unwrap();
        prop_assert_eq!(restrict_section(&s, 0, n).unwrap(), s.clone());
        let p = r.gen_range(0..=n);
        let m = r.gen_range(0..=n - p);
        let q = r.gen_range(0..=m);
        let k = r.gen_range(0..=m - q);
        let twice = restrict_section(&restrict_section(&s, p, m).unwrap(), q, k).unwrap();
        prop_assert_eq!(twice, restrict_section(&s, p + q, k).unwrap());
    }

    #[test]
    fn glue_then_restrict(seed in any::<u64>()) {
        let mut r = tk::rng(seed);
        let carrier = r.gen_range(1..4);
        let (n, m) = (r.gen_range(0..5), r.gen_range(0..5));
        let xs: Vec<usize> = (0..=n).map(|_| r.gen_range(0..carrier)).collect();
        let mut ys: Vec<usize> = (0..=m).map(|_| r.gen_range(0..carrier)).collect();
        ys[0] = xs[n];
        let x = Section::in_complete(&xs, carrier).unwrap();
        let y = Section::in_complete(&ys, carrier).unwrap();
        let g = glue_sections(&x, &y).unwrap();
        prop_assert_eq!(restrict_section(&g, 0, x.len()).unwrap(), x.clone());
        prop_assert_eq!(restrict_section(&g, x.len(), y.len()).unwrap(), y);
    }

    #[test]
    fn lifted_contract_at_length_zero_is_the_static_one(seed in any::<u64>()) {
        let mut r = tk::rng(seed);
        let pool = tk::type_pool(&mut r, 2, 3);
        let x = tk::random_interface(&mut r, "X", &pool, 2, 2);
        let rel = tk::random_relation(&mut r, &x, 0.5);
        let c = StaticContract::relation(x.clone(), rel.clone()).unwrap();
        let t = lift_static(&c, None).unwrap();
        for a in x.input_space().unwrap().iter() {
            for b in x.output_space().unwrap().iter() {
                let inside = t.contains_tuples(std::slice::from_ref(&a), std::slice::from_ref(&b)).unwrap();
                prop_assert_eq!(inside, rel.contains(&(a.clone(), b)));
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn lifted_contracts_are_restriction_closed(seed in any::<u64>()) {
        let mut r = tk::rng(seed);
        let b = PortType::booleans();
        let x = Interface::new("X", vec![b.clone()], vec![b]);
        let c = tk::random_contract(&mut r, &x, 0.6);
        let report = check_restriction_closed(&lift_static(&c, None).unwrap(), 6, 1).unwrap();
        prop_assert!(report.closed());
    }
}

#[test]
fn exactly_one_false_is_not_restriction_closed() {
    let b = PortType::booleans();
    let iface = Interface::new("P", vec![b.clone()], vec![b.clone()]);
    let carriers = TimeContract::finite_carriers(&[b]).unwrap();
    let kind = TimeContractKind::Predicate(std::sync::Arc::new(|_: &[Vec<usize>], ys: &[Vec<usize>]| {
        ys.iter().filter(|y| y[0] == 0).count() == 1
    }));
    let c = TimeContract::new(iface, carriers.clone(), carriers, kind, None).unwrap();
    assert!(!check_restriction_closed(&c, 3, 1).unwrap().closed());
}

#[test]
fn sampled_lift_accepts_rising_section() {
    let r = Interface::new("R", vec![PortType::real()], vec![PortType::real()]);
    let c = StaticContract::independent(
        r,
        vec![PortSubset::Box(vec![wiredsys::contracts::IntervalSet::interval(2.0, 3.0).unwrap()])],
        vec![PortSubset::Box(vec![wiredsys::contracts::IntervalSet::interval(10.0, 11.0).unwrap()])],
    )
    .unwrap();
    let ins = vec![Carrier::Samples(vec![vec![2.0], vec![2.5], vec![2.7], vec![3.0]])];
    let outs = vec![Carrier::Samples(vec![vec![10.0], vec![11.0], vec![9.5]])];
    let t = lift_static(&c, Some((ins, outs))).unwrap();
    let x = Section::in_complete(&[0, 1, 2, 3], 4).unwrap();
    assert!(time_membership(&t, &x, &Section::in_complete(&[0, 1, 1, 1], 3).unwrap()).unwrap());
    assert!(!time_membership(&t, &x, &Section::in_complete(&[0, 1, 2, 1], 3).unwrap()).unwrap());
}
