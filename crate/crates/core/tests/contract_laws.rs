use std::collections::BTreeSet;

use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::Rng;
use wiredsys::behavior::{compose_functions, Behavior, FiniteFunction};
use wiredsys::contracts::{
    ag_compose, contract_apply, contract_apply_finite, contract_apply_independent, contract_tensor, maximal_contract,
    AgContract, AgVariable, PortSubset, Relation, Role, StaticContract,
};
use wiredsys::wiring::{FiniteSet, PortRef};
use wiredsys::{Interface, PortType, WiringDiagram};
use wiredsys_testkit as tk;

/// Diagrams whose brute-force enumeration stays small.
fn small_shape(r: &mut StdRng) -> WiringDiagram {
    loop {
        let pool = tk::type_pool(r, 2, 4);
        let d = tk::random_shape(r, &pool, 3, 2);
        let mut size = 1usize;
        for t in d.outer.inputs.iter().chain(d.inner.iter().flat_map(|x| x.outputs.iter())) {
            size *= t.as_finite().unwrap().len();
        }
        if size <= 4096 {
            return d;
        }
    }
}

fn tensor_all(cs: &[StaticContract]) -> StaticContract {
    let unit = StaticContract::relation(Interface::unit(), [(vec![], vec![])].into()).unwrap();
    cs.iter().fold(unit, |acc, c| contract_tensor(&acc, c).unwrap())
}

fn random_subset(r: &mut StdRng, port: &PortType) -> PortSubset {
    let n = port.as_finite().unwrap().len();
    PortSubset::Labels((0..n).filter(|_| r.gen_bool(0.6)).collect())
}

fn random_independent(r: &mut StdRng, x: &Interface) -> StaticContract {
    let ins = x.inputs.iter().map(|p| random_subset(r, p)).collect();
    let outs = x.outputs.iter().map(|p| random_subset(r, p)).collect();
    StaticContract::independent(x.clone(), ins, outs).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(600))]

    #[test]
    fn finite_composite_matches_enumeration(seed in any::<u64>()) {
        let mut r = tk::rng(seed);
        let d = small_shape(&mut r);
        let density = r.gen_range(0.2..0.9);
        let rels: Vec<Relation> = d.inner.iter().map(|x| tk::random_relation(&mut r, x, density)).collect();
        let cs: Vec<StaticContract> =
            d.inner.iter().zip(&rels).map(|(x, p)| StaticContract::relation(x.clone(), p.clone()).unwrap()).collect();
        let got = contract_apply_finite(&d, &tensor_all(&cs)).unwrap().to_relation().unwrap();
        prop_assert_eq!(got, tk::brute_force_apply(&d, &rels));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn independent_rule_matches_expansion(seed in any::<u64>()) {
        let mut r = tk::rng(seed);
        let d = small_shape(&mut r);
        let cs: Vec<StaticContract> = d.inner.iter().map(|x| random_independent(&mut r, x)).collect();
        let fast = contract_apply_independent(&d, &cs).unwrap().to_relation().unwrap();
        let expanded: Vec<StaticContract> = cs.iter().map(|c| c.expanded().unwrap()).collect();
        let slow = contract_apply_finite(&d, &tensor_all(&expanded)).unwrap().to_relation().unwrap();
        prop_assert_eq!(fast, slow);
    }

    #[test]
    fn composite_is_monotone(seed in any::<u64>()) {
        let mut r = tk::rng(seed);
        let d = small_shape(&mut r);
        let big: Vec<Relation> = d.inner.iter().map(|x| tk::random_relation(&mut r, x, 0.7)).collect();
        let small: Vec<Relation> =
            big.iter().map(|p| p.iter().filter(|_| r.gen_bool(0.7)).cloned().collect()).collect();
        let contracts = |rels: &[Relation]| -> Vec<StaticContract> {
            d.inner.iter().zip(rels).map(|(x, p)| StaticContract::relation(x.clone(), p.clone()).unwrap()).collect()
        };
        let lo = contract_apply(&d, &contracts(&small)).unwrap();
        let hi = contract_apply(&d, &contracts(&big)).unwrap();
        prop_assert!(lo.is_subset(&hi).unwrap());
    }

    #[test]
    fn empty_component_empties_composite(seed in any::<u64>()) {
        let mut r = tk::rng(seed);
        let d = small_shape(&mut r);
        let mut cs: Vec<StaticContract> = d.inner.iter().map(|x| StaticContract::full(x.clone())).collect();
        let b = r.gen_range(0..cs.len());
        cs[b] = StaticContract::empty(d.inner[b].clone());
        prop_assert!(contract_apply(&d, &cs).unwrap().is_empty());
        let expanded: Vec<StaticContract> = cs.iter().map(|c| c.expanded().unwrap()).collect();
        prop_assert!(contract_apply(&d, &expanded).unwrap().is_empty());
    }

    #[test]
    fn serial_composite_is_relational_composition(seed in any::<u64>()) {
        let mut r = tk::rng(seed);
        let pool = tk::type_pool(&mut r, 3, 3);
        let (a, b, c) = (pool[0].clone(), pool[1].clone(), pool[2].clone());
        let f = Interface::new("F", vec![a.clone()], vec![b.clone()]);
        let g = Interface::new("G", vec![b], vec![c.clone()]);
        let d = WiringDiagram::new(
            vec![f.clone(), g.clone()],
            Interface::new("S", vec![a], vec![c]),
            vec![vec![PortRef::OuterInput(0)], vec![PortRef::InnerOutput(0, 0)]],
            vec![PortRef::InnerOutput(1, 0)],
        );
        let (r1, r2) = (tk::random_relation(&mut r, &f, 0.5), tk::random_relation(&mut r, &g, 0.5));
        let cs = [StaticContract::relation(f, r1.clone()).unwrap(), StaticContract::relation(g, r2.clone()).unwrap()];
        prop_assert_eq!(contract_apply(&d, &cs).unwrap().to_relation().unwrap(), tk::relational_composition(&r1, &r2));
    }

    #[test]
    fn maximal_contract_is_natural_without_loops(seed in any::<u64>()) {
        let mut r = tk::rng(seed);
        let d = loop {
            let d = small_shape(&mut r);
            if !d.has_feedback() {
                break d;
            }
        };
        let fns: Vec<FiniteFunction> = d
            .inner
            .iter()
            .map(|x| {
                let table = x
                    .input_space()
                    .unwrap()
                    .iter()
                    .map(|_| x.outputs.iter().map(|p| r.gen_range(0..p.as_finite().unwrap().len())).collect())
                    .collect();
                FiniteFunction::new(x.clone(), table).unwrap()
            })
            .collect();
        let whole = maximal_contract(&Behavior::Function(compose_functions(&d, &fns).unwrap())).unwrap();
        let parts: Vec<StaticContract> =
            fns.iter().map(|f| maximal_contract(&Behavior::Function(f.clone())).unwrap()).collect();
        prop_assert_eq!(
            whole.to_relation().unwrap(),
            contract_apply(&d, &parts).unwrap().to_relation().unwrap()
        );
    }

    #[test]
    fn ag_composition_is_associative(seed in any::<u64>()) {
        let mut r = tk::rng(seed);
        let set = |n: usize| FiniteSet::new(format!("V{n}"), (0..n).map(|v| v.to_string()));
        let (a, b, c, d) = (set(2), set(3), set(2), set(2));
        let mut contract = |x: (&str, &FiniteSet), y: (&str, &FiniteSet)| {
            let vars = vec![AgVariable::new(x.0, x.1.clone(), Role::Input), AgVariable::new(y.0, y.1.clone(), Role::Output)];
            let n = x.1.len() * y.1.len();
            let assume: Vec<bool> = (0..n).map(|_| r.gen_bool(0.6)).collect();
            let guarantee: Vec<bool> = (0..n).map(|_| r.gen_bool(0.6)).collect();
            AgContract::new(vars, assume, guarantee).unwrap()
        };
        let c1 = contract(("a", &a), ("b", &b));
        let c2 = contract(("b", &b), ("c", &c));
        let c3 = contract(("c", &c), ("d", &d));
        let left = ag_compose(&ag_compose(&c1, &c2, &[("b", "b")]).unwrap().contract, &c3, &[("c", "c")]).unwrap();
        let right = ag_compose(&c1, &ag_compose(&c2, &c3, &[("c", "c")]).unwrap().contract, &[("b", "b")]).unwrap();
        let names = |k: &AgContract| k.variables().iter().map(|v| v.name.clone()).collect::<Vec<_>>();
        prop_assert_eq!(names(&left.contract), names(&right.contract));
        prop_assert_eq!(left.contract.assumption(), right.contract.assumption());
        prop_assert_eq!(left.contract.guarantee(), right.contract.guarantee());
    }
}

#[test]
fn independent_uav_shape_by_hand() {
    // two boxes in series; the second only admits part of what the first emits
    let r = PortType::finite("R", &["0", "1", "2", "3"]);
    let b = Interface::new("B", vec![r.clone()], vec![r.clone()]);
    let d = WiringDiagram::new(
        vec![b.clone(), b.clone()],
        Interface::new("Top", vec![r.clone()], vec![r.clone()]),
        vec![vec![PortRef::OuterInput(0)], vec![PortRef::InnerOutput(0, 0)]],
        vec![PortRef::InnerOutput(1, 0)],
    );
    let band = |lo: usize, hi: usize| PortSubset::Labels((lo..=hi).collect::<BTreeSet<_>>());
    let c1 = StaticContract::independent(b.clone(), vec![band(0, 3)], vec![band(1, 2)]).unwrap();
    let c2 = StaticContract::independent(b.clone(), vec![band(2, 3)], vec![band(0, 1)]).unwrap();
    let got = contract_apply(&d, &[c1, c2]).unwrap();
    let want: Relation = (0..4).flat_map(|x| (0..2).map(move |y| (vec![x], vec![y]))).collect();
    assert_eq!(got.to_relation().unwrap(), want);
}
