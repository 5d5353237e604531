use proptest::prelude::*;
use wiredsys::wiring::{
    compose_diagrams, compose_hierarchical, identity_diagram, substitute, tensor_diagrams, validate_diagram,
    wiring_to_matrices,
};
use wiredsys::PortType;
use wiredsys_testkit as tk;

fn linear_pool() -> Vec<PortType> {
    vec![PortType::Lin(1), PortType::Lin(2)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn compose_is_unital(seed in any::<u64>()) {
        let mut r = tk::rng(seed);
        let pool = tk::type_pool(&mut r, 2, 3);
        let f = tk::random_chain(&mut r, &pool, 1, 2).remove(0);
        prop_assert_eq!(compose_diagrams(&identity_diagram(&f.outer), &f).unwrap(), f.clone());
        prop_assert_eq!(compose_diagrams(&f, &identity_diagram(&f.inner[0])).unwrap(), f);
    }

    #[test]
    fn compose_is_associative(seed in any::<u64>()) {
        let mut r = tk::rng(seed);
        let pool = tk::type_pool(&mut r, 3, 3);
        let c = tk::random_chain(&mut r, &pool, 3, 2);
        let (f, g, h) = (&c[0], &c[1], &c[2]);
        let left = compose_diagrams(h, &compose_diagrams(g, f).unwrap()).unwrap();
        let right = compose_diagrams(&compose_diagrams(h, g).unwrap(), f).unwrap();
        prop_assert!(validate_diagram(&left).is_empty());
        prop_assert_eq!(left, right);
    }

    #[test]
    fn substitute_is_unital(seed in any::<u64>()) {
        let mut r = tk::rng(seed);
        let pool = tk::type_pool(&mut r, 2, 3);
        let n = r_usize(&mut r, 1, 3);
        let p = tk::random_parent(&mut r, &pool, n, 1);
        for slot in 0..n {
            prop_assert_eq!(substitute(&p, slot, &identity_diagram(&p.inner[slot])).unwrap(), p.clone());
        }
        let c = tk::random_child(&mut r, &pool, &p.outer, 2, 1);
        prop_assert_eq!(substitute(&identity_diagram(&p.outer), 0, &c).unwrap(), c);
    }

    #[test]
    fn substitute_is_associative(seed in any::<u64>()) {
        let mut r = tk::rng(seed);
        let pool = tk::type_pool(&mut r, 2, 3);
        let p = tk::random_parent(&mut r, &pool, 3, 1);
        let slot = r_usize(&mut r, 0, 2);
        let c = tk::random_child(&mut r, &pool, &p.inner[slot], 3, 1);
        let j = r_usize(&mut r, 0, 2);
        let d = tk::random_child(&mut r, &pool, &c.inner[j], 2, 1);
        let left = substitute(&substitute(&p, slot, &c).unwrap(), slot + j, &d).unwrap();
        let right = substitute(&p, slot, &substitute(&c, j, &d).unwrap()).unwrap();
        prop_assert!(validate_diagram(&left).is_empty());
        prop_assert_eq!(left, right);
    }

    #[test]
    fn substitute_is_hierarchical_composition_with_identities(seed in any::<u64>()) {
        let mut r = tk::rng(seed);
        let pool = tk::type_pool(&mut r, 2, 3);
        let p = tk::random_parent(&mut r, &pool, 3, 1);
        let slot = r_usize(&mut r, 0, 2);
        let c = tk::random_child(&mut r, &pool, &p.inner[slot], 2, 1);
        let impls: Vec<_> = p
            .inner
            .iter()
            .enumerate()
            .map(|(b, x)| if b == slot { c.clone() } else { identity_diagram(x) })
            .collect();
        prop_assert_eq!(substitute(&p, slot, &c).unwrap(), compose_hierarchical(&p, &impls).unwrap());
    }

    #[test]
    fn operations_preserve_types(seed in any::<u64>()) {
        let mut r = tk::rng(seed);
        let pool = tk::type_pool(&mut r, 3, 4);
        let a = tk::random_shape(&mut r, &pool, 3, 3);
        let b = tk::random_shape(&mut r, &pool, 3, 3);
        prop_assert!(validate_diagram(&a).is_empty());
        prop_assert!(validate_diagram(&tensor_diagrams(&a, &b)).is_empty());
        let p = tk::random_parent(&mut r, &pool, 2, 2);
        let c = tk::random_child(&mut r, &pool, &p.inner[1], 2, 2);
        prop_assert!(validate_diagram(&substitute(&p, 1, &c).unwrap()).is_empty());
    }

    #[test]
    fn selection_rows_sum_to_one(seed in any::<u64>()) {
        let mut r = tk::rng(seed);
        let d = tk::random_shape(&mut r, &linear_pool(), 3, 3);
        let m = wiring_to_matrices(&d).unwrap();
        for i in 0..m.af.nrows() {
            let sum: f64 = m.af.row(i).sum() + m.bf.row(i).sum();
            prop_assert_eq!(sum, 1.0);
        }
        for i in 0..m.cf.nrows() {
            prop_assert_eq!(m.cf.row(i).sum(), 1.0);
        }
        prop_assert!(m.af.iter().chain(m.bf.iter()).chain(m.cf.iter()).all(|&v| v == 0.0 || v == 1.0));
    }
}

fn r_usize(r: &mut rand::rngs::StdRng, lo: usize, hi: usize) -> usize {
    use rand::Rng;
    r.gen_range(lo..=hi)
}
