use nalgebra::DVector;
use proptest::prelude::*;
use rand::Rng;
use wiredsys::behavior::{
    lti_apply, lti_to_moore, moore_apply, moore_tensor, LtiSystem, MooreMachine, Simulate, VectorDynamics,
    WiredDynamics,
};
use wiredsys::wiring::{compose_diagrams, compose_hierarchical, identity_diagram, tensor_diagrams};
use wiredsys::PortType;
use wiredsys_testkit as tk;

fn machines_for(r: &mut rand::rngs::StdRng, d: &wiredsys::WiringDiagram, max_states: usize) -> Vec<MooreMachine> {
    d.inner.iter().map(|x| tk::random_machine(r, x, max_states)).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn identity_law(seed in any::<u64>()) {
        let mut r = tk::rng(seed);
        let pool = tk::type_pool(&mut r, 2, 3);
        let x = tk::covering_interface(&mut r, "X", &pool, 1);
        let m = tk::random_machine(&mut r, &x, 3);
        prop_assert!(moore_apply(&identity_diagram(&x), std::slice::from_ref(&m)).unwrap().table_eq(&m));
    }

    #[test]
    fn composition_law_on_chains(seed in any::<u64>()) {
        let mut r = tk::rng(seed);
        let pool = tk::type_pool(&mut r, 2, 3);
        let c = tk::random_chain(&mut r, &pool, 2, 1);
        let (f, g) = (&c[0], &c[1]);
        let m = tk::random_machine(&mut r, &f.inner[0], 3);
        let whole = moore_apply(&compose_diagrams(g, f).unwrap(), std::slice::from_ref(&m)).unwrap();
        let staged = moore_apply(g, &[moore_apply(f, &[m]).unwrap()]).unwrap();
        prop_assert!(whole.table_eq(&staged));
    }

    #[test]
    fn composition_law_hierarchical(seed in any::<u64>()) {
        let mut r = tk::rng(seed);
        let pool = tk::type_pool(&mut r, 2, 2);
        let p = tk::random_parent(&mut r, &pool, 2, 1);
        let impls: Vec<_> = p
            .inner
            .iter()
            .map(|x| {
                let n = r.gen_range(1..=2);
                tk::random_child(&mut r, &pool, x, n, 0)
            })
            .collect();
        let ms: Vec<Vec<MooreMachine>> = impls.iter().map(|d| machines_for(&mut r, d, 2)).collect();
        let flat: Vec<MooreMachine> = ms.iter().flatten().cloned().collect();
        let whole = moore_apply(&compose_hierarchical(&p, &impls).unwrap(), &flat).unwrap();
        let inner: Vec<MooreMachine> = impls.iter().zip(&ms).map(|(d, m)| moore_apply(d, m).unwrap()).collect();
        let staged = moore_apply(&p, &inner).unwrap();
        prop_assert!(whole.table_eq(&staged));
    }

    #[test]
    fn lax_monoidality(seed in any::<u64>()) {
        let mut r = tk::rng(seed);
        let pool = tk::type_pool(&mut r, 2, 3);
        let f = tk::random_chain(&mut r, &pool, 1, 1).remove(0);
        let g = tk::random_chain(&mut r, &pool, 1, 0).remove(0);
        let (m, n) = (tk::random_machine(&mut r, &f.inner[0], 3), tk::random_machine(&mut r, &g.inner[0], 3));
        let joint = moore_apply(&tensor_diagrams(&f, &g), &[m.clone(), n.clone()]).unwrap();
        let apart = moore_tensor(&moore_apply(&f, &[m]).unwrap(), &moore_apply(&g, &[n]).unwrap());
        prop_assert!(joint.table_eq(&apart));
        prop_assert_eq!(joint.states(), apart.states());
    }

    #[test]
    fn lti_composite_matches_general_routing(seed in any::<u64>()) {
        let mut r = tk::rng(seed);
        let pool = vec![PortType::Lin(1), PortType::Lin(2)];
        let d = tk::random_shape(&mut r, &pool, 3, 2);
        let systems: Vec<LtiSystem> = d
            .inner
            .iter()
            .map(|x| {
                let n = r.gen_range(0..=3);
                tk::random_lti(&mut r, x, n)
            })
            .collect();
        let composite = lti_apply(&d, &systems).unwrap();
        let parts: Vec<Box<dyn VectorDynamics + '_>> =
            systems.iter().map(|s| Box::new(lti_to_moore(s)) as Box<dyn VectorDynamics>).collect();
        let general = WiredDynamics::new(&d, parts).unwrap();
        for _ in 0..100 {
            let s = DVector::from_fn(composite.state_dim(), |_, _| r.gen_range(-10.0..10.0));
            let x = DVector::from_fn(d.outer.input_dim(), |_, _| r.gen_range(-10.0..10.0));
            let du = composite.update(&s, &x).unwrap() - general.update(&s, &x).unwrap();
            let dr = composite.readout(&s).unwrap() - general.readout(&s).unwrap();
            prop_assert!(du.amax() <= 1e-9 && dr.amax() <= 1e-9);
        }
    }

    #[test]
    fn lti_identity_law(seed in any::<u64>()) {
        let mut r = tk::rng(seed);
        let x = tk::random_interface(&mut r, "X", &[PortType::Lin(1), PortType::Lin(3)], 2, 2);
        let l = tk::random_lti(&mut r, &x, 3);
        prop_assert!(lti_apply(&identity_diagram(&x), std::slice::from_ref(&l)).unwrap().approx_eq(&l, 1e-12));
    }

    #[test]
    fn trajectories_follow_update(seed in any::<u64>()) {
        let mut r = tk::rng(seed);
        let pool = tk::type_pool(&mut r, 2, 3);
        let x = tk::random_interface(&mut r, "X", &pool, 2, 2);
        let m = tk::random_machine(&mut r, &x, 4);
        let space = x.input_space().unwrap();
        let inputs: Vec<Vec<usize>> = (0..8).map(|_| space.decode(r.gen_range(0..space.size()))).collect();
        let t = m.simulate(m.initial(), &inputs).unwrap();
        for (k, input) in inputs.iter().enumerate() {
            prop_assert_eq!(t.states[k + 1], m.update(t.states[k], input).unwrap());
        }
        for (s, y) in t.states.iter().zip(&t.outputs) {
            prop_assert_eq!(m.readout(*s), y.as_slice());
        }

        let lin = tk::random_interface(&mut r, "L", &[PortType::Lin(2)], 2, 2);
        let l = tk::random_lti(&mut r, &lin, 3);
        let xs: Vec<DVector<f64>> =
            (0..8).map(|_| DVector::from_fn(lin.input_dim(), |_, _| r.gen_range(-1.0..1.0))).collect();
        let t = l.simulate(DVector::zeros(3), &xs).unwrap();
        for (k, input) in xs.iter().enumerate() {
            prop_assert!((&t.states[k + 1] - l.update(&t.states[k], input).unwrap()).amax() <= 1e-12);
        }
    }
}
