//! Test oracles and random generators.
//!
//! Generators take an explicit [`StdRng`] so every failure is reproducible
//! from its seed. Oracles are written against the raw definitions (enumerate
//! everything, then filter) and share no code with the library algorithms
//! they check.

use std::collections::BTreeSet;

use nalgebra::DMatrix;
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};

use wiredsys::behavior::{LtiSystem, MooreMachine};
use wiredsys::contracts::{Relation, StaticContract};
use wiredsys::wiring::PortRef;
use wiredsys::{Interface, PortType, WiringDiagram};

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

/// Finite types `T0, T1, …` with between 1 and `max_card` labels each.
pub fn type_pool(rng: &mut StdRng, n: usize, max_card: usize) -> Vec<PortType> {
    (0..n)
        .map(|i| {
            let card = rng.gen_range(1..=max_card);
            let labels: Vec<String> = (0..card).map(|v| v.to_string()).collect();
            let refs: Vec<&str> = labels.iter().map(String::as_str).collect();
            PortType::finite(&format!("T{i}"), &refs)
        })
        .collect()
}

fn pick(rng: &mut StdRng, pool: &[PortType], n: usize) -> Vec<PortType> {
    (0..n).map(|_| pool.choose(rng).expect("non-empty pool").clone()).collect()
}

/// Up to `max_in` inputs and `max_out` outputs drawn from `pool`.
pub fn random_interface(rng: &mut StdRng, name: &str, pool: &[PortType], max_in: usize, max_out: usize) -> Interface {
    let n_in = rng.gen_range(0..=max_in);
    let n_out = rng.gen_range(0..=max_out);
    Interface::new(name, pick(rng, pool, n_in), pick(rng, pool, n_out))
}

/// Every pool type appears among both the inputs and the outputs, plus up to
/// `extra` random ports on each side, in shuffled order.
pub fn covering_interface(rng: &mut StdRng, name: &str, pool: &[PortType], extra: usize) -> Interface {
    let side = |rng: &mut StdRng| {
        let n = rng.gen_range(0..=extra);
        let mut ports = pool.to_vec();
        ports.extend(pick(rng, pool, n));
        ports.shuffle(rng);
        ports
    };
    let inputs = side(rng);
    let outputs = side(rng);
    Interface::new(name, inputs, outputs)
}

/// A diagram with the given boundary where every destination reads a random
/// source of its own type, or `None` when some destination has no candidate.
/// Outer outputs only read inner outputs.
pub fn random_diagram(rng: &mut StdRng, inner: Vec<Interface>, outer: Interface) -> Option<WiringDiagram> {
    let mut sources: Vec<(PortRef, &PortType)> =
        outer.inputs.iter().enumerate().map(|(i, t)| (PortRef::OuterInput(i), t)).collect();
    for (b, x) in inner.iter().enumerate() {
        sources.extend(x.outputs.iter().enumerate().map(|(p, t)| (PortRef::InnerOutput(b, p), t)));
    }
    let mut choose = |t: &PortType, internal_only: bool| -> Option<PortRef> {
        let fits: Vec<PortRef> = sources
            .iter()
            .filter(|(r, s)| *s == t && (!internal_only || matches!(r, PortRef::InnerOutput(..))))
            .map(|(r, _)| *r)
            .collect();
        fits.choose(rng).copied()
    };
    let input_sources = inner
        .iter()
        .map(|x| x.inputs.iter().map(|t| choose(t, false)).collect::<Option<Vec<_>>>())
        .collect::<Option<Vec<_>>>()?;
    let output_sources = outer.outputs.iter().map(|t| choose(t, true)).collect::<Option<Vec<_>>>()?;
    Some(WiringDiagram::new(inner, outer, input_sources, output_sources))
}

/// A random valid diagram with up to `max_boxes` inner boxes. The outer box
/// carries every pool type as an input, and only outputs types that some
/// inner box produces, so that each destination is fed.
pub fn random_shape(rng: &mut StdRng, pool: &[PortType], max_boxes: usize, max_ports: usize) -> WiringDiagram {
    let n = rng.gen_range(1..=max_boxes);
    let inner: Vec<Interface> =
        (0..n).map(|b| random_interface(rng, &format!("B{b}"), pool, max_ports, max_ports)).collect();
    let mut inputs = pool.to_vec();
    inputs.truncate(rng.gen_range(1..=pool.len()));
    let produced: Vec<PortType> = inner.iter().flat_map(|x| x.outputs.iter().cloned()).collect();
    let mut outer = Interface::new("Top", vec![], vec![]);
    if !produced.is_empty() {
        let n = rng.gen_range(0..=max_ports);
        outer.outputs = pick(rng, &produced, n);
    }
    for t in pool {
        if !inputs.contains(t) {
            inputs.push(t.clone());
        }
    }
    inputs.shuffle(rng);
    outer.inputs = inputs;
    random_diagram(rng, inner, outer).expect("every type has an outer source")
}

/// `len` one-box diagrams `X0 → X1 → … → Xlen`, each composable with the next.
pub fn random_chain(rng: &mut StdRng, pool: &[PortType], len: usize, extra: usize) -> Vec<WiringDiagram> {
    let boxes: Vec<Interface> = (0..=len).map(|i| covering_interface(rng, &format!("X{i}"), pool, extra)).collect();
    boxes
        .windows(2)
        .map(|w| random_diagram(rng, vec![w[0].clone()], w[1].clone()).expect("covering interfaces"))
        .collect()
}

/// A parent with `n` inner boxes whose boundary covers the pool.
pub fn random_parent(rng: &mut StdRng, pool: &[PortType], n: usize, extra: usize) -> WiringDiagram {
    let inner: Vec<Interface> = (0..n).map(|b| covering_interface(rng, &format!("P{b}"), pool, extra)).collect();
    let outer = covering_interface(rng, "Top", pool, extra);
    random_diagram(rng, inner, outer).expect("covering interfaces")
}

/// A diagram with `n` inner boxes implementing `outer`. `outer` must cover
/// the pool.
pub fn random_child(rng: &mut StdRng, pool: &[PortType], outer: &Interface, n: usize, extra: usize) -> WiringDiagram {
    let inner: Vec<Interface> = (0..n).map(|b| covering_interface(rng, &format!("C{b}"), pool, extra)).collect();
    random_diagram(rng, inner, outer.clone()).expect("covering interfaces")
}

/// A machine with 1 to `max_states` states and uniformly random tables.
pub fn random_machine(rng: &mut StdRng, iface: &Interface, max_states: usize) -> MooreMachine {
    let n = rng.gen_range(1..=max_states);
    let inputs = iface.input_space().expect("finite ports").size();
    let update = (0..n * inputs).map(|_| rng.gen_range(0..n)).collect();
    let readout = (0..n)
        .map(|_| iface.outputs.iter().map(|p| rng.gen_range(0..p.as_finite().expect("finite ports").len())).collect())
        .collect();
    let states = (0..n).map(|s| format!("s{s}")).collect();
    let initial = rng.gen_range(0..n);
    MooreMachine::new(iface.clone(), states, initial, update, readout).expect("well-formed tables")
}

/// Every pair of the joint carrier is kept with probability `density`.
pub fn random_relation(rng: &mut StdRng, iface: &Interface, density: f64) -> Relation {
    let ins = iface.input_space().expect("finite ports");
    let outs = iface.output_space().expect("finite ports");
    let mut r = Relation::new();
    for x in ins.iter() {
        for y in outs.iter() {
            if rng.gen_bool(density) {
                r.insert((x.clone(), y));
            }
        }
    }
    r
}

pub fn random_contract(rng: &mut StdRng, iface: &Interface, density: f64) -> StaticContract {
    let r = random_relation(rng, iface, density);
    StaticContract::relation(iface.clone(), r).expect("pairs lie in the carrier")
}

/// An LTI system on an all-linear interface with entries in `[-1, 1]`.
pub fn random_lti(rng: &mut StdRng, iface: &Interface, n: usize) -> LtiSystem {
    let (k, l) = (iface.input_dim(), iface.output_dim());
    let mut m = |r: usize, c: usize| DMatrix::from_fn(r, c, |_, _| rng.gen_range(-1.0..1.0));
    let (a, b, c) = (m(n, n), m(n, k), m(l, n));
    LtiSystem::new(iface.clone(), a, b, c).expect("consistent dimensions")
}

/// All tuples over the given radices, first coordinate most significant.
pub fn tuples(radices: &[usize]) -> Vec<Vec<usize>> {
    radices.iter().fold(vec![vec![]], |acc, &r| {
        acc.iter()
            .flat_map(|t| {
                (0..r).map(move |v| {
                    let mut t = t.clone();
                    t.push(v);
                    t
                })
            })
            .collect()
    })
}

fn card(p: &PortType) -> usize {
    p.as_finite().expect("finite ports").len()
}

/// Composite contract by enumeration: every value assignment to the sources
/// (outer inputs and inner outputs) determines every wire; keep those where
/// each box's `(input, output)` pair lies in its relation and project onto
/// the outer ports.
pub fn brute_force_apply(d: &WiringDiagram, relations: &[Relation]) -> Relation {
    let mut slots: Vec<PortRef> = (0..d.outer.inputs.len()).map(PortRef::OuterInput).collect();
    let mut radices: Vec<usize> = d.outer.inputs.iter().map(card).collect();
    for (b, x) in d.inner.iter().enumerate() {
        for (p, t) in x.outputs.iter().enumerate() {
            slots.push(PortRef::InnerOutput(b, p));
            radices.push(card(t));
        }
    }
    let mut out = Relation::new();
    for a in tuples(&radices) {
        let value = |r: &PortRef| a[slots.iter().position(|s| s == r).expect("a source")];
        let ok = d.inner.iter().enumerate().all(|(b, x)| {
            let xin: Vec<usize> = d.input_sources[b].iter().map(value).collect();
            let xout: Vec<usize> = (0..x.outputs.len()).map(|p| value(&PortRef::InnerOutput(b, p))).collect();
            relations[b].contains(&(xin, xout))
        });
        if ok {
            let xin = a[..d.outer.inputs.len()].to_vec();
            let xout = d.output_sources.iter().map(value).collect();
            out.insert((xin, xout));
        }
    }
    out
}

/// `{(a, c) | ∃b. (a, b) ∈ r1 ∧ (b, c) ∈ r2}`.
pub fn relational_composition(r1: &Relation, r2: &Relation) -> Relation {
    let mut out = BTreeSet::new();
    for (a, b) in r1 {
        for (b2, c) in r2 {
            if b == b2 {
                out.insert((a.clone(), c.clone()));
            }
        }
    }
    out
}

/// "If I receive two trues in a row, I will output a false within 5": for
/// all `i` with `i + 6 <= n` and `a[i] = a[i+1] = T` there is a `j` in
/// `[i+2, i+6]` with `b[j] = F`, where `n + 1` is the section length.
pub fn two_trues_then_false(a: &[bool], b: &[bool]) -> bool {
    assert_eq!(a.len(), b.len());
    let Some(n) = a.len().checked_sub(1) else {
        return true;
    };
    (0..=n).all(|i| if i + 6 <= n && a[i] && a[i + 1] { (i + 2..=i + 6).any(|j| !b[j]) } else { true })
}

/// The largest subset `A` of `points` with `A ∧ G₂ ⇒ A₁` and `A ∧ G₁ ⇒ A₂`,
/// found by discarding every point whose singleton violates either
/// implication until nothing changes.
pub fn weakest_assumption<V>(
    points: &[V],
    a1: impl Fn(&V) -> bool,
    g1: impl Fn(&V) -> bool,
    a2: impl Fn(&V) -> bool,
    g2: impl Fn(&V) -> bool,
) -> Vec<bool> {
    let mut keep = vec![true; points.len()];
    loop {
        let mut changed = false;
        for (k, v) in points.iter().enumerate() {
            if keep[k] && ((g2(v) && !a1(v)) || (g1(v) && !a2(v))) {
                keep[k] = false;
                changed = true;
            }
        }
        if !changed {
            return keep;
        }
    }
}

/// Runs a machine from its initial state and returns the outputs seen.
pub fn run_machine(m: &MooreMachine, inputs: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let mut s = m.initial();
    let mut outs = vec![m.readout(s).to_vec()];
    for x in inputs {
        s = m.update(s, x).expect("input in range");
        outs.push(m.readout(s).to_vec());
    }
    outs
}

/// Trace equivalence by comparing output traces on every input word up to
/// `len` steps.
pub fn traces_agree(m1: &MooreMachine, m2: &MooreMachine, len: usize) -> bool {
    let space = m1.interface().input_space().expect("finite ports");
    let letters: Vec<Vec<usize>> = space.iter().collect();
    let mut words: Vec<Vec<Vec<usize>>> = vec![vec![]];
    for _ in 0..=len {
        if words.iter().any(|w| run_machine(m1, w) != run_machine(m2, w)) {
            return false;
        }
        words = words
            .iter()
            .flat_map(|w| {
                letters.iter().map(move |x| {
                    let mut w = w.clone();
                    w.push(x.clone());
                    w
                })
            })
            .collect();
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generated_diagrams_are_valid() {
        let mut r = rng(7);
        for _ in 0..50 {
            let pool = type_pool(&mut r, 2, 3);
            let d = random_shape(&mut r, &pool, 3, 2);
            assert!(wiredsys::wiring::validate_diagram(&d).is_empty());
            for d in random_chain(&mut r, &pool, 3, 1) {
                assert!(wiredsys::wiring::validate_diagram(&d).is_empty());
            }
        }
    }

    #[test]
    fn composition_of_small_relations() {
        let r1: Relation = [(vec![0], vec![1]), (vec![1], vec![1])].into();
        let r2: Relation = [(vec![1], vec![0])].into();
        let want: Relation = [(vec![0], vec![0]), (vec![1], vec![0])].into();
        assert_eq!(relational_composition(&r1, &r2), want);
    }

    #[test]
    fn two_trues_by_hand() {
        let t = true;
        let f = false;
        assert!(two_trues_then_false(&[t, t, f, f, f, f], &[t; 6]));
        assert!(!two_trues_then_false(&[t, t, f, f, f, f, f], &[t; 7]));
        assert!(two_trues_then_false(&[t, t, f, f, f, f, f], &[t, t, t, t, t, t, f]));
        assert!(!two_trues_then_false(&[t, t, f, f, f, f, f], &[f, f, t, t, t, t, t]));
    }
}
