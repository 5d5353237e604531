use std::collections::{HashMap, VecDeque};

use crate::behavior::{LtiSystem, MooreMachine, System};
use crate::error::{mismatch, Error, Result};

fn check_ports(m1: &MooreMachine, m2: &MooreMachine) -> Result<()> {
    if m1.interface().same_ports(m2.interface()) {
        Ok(())
    } else {
        Err(mismatch(format!("comparing machines on {} and {}", m1.interface(), m2.interface())))
    }
}

/// Pointed bisimilarity of two deterministic Moore machines, from their
/// initial states. Partition refinement over the disjoint union of reachable
/// states: blocks start as readout classes and are split by the blocks of
/// successors until stable.
pub fn behavioral_equiv(m1: &MooreMachine, m2: &MooreMachine) -> Result<bool> {
    check_ports(m1, m2)?;
    let r1 = m1.reachable();
    let r2 = m2.reachable();
    // node i < r1.len() is m1's state r1[i], the rest are m2's
    let n1 = r1.len();
    let mut index = HashMap::new();
    for (i, &s) in r1.iter().enumerate() {
        index.insert((0, s), i);
    }
    for (i, &s) in r2.iter().enumerate() {
        index.insert((1, s), n1 + i);
    }
    let node = |i: usize| {
        if i < n1 {
            (0, r1[i], m1)
        } else {
            (1, r2[i - n1], m2)
        }
    };
    let total = n1 + r2.len();
    let k = m1.num_inputs();
    let succ: Vec<Vec<usize>> = (0..total)
        .map(|i| {
            let (side, s, m) = node(i);
            (0..k).map(|x| index[&(side, m.step(s, x))]).collect()
        })
        .collect();

    let mut block = classify((0..total).map(|i| {
        let (_, s, m) = node(i);
        m.readout(s).to_vec()
    }));
    loop {
        let next = classify((0..total).map(|i| (block[i], succ[i].iter().map(|&t| block[t]).collect::<Vec<_>>())));
        let stable = next.iter().max() == block.iter().max();
        block = next;
        if stable {
            break;
        }
    }
    Ok(block[index[&(0, m1.initial())]] == block[index[&(1, m2.initial())]])
}

/// Numbers distinct keys in order of first appearance.
fn classify<K: std::hash::Hash + Eq>(keys: impl Iterator<Item = K>) -> Vec<usize> {
    let mut ids = HashMap::new();
    keys.map(|k| {
        let n = ids.len();
        *ids.entry(k).or_insert(n)
    })
    .collect()
}

/// A shortest input sequence (as input-tuple indices) after which the two
/// machines emit different outputs, if any. Breadth-first search over pairs
/// of states.
pub fn distinguishing_input(m1: &MooreMachine, m2: &MooreMachine) -> Result<Option<Vec<usize>>> {
    check_ports(m1, m2)?;
    let start = (m1.initial(), m2.initial());
    let mut parent: HashMap<(usize, usize), Option<((usize, usize), usize)>> = HashMap::new();
    parent.insert(start, None);
    let mut queue = VecDeque::from([start]);
    while let Some((s, t)) = queue.pop_front() {
        if m1.readout(s) != m2.readout(t) {
            let mut word = Vec::new();
            let mut cur = (s, t);
            while let Some(Some((prev, x))) = parent.get(&cur) {
                word.push(*x);
                cur = *prev;
            }
            word.reverse();
            return Ok(Some(word));
        }
        for x in 0..m1.num_inputs() {
            let next = (m1.step(s, x), m2.step(t, x));
            if let std::collections::hash_map::Entry::Vacant(e) = parent.entry(next) {
                e.insert(Some(((s, t), x)));
                queue.push_back(next);
            }
        }
    }
    Ok(None)
}

/// First `k` at which the Markov parameters `C·Aᵏ·B` of two LTI systems
/// differ by more than `tol`, or `None` when the systems have the same
/// input/output behavior from the zero state. Checking `k < n1 + n2` suffices:
/// the difference is the impulse response of the block-diagonal system of
/// that dimension, which vanishes for all `k` once it vanishes that long.
pub fn lti_first_difference(l1: &LtiSystem, l2: &LtiSystem, tol: f64) -> Result<Option<usize>> {
    if !l1.interface().same_ports(l2.interface()) {
        return Err(mismatch(format!("comparing systems on {} and {}", l1.interface(), l2.interface())));
    }
    let horizon = (l1.state_dim() + l2.state_dim()).max(1);
    let (m1, m2) = (super::markov(l1, horizon), super::markov(l2, horizon));
    Ok(m1.iter().zip(&m2).position(|(a, b)| (a - b).amax() > tol))
}

/// Behavioral equivalence of two systems of the same kind: bisimilarity for
/// machines, equal impulse responses for LTI systems.
pub fn system_equiv(a: &System, b: &System) -> Result<bool> {
    match (a, b) {
        (System::Moore(m1), System::Moore(m2)) => behavioral_equiv(m1, m2),
        (System::Lti(l1), System::Lti(l2)) => Ok(lti_first_difference(l1, l2, super::OBSERVATION_TOLERANCE)?.is_none()),
        _ => Err(Error::Type("cannot compare a Moore machine with an LTI system".into())),
    }
}
