//! The attacker's side: what is known about the systems that may inhabit a
//! box, the observations that can be made of a running system, and attacks
//! that rewrite behaviors or rewire the interconnection.

mod attack;
mod equiv;

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

pub use attack::{
    apply_attack, apply_rewire, apply_rewrite, constant_system, rewire_diagram, AttackOutcome, ConstValue,
    RewireSource, Rewiring,
};
pub use equiv::{behavioral_equiv, distinguishing_input, lti_first_difference, system_equiv};

use crate::behavior::{LtiSystem, MooreMachine, Simulate, System};
use crate::error::{mismatch, Error, Result};
use crate::space::TupleSpace;
use crate::wiring::Interface;

/// Real-valued observations are compared with this absolute tolerance.
pub const OBSERVATION_TOLERANCE: f64 = 1e-9;

/// The systems an attacker knows for one box.
#[derive(Debug, Clone, PartialEq)]
pub struct KnowledgeDatabase {
    interface: Interface,
    entries: Vec<(String, System)>,
}

impl KnowledgeDatabase {
    pub fn new(interface: Interface, entries: Vec<(String, System)>) -> Result<Self> {
        for (i, (name, s)) in entries.iter().enumerate() {
            if !s.interface().same_ports(&interface) {
                return Err(mismatch(format!("entry {name} lives on {}, not {interface}", s.interface())));
            }
            if entries[..i].iter().any(|(n, _)| n == name) {
                return Err(Error::Value(format!("entry {name} listed twice")));
            }
        }
        Ok(KnowledgeDatabase { interface, entries })
    }

    pub fn interface(&self) -> &Interface {
        &self.interface
    }

    pub fn entries(&self) -> &[(String, System)] {
        &self.entries
    }

    pub fn get(&self, name: &str) -> Option<&System> {
        self.entries.iter().find(|(n, _)| n == name).map(|(_, s)| s)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// What a test reports about a system.
#[derive(Debug, Clone, PartialEq)]
pub enum ObsValue {
    Unit,
    /// Output tuples of a finite run.
    Trace(Vec<Vec<usize>>),
    /// Output vectors of a linear run.
    RealTrace(Vec<DVector<f64>>),
    /// Outputs after every input word of length at most the horizon, words
    /// listed by length and then lexicographically.
    IoTable(Vec<Vec<usize>>),
    /// Markov parameters `C·Aᵏ·B`, `k` below the horizon.
    Markov(Vec<DMatrix<f64>>),
}

impl ObsValue {
    /// Exact for finite observations, within [`OBSERVATION_TOLERANCE`] for
    /// real ones.
    pub fn agrees(&self, other: &ObsValue) -> bool {
        fn close<'a>(a: impl ExactSizeIterator<Item = &'a [f64]>, b: impl ExactSizeIterator<Item = &'a [f64]>) -> bool {
            a.len() == b.len()
                && a.zip(b).all(|(x, y)| {
                    x.len() == y.len() && x.iter().zip(y).all(|(p, q)| (p - q).abs() <= OBSERVATION_TOLERANCE)
                })
        }
        match (self, other) {
            (ObsValue::RealTrace(a), ObsValue::RealTrace(b)) => {
                close(a.iter().map(|v| v.as_slice()), b.iter().map(|v| v.as_slice()))
            }
            (ObsValue::Markov(a), ObsValue::Markov(b)) => {
                a.iter().zip(b).all(|(x, y)| x.shape() == y.shape())
                    && close(a.iter().map(|m| m.as_slice()), b.iter().map(|m| m.as_slice()))
            }
            _ => self == other,
        }
    }
}

pub type ObserveFn = Arc<dyn Fn(&System) -> Result<ObsValue> + Send + Sync>;

#[derive(Clone)]
pub enum TestKind {
    /// The constant observation.
    Terminal,
    /// Outputs under fixed inputs, from the state labelled `init` or else the
    /// machine's own initial state.
    Trace {
        init: Option<String>,
        inputs: Vec<Vec<usize>>,
    },
    /// Outputs from the zero state under fixed real inputs.
    RealTrace {
        inputs: Vec<DVector<f64>>,
    },
    /// Full input/output behavior from the initial state up to a horizon.
    IoTable {
        horizon: usize,
    },
    Custom(ObserveFn),
}

impl fmt::Debug for TestKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TestKind::Terminal => f.write_str("Terminal"),
            TestKind::Trace { init, inputs } => {
                f.debug_struct("Trace").field("init", init).field("inputs", inputs).finish()
            }
            TestKind::RealTrace { inputs } => f.debug_struct("RealTrace").field("inputs", inputs).finish(),
            TestKind::IoTable { horizon } => f.debug_struct("IoTable").field("horizon", horizon).finish(),
            TestKind::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

/// An observation procedure on the systems of one box.
#[derive(Debug, Clone)]
pub struct Test {
    pub name: String,
    pub interface: Interface,
    pub kind: TestKind,
}

impl Test {
    pub fn new(name: impl Into<String>, interface: Interface, kind: TestKind) -> Self {
        Test { name: name.into(), interface, kind }
    }

    pub fn observe(&self, s: &System) -> Result<ObsValue> {
        if !s.interface().same_ports(&self.interface) {
            return Err(mismatch(format!(
                "test {} is for {}, system lives on {}",
                self.name,
                self.interface,
                s.interface()
            )));
        }
        match (&self.kind, s) {
            (TestKind::Terminal, _) => Ok(ObsValue::Unit),
            (TestKind::Trace { init, inputs }, System::Moore(m)) => {
                let s0 = match init {
                    Some(label) => {
                        m.state_index(label).ok_or_else(|| Error::Value(format!("machine has no state {label}")))?
                    }
                    None => m.initial(),
                };
                Ok(ObsValue::Trace(m.simulate(s0, inputs)?.outputs))
            }
            (TestKind::RealTrace { inputs }, System::Lti(l)) => {
                Ok(ObsValue::RealTrace(l.simulate(DVector::zeros(l.state_dim()), inputs)?.outputs))
            }
            (TestKind::IoTable { horizon }, System::Moore(m)) => Ok(ObsValue::IoTable(io_table(m, *horizon))),
            (TestKind::IoTable { horizon }, System::Lti(l)) => Ok(ObsValue::Markov(markov(l, *horizon))),
            (TestKind::Custom(f), _) => f(s),
            (kind, _) => Err(Error::Type(format!("test {} ({kind:?}) does not apply to this system", self.name))),
        }
    }
}

fn io_table(m: &MooreMachine, horizon: usize) -> Vec<Vec<usize>> {
    let mut level = vec![m.initial()];
    let mut out = vec![m.readout(m.initial()).to_vec()];
    for _ in 0..horizon {
        level = level.iter().flat_map(|&s| (0..m.num_inputs()).map(move |x| m.step(s, x))).collect();
        out.extend(level.iter().map(|&s| m.readout(s).to_vec()));
    }
    out
}

pub(crate) fn markov(l: &LtiSystem, horizon: usize) -> Vec<DMatrix<f64>> {
    let mut acc = Vec::with_capacity(horizon);
    let mut p = l.b().clone();
    for _ in 0..horizon {
        acc.push(l.c() * &p);
        p = l.a() * p;
    }
    acc
}

/// The terminal, trace and io-table tests for a box. Trace tests are built
/// for each probe sequence; finite probes give finite traces, real probes
/// give real traces.
pub fn builtin_tests(
    interface: &Interface,
    horizon: usize,
    finite_probes: &[Vec<Vec<usize>>],
    real_probes: &[Vec<DVector<f64>>],
) -> Vec<Test> {
    let mut tests = vec![Test::new("terminal", interface.clone(), TestKind::Terminal)];
    for (i, p) in finite_probes.iter().enumerate() {
        tests.push(Test::new(
            format!("trace{i}"),
            interface.clone(),
            TestKind::Trace { init: None, inputs: p.clone() },
        ));
    }
    for (i, p) in real_probes.iter().enumerate() {
        tests.push(Test::new(format!("realtrace{i}"), interface.clone(), TestKind::RealTrace { inputs: p.clone() }));
    }
    tests.push(Test::new("iotable", interface.clone(), TestKind::IoTable { horizon }));
    tests
}

/// Observations of one system, keyed by test name.
pub type ObservationRecord = BTreeMap<String, ObsValue>;

pub fn run_tests(s: &System, tests: &[Test]) -> Result<ObservationRecord> {
    let mut rec = ObservationRecord::new();
    for t in tests {
        if rec.insert(t.name.clone(), t.observe(s)?).is_some() {
            return Err(Error::Value(format!("test name {} used twice", t.name)));
        }
    }
    Ok(rec)
}

pub fn records_agree(a: &ObservationRecord, b: &ObservationRecord) -> bool {
    a.len() == b.len() && a.iter().all(|(k, v)| b.get(k).is_some_and(|w| v.agrees(w)))
}

/// Names of the database entries whose observations agree with the target's
/// on every test. Entries a test cannot observe are dropped.
pub fn yoneda_filter(target: &ObservationRecord, kb: &KnowledgeDatabase, tests: &[Test]) -> Vec<String> {
    kb.entries
        .iter()
        .filter(|(_, s)| {
            tests.iter().all(|t| match (t.observe(s), target.get(&t.name)) {
                (Ok(v), Some(w)) => v.agrees(w),
                _ => false,
            })
        })
        .map(|(n, _)| n.clone())
        .collect()
}

/// Smallest io-table horizon that separates any two trace-inequivalent
/// machines with at most `n1` and `n2` states.
pub fn separating_horizon(n1: usize, n2: usize) -> usize {
    (n1 + n2).saturating_sub(1)
}

/// Input words of a given length, as input-tuple sequences, in the order
/// used by the io-table.
pub fn words(input_space: &TupleSpace, len: usize) -> Vec<Vec<Vec<usize>>> {
    TupleSpace::new(vec![input_space.size(); len])
        .iter()
        .map(|w| w.iter().map(|&x| input_space.decode(x)).collect())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wiring::PortType;

    fn bool_box() -> Interface {
        Interface::new("B", vec![PortType::booleans()], vec![PortType::booleans()])
    }

    fn machine(readouts: [usize; 2]) -> System {
        System::Moore(
            MooreMachine::from_fn(
                bool_box(),
                vec!["p".into(), "q".into()],
                0,
                |s, x| s ^ x[0],
                move |s| vec![readouts[s]],
            )
            .unwrap(),
        )
    }

    #[test]
    fn terminal_sees_nothing() {
        let kb = KnowledgeDatabase::new(bool_box(), vec![("a".into(), machine([0, 1])), ("b".into(), machine([1, 1]))])
            .unwrap();
        let tests = vec![Test::new("t", bool_box(), TestKind::Terminal)];
        let rec = run_tests(&machine([0, 0]), &tests).unwrap();
        assert_eq!(yoneda_filter(&rec, &kb, &tests), vec!["a", "b"]);
        assert!(run_tests(&machine([0, 0]), &[]).unwrap().is_empty());
    }

    #[test]
    fn trace_separates_one_readout() {
        let t = Test::new("tr", bool_box(), TestKind::Trace { init: None, inputs: vec![vec![1]] });
        assert_ne!(t.observe(&machine([0, 1])).unwrap(), t.observe(&machine([0, 0])).unwrap());
    }

    #[test]
    fn io_table_layout() {
        let m = machine([0, 1]);
        let obs = Test::new("io", bool_box(), TestKind::IoTable { horizon: 2 }).observe(&m).unwrap();
        // ε; 0, 1; 00, 01, 10, 11
        assert_eq!(obs, ObsValue::IoTable(vec![vec![0], vec![0], vec![1], vec![0], vec![1], vec![1], vec![0]]));
    }

    #[test]
    fn wrong_interface_rejected() {
        let other = Interface::new("O", vec![], vec![PortType::booleans()]);
        let t = Test::new("t", other, TestKind::Terminal);
        assert!(t.observe(&machine([0, 1])).is_err());
    }

    #[test]
    fn kb_checks_entries() {
        let other = Interface::new("O", vec![], vec![PortType::booleans()]);
        assert!(KnowledgeDatabase::new(other, vec![("a".into(), machine([0, 1]))]).is_err());
    }
}
