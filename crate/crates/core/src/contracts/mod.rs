//! Static contracts: relations between the input and output values of a box,
//! composed along wiring diagrams by existential projection of the inner
//! wires.

mod ag;
mod interval;
mod ops;

use std::collections::BTreeSet;

use nalgebra::DMatrix;

pub use ag::{ag_compose, AgComposition, AgContract, AgVariable, Role};
pub use interval::IntervalSet;
pub use ops::{
    contract_apply, contract_apply_finite, contract_apply_independent, contract_tensor, maximal_contract, satisfies,
    Observation, Satisfaction, GRAPH_TOLERANCE,
};

use crate::error::{Error, Result};
use crate::space::TupleSpace;
use crate::wiring::{Interface, PortType};

/// Set of `(input tuple, output tuple)` pairs over finite ports.
pub type Relation = BTreeSet<(Vec<usize>, Vec<usize>)>;

/// The admissible values of one port.
#[derive(Debug, Clone, PartialEq)]
pub enum PortSubset {
    /// Label indices of a finite port.
    Labels(BTreeSet<usize>),
    /// One interval union per coordinate of a linear port.
    Box(Vec<IntervalSet>),
}

impl PortSubset {
    pub fn full(port: &PortType) -> Self {
        match port {
            PortType::Finite(s) => PortSubset::Labels((0..s.len()).collect()),
            PortType::Lin(n) => PortSubset::Box(vec![IntervalSet::full(); *n]),
        }
    }

    pub fn is_empty(&self) -> bool {
        match self {
            PortSubset::Labels(s) => s.is_empty(),
            PortSubset::Box(b) => b.iter().any(IntervalSet::is_empty),
        }
    }

    pub fn is_full_for(&self, port: &PortType) -> bool {
        *self == PortSubset::full(port)
    }

    pub fn intersect(&self, other: &PortSubset) -> Result<PortSubset> {
        match (self, other) {
            (PortSubset::Labels(a), PortSubset::Labels(b)) => Ok(PortSubset::Labels(a & b)),
            (PortSubset::Box(a), PortSubset::Box(b)) if a.len() == b.len() => {
                Ok(PortSubset::Box(a.iter().zip(b).map(|(x, y)| x.intersect(y)).collect()))
            }
            _ => Err(Error::Type("intersecting subsets of different port types".into())),
        }
    }

    pub fn is_subset(&self, other: &PortSubset) -> bool {
        match (self, other) {
            (PortSubset::Labels(a), PortSubset::Labels(b)) => a.is_subset(b),
            (PortSubset::Box(a), PortSubset::Box(b)) => {
                a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.is_subset(y))
            }
            _ => false,
        }
    }

    pub fn contains_label(&self, v: usize) -> bool {
        matches!(self, PortSubset::Labels(s) if s.contains(&v))
    }

    pub fn contains_vector(&self, x: &[f64]) -> bool {
        match self {
            PortSubset::Box(b) => b.len() == x.len() && b.iter().zip(x).all(|(s, &v)| s.contains(v)),
            PortSubset::Labels(_) => false,
        }
    }

    /// Checks the subset fits the port's carrier.
    pub fn check(&self, port: &PortType) -> Result<()> {
        match (self, port) {
            (PortSubset::Labels(s), PortType::Finite(f)) => match s.iter().find(|&&v| v >= f.len()) {
                Some(v) => Err(Error::Value(format!("label index {v} outside {}", f.name))),
                None => Ok(()),
            },
            (PortSubset::Box(b), PortType::Lin(n)) if b.len() == *n => Ok(()),
            _ => Err(Error::Type(format!("subset does not fit port type {port}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ContractBody {
    Relation(Relation),
    /// A product of per-port subsets.
    Independent {
        inputs: Vec<PortSubset>,
        outputs: Vec<PortSubset>,
    },
    /// The graph `{(x, Hx)}` of a linear map.
    LinearGraph(DMatrix<f64>),
    /// No admissible pair at all.
    Empty,
}

/// A relation on the input and output values of a box.
#[derive(Debug, Clone, PartialEq)]
pub struct StaticContract {
    interface: Interface,
    body: ContractBody,
}

impl StaticContract {
    pub fn relation(interface: Interface, pairs: Relation) -> Result<Self> {
        let (ins, outs) = finite_spaces(&interface)?;
        for (x, y) in &pairs {
            ins.encode(x)?;
            outs.encode(y)?;
        }
        Ok(StaticContract { interface, body: ContractBody::Relation(pairs) })
    }

    /// A product contract; any empty factor makes the whole contract empty.
    pub fn independent(interface: Interface, inputs: Vec<PortSubset>, outputs: Vec<PortSubset>) -> Result<Self> {
        if inputs.len() != interface.inputs.len() || outputs.len() != interface.outputs.len() {
            return Err(Error::Dimension {
                expected: interface.inputs.len() + interface.outputs.len(),
                got: inputs.len() + outputs.len(),
            });
        }
        for (s, p) in inputs.iter().zip(&interface.inputs).chain(outputs.iter().zip(&interface.outputs)) {
            s.check(p)?;
        }
        let body = if inputs.iter().chain(&outputs).any(PortSubset::is_empty) {
            ContractBody::Empty
        } else {
            ContractBody::Independent { inputs, outputs }
        };
        Ok(StaticContract { interface, body })
    }

    pub fn full(interface: Interface) -> Self {
        let inputs = interface.inputs.iter().map(PortSubset::full).collect();
        let outputs = interface.outputs.iter().map(PortSubset::full).collect();
        StaticContract { interface, body: ContractBody::Independent { inputs, outputs } }
    }

    pub fn empty(interface: Interface) -> Self {
        StaticContract { interface, body: ContractBody::Empty }
    }

    pub fn linear_graph(interface: Interface, h: DMatrix<f64>) -> Result<Self> {
        if !interface.all_linear() {
            return Err(Error::Type("a linear graph contract needs linear ports".into()));
        }
        if h.shape() != (interface.output_dim(), interface.input_dim()) {
            return Err(Error::Value(format!(
                "H is {}x{}, expected {}x{}",
                h.nrows(),
                h.ncols(),
                interface.output_dim(),
                interface.input_dim()
            )));
        }
        Ok(StaticContract { interface, body: ContractBody::LinearGraph(h) })
    }

    pub fn interface(&self) -> &Interface {
        &self.interface
    }

    pub fn body(&self) -> &ContractBody {
        &self.body
    }

    pub fn is_empty(&self) -> bool {
        match &self.body {
            ContractBody::Empty => true,
            ContractBody::Relation(r) => r.is_empty(),
            ContractBody::Independent { .. } | ContractBody::LinearGraph(_) => false,
        }
    }

    /// All admissible pairs, when every port is finite.
    pub fn to_relation(&self) -> Result<Relation> {
        let (ins, outs) = finite_spaces(&self.interface)?;
        Ok(match &self.body {
            ContractBody::Relation(r) => r.clone(),
            ContractBody::Empty => Relation::new(),
            ContractBody::Independent { inputs, outputs } => {
                let admissible = |space: &TupleSpace, subsets: &[PortSubset]| -> Vec<Vec<usize>> {
                    space.iter().filter(|t| t.iter().zip(subsets).all(|(&v, s)| s.contains_label(v))).collect()
                };
                let xs = admissible(&ins, inputs);
                let ys = admissible(&outs, outputs);
                xs.iter().flat_map(|x| ys.iter().map(move |y| (x.clone(), y.clone()))).collect()
            }
            ContractBody::LinearGraph(_) => unreachable!("linear ports were rejected"),
        })
    }

    /// The same contract with its body expanded to an explicit relation.
    pub fn expanded(&self) -> Result<StaticContract> {
        Ok(StaticContract { interface: self.interface.clone(), body: ContractBody::Relation(self.to_relation()?) })
    }

    /// Inclusion of admissible pairs, decided for finite contracts and for
    /// pairs of independent contracts.
    pub fn is_subset(&self, other: &StaticContract) -> Result<bool> {
        if !self.interface.same_ports(&other.interface) {
            return Err(crate::error::mismatch("comparing contracts on different boxes"));
        }
        if self.is_empty() {
            return Ok(true);
        }
        match (&self.body, &other.body) {
            (
                ContractBody::Independent { inputs: a, outputs: b },
                ContractBody::Independent { inputs: c, outputs: d },
            ) => Ok(a.iter().zip(c).chain(b.iter().zip(d)).all(|(x, y)| x.is_subset(y))),
            (ContractBody::LinearGraph(h), ContractBody::LinearGraph(k)) => Ok(h == k),
            _ => Ok(self.to_relation()?.is_subset(&other.to_relation()?)),
        }
    }

    pub fn renamed(mut self, name: impl Into<String>) -> Self {
        self.interface.name = name.into();
        self
    }
}

pub(crate) fn finite_spaces(interface: &Interface) -> Result<(TupleSpace, TupleSpace)> {
    match (interface.input_space(), interface.output_space()) {
        (Some(i), Some(o)) => Ok((i, o)),
        _ => Err(Error::Type(format!("{interface} has linear ports; a finite relation is required"))),
    }
}
