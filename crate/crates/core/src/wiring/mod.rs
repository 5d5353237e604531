//! The category of labeled boxes and wiring diagrams.
//!
//! Objects are [`Interface`]s: ordered, typed input and output ports. A
//! morphism is a [`WiringDiagram`] from a chosen tensor factorization of inner
//! boxes to an outer box. It is stored as one source per destination port,
//! which is exactly the data of a map generated by projections, diagonals and
//! switchings: every inner input and every outer output names the single port
//! it reads from, and a source may be read any number of times (including
//! zero).

mod matrices;
mod ops;

use std::fmt;

use crate::space::TupleSpace;

pub use matrices::{wiring_to_matrices, SelectionMatrices};
pub use ops::{
    collapse_inner, compose_diagrams, compose_hierarchical, empty_diagram, identity_diagram, substitute, tensor_all,
    tensor_diagrams,
};

/// A finite set of value labels, e.g. the booleans.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FiniteSet {
    pub name: String,
    pub labels: Vec<String>,
}

impl FiniteSet {
    pub fn new(name: impl Into<String>, labels: impl IntoIterator<Item = impl Into<String>>) -> Self {
        FiniteSet { name: name.into(), labels: labels.into_iter().map(Into::into).collect() }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    /// Labels are non-empty and pairwise distinct.
    pub fn is_well_formed(&self) -> bool {
        !self.labels.is_empty()
            && self.labels.iter().enumerate().all(|(i, l)| !l.is_empty() && !self.labels[..i].contains(l))
    }
}

/// The type carried by a wire.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum PortType {
    Finite(FiniteSet),
    /// The real vector space of the given (positive) dimension.
    Lin(usize),
}

impl PortType {
    pub fn finite(name: &str, labels: &[&str]) -> Self {
        PortType::Finite(FiniteSet::new(name, labels.iter().copied()))
    }

    pub fn booleans() -> Self {
        PortType::finite("Bool", &["0", "1"])
    }

    pub fn real() -> Self {
        PortType::Lin(1)
    }

    pub fn as_finite(&self) -> Option<&FiniteSet> {
        match self {
            PortType::Finite(s) => Some(s),
            PortType::Lin(_) => None,
        }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, PortType::Finite(_))
    }

    /// Number of scalar coordinates a value of this type occupies.
    pub fn dim(&self) -> usize {
        match self {
            PortType::Finite(_) => 1,
            PortType::Lin(n) => *n,
        }
    }

    pub fn is_well_formed(&self) -> bool {
        match self {
            PortType::Finite(s) => s.is_well_formed(),
            PortType::Lin(n) => *n >= 1,
        }
    }
}

impl fmt::Display for PortType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PortType::Finite(s) => write!(f, "{}{{{}}}", s.name, s.labels.join(",")),
            PortType::Lin(n) => write!(f, "R^{n}"),
        }
    }
}

/// A labeled box: an object of the wiring diagram category.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Interface {
    pub name: String,
    pub inputs: Vec<PortType>,
    pub outputs: Vec<PortType>,
}

impl Interface {
    pub fn new(name: impl Into<String>, inputs: Vec<PortType>, outputs: Vec<PortType>) -> Self {
        Interface { name: name.into(), inputs, outputs }
    }

    /// The monoidal unit: no input and no output ports.
    pub fn unit() -> Self {
        Interface::new("I", vec![], vec![])
    }

    pub fn is_unit(&self) -> bool {
        self.inputs.is_empty() && self.outputs.is_empty()
    }

    /// Port signatures agree; the box names are not compared.
    pub fn same_ports(&self, other: &Interface) -> bool {
        self.inputs == other.inputs && self.outputs == other.outputs
    }

    /// Parallel placement. Unit factors contribute no name.
    pub fn tensor(&self, other: &Interface) -> Interface {
        let name = match (self.is_unit(), other.is_unit()) {
            (true, true) => "I".to_string(),
            (true, false) => other.name.clone(),
            (false, true) => self.name.clone(),
            (false, false) => format!("{}⊗{}", self.name, other.name),
        };
        let mut inputs = self.inputs.clone();
        inputs.extend(other.inputs.iter().cloned());
        let mut outputs = self.outputs.clone();
        outputs.extend(other.outputs.iter().cloned());
        Interface::new(name, inputs, outputs)
    }

    pub fn tensor_all<'a>(boxes: impl IntoIterator<Item = &'a Interface>) -> Interface {
        boxes.into_iter().fold(Interface::unit(), |acc, b| acc.tensor(b))
    }

    pub fn all_finite(&self) -> bool {
        self.inputs.iter().chain(&self.outputs).all(PortType::is_finite)
    }

    pub fn all_linear(&self) -> bool {
        self.inputs.iter().chain(&self.outputs).all(|p| !p.is_finite())
    }

    pub fn input_dim(&self) -> usize {
        self.inputs.iter().map(PortType::dim).sum()
    }

    pub fn output_dim(&self) -> usize {
        self.outputs.iter().map(PortType::dim).sum()
    }

    /// Enumeration of the input tuples, if every input port is finite.
    pub fn input_space(&self) -> Option<TupleSpace> {
        finite_space(&self.inputs)
    }

    /// Enumeration of the output tuples, if every output port is finite.
    pub fn output_space(&self) -> Option<TupleSpace> {
        finite_space(&self.outputs)
    }
}

pub(crate) fn finite_space(ports: &[PortType]) -> Option<TupleSpace> {
    ports.iter().map(|p| p.as_finite().map(FiniteSet::len)).collect::<Option<Vec<_>>>().map(TupleSpace::new)
}

impl fmt::Display for Interface {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |ps: &[PortType]| ps.iter().map(|p| p.to_string()).collect::<Vec<_>>().join(", ");
        write!(f, "{}({} ; {})", self.name, join(&self.inputs), join(&self.outputs))
    }
}

/// Coordinates of a port inside a diagram.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PortRef {
    OuterInput(usize),
    OuterOutput(usize),
    /// `(inner box index, port index)`
    InnerInput(usize, usize),
    /// `(inner box index, port index)`
    InnerOutput(usize, usize),
}

impl PortRef {
    /// Only outer inputs and inner outputs may feed other ports.
    pub fn is_source(&self) -> bool {
        matches!(self, PortRef::OuterInput(_) | PortRef::InnerOutput(..))
    }
}

impl fmt::Display for PortRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PortRef::OuterInput(i) => write!(f, "outer.in[{i}]"),
            PortRef::OuterOutput(i) => write!(f, "outer.out[{i}]"),
            PortRef::InnerInput(b, p) => write!(f, "#{b}.in[{p}]"),
            PortRef::InnerOutput(b, p) => write!(f, "#{b}.out[{p}]"),
        }
    }
}

/// A morphism `inner[0] ⊗ … ⊗ inner[n-1] → outer`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct WiringDiagram {
    pub inner: Vec<Interface>,
    pub outer: Interface,
    /// `input_sources[b][p]` feeds input port `p` of inner box `b`.
    pub input_sources: Vec<Vec<PortRef>>,
    /// `output_sources[j]` feeds outer output port `j`.
    pub output_sources: Vec<PortRef>,
}

impl WiringDiagram {
    pub fn new(
        inner: Vec<Interface>,
        outer: Interface,
        input_sources: Vec<Vec<PortRef>>,
        output_sources: Vec<PortRef>,
    ) -> Self {
        WiringDiagram { inner, outer, input_sources, output_sources }
    }

    /// The domain object: the tensor of the inner boxes.
    pub fn inner_tensor(&self) -> Interface {
        Interface::tensor_all(&self.inner)
    }

    /// Type carried by a port, if the reference is in range.
    pub fn port_type(&self, r: PortRef) -> Option<&PortType> {
        match r {
            PortRef::OuterInput(i) => self.outer.inputs.get(i),
            PortRef::OuterOutput(i) => self.outer.outputs.get(i),
            PortRef::InnerInput(b, p) => self.inner.get(b).and_then(|x| x.inputs.get(p)),
            PortRef::InnerOutput(b, p) => self.inner.get(b).and_then(|x| x.outputs.get(p)),
        }
    }

    /// Source feeding a destination port (inner input or outer output).
    pub fn source_of(&self, dest: PortRef) -> Option<PortRef> {
        match dest {
            PortRef::InnerInput(b, p) => self.input_sources.get(b).and_then(|v| v.get(p)).copied(),
            PortRef::OuterOutput(j) => self.output_sources.get(j).copied(),
            _ => None,
        }
    }

    pub fn set_source(&mut self, dest: PortRef, src: PortRef) -> crate::Result<()> {
        let slot = match dest {
            PortRef::InnerInput(b, p) => self.input_sources.get_mut(b).and_then(|v| v.get_mut(p)),
            PortRef::OuterOutput(j) => self.output_sources.get_mut(j),
            _ => None,
        };
        match slot {
            Some(s) => {
                *s = src;
                Ok(())
            }
            None => Err(crate::Error::OutOfRange(format!("{dest} is not a destination of this diagram"))),
        }
    }

    /// Every destination port in canonical order: inner inputs box by box,
    /// then outer outputs.
    pub fn destinations(&self) -> impl Iterator<Item = PortRef> + '_ {
        let inner = self
            .inner
            .iter()
            .enumerate()
            .flat_map(|(b, x)| (0..x.inputs.len()).map(move |p| PortRef::InnerInput(b, p)));
        let outer = (0..self.outer.outputs.len()).map(PortRef::OuterOutput);
        inner.chain(outer)
    }

    /// Every source port: outer inputs, then inner outputs box by box.
    pub fn sources(&self) -> impl Iterator<Item = PortRef> + '_ {
        let outer = (0..self.outer.inputs.len()).map(PortRef::OuterInput);
        let inner = self
            .inner
            .iter()
            .enumerate()
            .flat_map(|(b, x)| (0..x.outputs.len()).map(move |p| PortRef::InnerOutput(b, p)));
        outer.chain(inner)
    }

    /// Inner box `b` reads from inner box `c` (possibly itself).
    pub fn reads_from(&self, b: usize, c: usize) -> bool {
        self.input_sources.get(b).is_some_and(|v| v.iter().any(|s| matches!(s, PortRef::InnerOutput(x, _) if *x == c)))
    }

    /// True when some chain of inner-to-inner wires forms a cycle.
    pub fn has_feedback(&self) -> bool {
        self.topological_order().is_none()
    }

    /// Inner boxes ordered so that every box comes after the boxes it reads
    /// from; `None` when there is a feedback loop.
    pub fn topological_order(&self) -> Option<Vec<usize>> {
        let n = self.inner.len();
        let mut indegree = vec![0usize; n];
        let mut readers: Vec<Vec<usize>> = vec![Vec::new(); n];
        for b in 0..n {
            for c in 0..n {
                if self.reads_from(b, c) {
                    indegree[b] += 1;
                    readers[c].push(b);
                }
            }
        }
        let mut ready: Vec<usize> = (0..n).filter(|&b| indegree[b] == 0).rev().collect();
        let mut order = Vec::with_capacity(n);
        while let Some(c) = ready.pop() {
            order.push(c);
            for &b in &readers[c] {
                indegree[b] -= 1;
                if indegree[b] == 0 {
                    ready.push(b);
                }
            }
        }
        (order.len() == n).then_some(order)
    }
}

/// One well-formedness violation found by [`validate_diagram`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    /// The source table does not have one entry per destination port.
    Shape(String),
    /// The source is an outer output or an inner input, or an outer input
    /// feeding an outer output.
    IllegalSource {
        dest: PortRef,
        source: PortRef,
    },
    OutOfRange {
        dest: PortRef,
        source: PortRef,
    },
    TypeMismatch {
        dest: PortRef,
        source: PortRef,
        expected: PortType,
        found: PortType,
    },
    /// A port type is itself malformed (empty or duplicated labels, zero dimension).
    BadType {
        port: PortRef,
        ty: PortType,
    },
    /// A destination has no source at all (reported by builders).
    Missing {
        dest: PortRef,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Shape(s) => write!(f, "{s}"),
            Violation::IllegalSource { dest, source } => {
                let allowed = if matches!(dest, PortRef::OuterOutput(_)) {
                    "outer outputs read only inner outputs"
                } else {
                    "only outer inputs and inner outputs are sources"
                };
                write!(f, "{dest} cannot be fed by {source}: {allowed}")
            }
            Violation::OutOfRange { dest, source } => {
                write!(f, "{dest} is fed by {source}, which does not exist")
            }
            Violation::TypeMismatch { dest, source, expected, found } => {
                write!(f, "{dest} has type {expected} but is fed by {source} of type {found}")
            }
            Violation::BadType { port, ty } => write!(f, "{port} has malformed type {ty}"),
            Violation::Missing { dest } => write!(f, "{dest} has no source"),
        }
    }
}

/// Checks totality, source legality and type preservation. An empty report
/// means the diagram is a morphism of the category.
pub fn validate_diagram(d: &WiringDiagram) -> Vec<Violation> {
    let mut out = Vec::new();
    if d.input_sources.len() != d.inner.len() {
        out.push(Violation::Shape(format!(
            "{} inner boxes but {} input-source lists",
            d.inner.len(),
            d.input_sources.len()
        )));
        return out;
    }
    for (b, (x, srcs)) in d.inner.iter().zip(&d.input_sources).enumerate() {
        if srcs.len() != x.inputs.len() {
            out.push(Violation::Shape(format!(
                "inner box #{b} ({}) has {} inputs but {} sources",
                x.name,
                x.inputs.len(),
                srcs.len()
            )));
        }
    }
    if d.output_sources.len() != d.outer.outputs.len() {
        out.push(Violation::Shape(format!(
            "outer box has {} outputs but {} sources",
            d.outer.outputs.len(),
            d.output_sources.len()
        )));
    }
    if !out.is_empty() {
        return out;
    }
    for port in d.sources().chain(d.destinations()) {
        let ty = d.port_type(port).expect("enumerated port exists");
        if !ty.is_well_formed() {
            out.push(Violation::BadType { port, ty: ty.clone() });
        }
    }
    for dest in d.destinations() {
        let source = d.source_of(dest).expect("shape checked");
        let legal = match dest {
            PortRef::InnerInput(..) => source.is_source(),
            // Outer outputs read internal outputs only.
            PortRef::OuterOutput(_) => matches!(source, PortRef::InnerOutput(..)),
            _ => unreachable!(),
        };
        if !legal {
            out.push(Violation::IllegalSource { dest, source });
            continue;
        }
        let Some(found) = d.port_type(source) else {
            out.push(Violation::OutOfRange { dest, source });
            continue;
        };
        let expected = d.port_type(dest).expect("destination exists");
        if expected != found {
            out.push(Violation::TypeMismatch { dest, source, expected: expected.clone(), found: found.clone() });
        }
    }
    out
}

/// Incremental construction with explicit totality checking.
#[derive(Debug, Clone)]
pub struct DiagramBuilder {
    inner: Vec<Interface>,
    outer: Interface,
    inputs: Vec<Vec<Option<PortRef>>>,
    outputs: Vec<Option<PortRef>>,
}

impl DiagramBuilder {
    pub fn new(inner: Vec<Interface>, outer: Interface) -> Self {
        let inputs = inner.iter().map(|x| vec![None; x.inputs.len()]).collect();
        let outputs = vec![None; outer.outputs.len()];
        DiagramBuilder { inner, outer, inputs, outputs }
    }

    /// Assigns a source; returns the previous one if the destination was
    /// already fed.
    pub fn connect(&mut self, dest: PortRef, src: PortRef) -> crate::Result<Option<PortRef>> {
        let slot = match dest {
            PortRef::InnerInput(b, p) => self.inputs.get_mut(b).and_then(|v| v.get_mut(p)),
            PortRef::OuterOutput(j) => self.outputs.get_mut(j),
            _ => {
                return Err(crate::Error::InvalidDiagram(format!(
                    "{dest} is not a destination: only inner inputs and outer outputs receive wires"
                )))
            }
        };
        match slot {
            Some(s) => Ok(s.replace(src)),
            None => Err(crate::Error::OutOfRange(format!("{dest} does not exist"))),
        }
    }

    /// Finishes the diagram, reporting missing sources and every violation of
    /// [`validate_diagram`].
    pub fn finish(self) -> Result<WiringDiagram, Vec<Violation>> {
        let mut missing = Vec::new();
        let placeholder = PortRef::OuterInput(usize::MAX);
        let input_sources = self
            .inputs
            .iter()
            .enumerate()
            .map(|(b, v)| {
                v.iter()
                    .enumerate()
                    .map(|(p, s)| {
                        s.unwrap_or_else(|| {
                            missing.push(Violation::Missing { dest: PortRef::InnerInput(b, p) });
                            placeholder
                        })
                    })
                    .collect()
            })
            .collect();
        let output_sources = self
            .outputs
            .iter()
            .enumerate()
            .map(|(j, s)| {
                s.unwrap_or_else(|| {
                    missing.push(Violation::Missing { dest: PortRef::OuterOutput(j) });
                    placeholder
                })
            })
            .collect();
        let d = WiringDiagram::new(self.inner, self.outer, input_sources, output_sources);
        let mut v = missing;
        v.extend(validate_diagram(&d).into_iter().filter(|x| {
            !matches!(x, Violation::OutOfRange { source, .. } | Violation::IllegalSource { source, .. }
                | Violation::TypeMismatch { source, .. } if *source == placeholder)
        }));
        if v.is_empty() {
            Ok(d)
        } else {
            Err(v)
        }
    }
}
