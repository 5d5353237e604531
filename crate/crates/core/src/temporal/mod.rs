//! Discrete time: graph-typed wires whose paths are signals over intervals
//! `[0, n]`, and time contracts relating input and output signals of equal
//! length.
//!
//! Every wire of a time contract is the complete graph on a finite carrier,
//! either a finite set of labels or a finite grid of sample points of a linear
//! port. A box's joint input (or output) signal is a path in the complete
//! graph on the tuples of port values, vertex `v` being the tuple with index
//! `v` in the usual lexicographic numbering.

mod graph;

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use nalgebra::DVector;

pub use graph::{complete_graph, glue_sections, restrict_section, Edge, FinGraph, Section};

use crate::contracts::{Observation, PortSubset, StaticContract};
use crate::error::{Error, Result};
use crate::space::TupleSpace;
use crate::wiring::{FiniteSet, Interface, PortType};

/// Finite carrier of one wire.
#[derive(Debug, Clone, PartialEq)]
pub enum Carrier {
    Labels(FiniteSet),
    /// Sample points of a linear port; every point has the port's dimension.
    Samples(Vec<Vec<f64>>),
}

impl Carrier {
    pub fn len(&self) -> usize {
        match self {
            Carrier::Labels(s) => s.len(),
            Carrier::Samples(p) => p.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn label(&self, v: usize) -> String {
        match self {
            Carrier::Labels(s) => s.labels[v].clone(),
            Carrier::Samples(p) if p[v].len() == 1 => p[v][0].to_string(),
            Carrier::Samples(p) => format!("({})", p[v].iter().map(f64::to_string).collect::<Vec<_>>().join(",")),
        }
    }

    pub fn labels(&self) -> Vec<String> {
        (0..self.len()).map(|v| self.label(v)).collect()
    }

    fn fits(&self, port: &PortType) -> bool {
        match (self, port) {
            (Carrier::Labels(s), PortType::Finite(f)) => s == f,
            (Carrier::Samples(p), PortType::Lin(n)) => p.iter().all(|x| x.len() == *n),
            _ => false,
        }
    }

    /// Whether value `v` of this carrier lies in `subset`.
    pub fn admits(&self, subset: &PortSubset, v: usize) -> bool {
        match self {
            Carrier::Labels(_) => subset.contains_label(v),
            Carrier::Samples(p) => subset.contains_vector(&p[v]),
        }
    }
}

/// Complete graph of a finite port type.
pub fn complete_graph_of(port: &PortType) -> Result<FinGraph> {
    match port {
        PortType::Finite(s) => Ok(complete_graph(&s.labels)),
        PortType::Lin(_) => Err(Error::Type("a linear port needs sample points to become a graph".into())),
    }
}

/// Complete graph on sample points of a one-dimensional linear wire.
pub fn complete_graph_of_samples(samples: &[f64]) -> FinGraph {
    complete_graph(&Carrier::Samples(samples.iter().map(|&x| vec![x]).collect()).labels())
}

/// "The value on port `port` lies in `subset`."
#[derive(Debug, Clone, PartialEq)]
pub struct PortPredicate {
    pub port: usize,
    pub subset: PortSubset,
}

impl PortPredicate {
    pub fn new(port: usize, subset: PortSubset) -> Self {
        PortPredicate { port, subset }
    }
}

pub type MembershipFn = Arc<dyn Fn(&[Vec<usize>], &[Vec<usize>]) -> bool + Send + Sync>;

#[derive(Clone)]
pub enum TimeContractKind {
    /// Every instantaneous pair lies in a static contract.
    Lift(StaticContract),
    /// For all `i` with `i + delay ≤ n`: `assume(aᵢ) ⇒ guarantee(b_{i+delay})`.
    Window { assume: PortPredicate, guarantee: PortPredicate, delay: usize },
    /// For all `i` such that the input pattern starts at `i` and the whole
    /// response window fits in `[0, n]`, some output in the `within` steps
    /// after the pattern satisfies `response`.
    Implies { pattern: Vec<PortPredicate>, response: PortPredicate, within: usize },
    /// Explicit member pairs, as tuple-index sequences.
    Table(BTreeSet<(Vec<usize>, Vec<usize>)>),
    /// Arbitrary predicate over per-step port tuples.
    Predicate(MembershipFn),
}

impl fmt::Debug for TimeContractKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TimeContractKind::Lift(c) => f.debug_tuple("Lift").field(c).finish(),
            TimeContractKind::Window { assume, guarantee, delay } => f
                .debug_struct("Window")
                .field("assume", assume)
                .field("guarantee", guarantee)
                .field("delay", delay)
                .finish(),
            TimeContractKind::Implies { pattern, response, within } => f
                .debug_struct("Implies")
                .field("pattern", pattern)
                .field("response", response)
                .field("within", within)
                .finish(),
            TimeContractKind::Table(t) => f.debug_tuple("Table").field(&t.len()).finish(),
            TimeContractKind::Predicate(_) => f.write_str("Predicate(..)"),
        }
    }
}

/// A family of admissible (input signal, output signal) pairs per interval
/// length.
#[derive(Debug, Clone)]
pub struct TimeContract {
    interface: Interface,
    inputs: Vec<Carrier>,
    outputs: Vec<Carrier>,
    in_space: TupleSpace,
    out_space: TupleSpace,
    kind: TimeContractKind,
    horizon: Option<usize>,
}

impl TimeContract {
    pub fn new(
        interface: Interface,
        inputs: Vec<Carrier>,
        outputs: Vec<Carrier>,
        kind: TimeContractKind,
        horizon: Option<usize>,
    ) -> Result<Self> {
        let fit = |cs: &[Carrier], ps: &[PortType]| cs.len() == ps.len() && cs.iter().zip(ps).all(|(c, p)| c.fits(p));
        if !fit(&inputs, &interface.inputs) || !fit(&outputs, &interface.outputs) {
            return Err(Error::Type(format!("carriers do not match the ports of {interface}")));
        }
        let check_pred = |p: &PortPredicate, cs: &[Carrier], ps: &[PortType]| -> Result<()> {
            let port = ps.get(p.port).ok_or_else(|| Error::OutOfRange(format!("port {} of {}", p.port, cs.len())))?;
            p.subset.check(port)
        };
        match &kind {
            TimeContractKind::Lift(c) if !c.interface().same_ports(&interface) => {
                return Err(crate::error::mismatch("lifted contract lives on another box"));
            }
            TimeContractKind::Window { assume, guarantee, .. } => {
                check_pred(assume, &inputs, &interface.inputs)?;
                check_pred(guarantee, &outputs, &interface.outputs)?;
            }
            TimeContractKind::Implies { pattern, response, within } => {
                if pattern.is_empty() || *within == 0 {
                    return Err(Error::Value("implies needs a non-empty pattern and window".into()));
                }
                for p in pattern {
                    check_pred(p, &inputs, &interface.inputs)?;
                }
                check_pred(response, &outputs, &interface.outputs)?;
            }
            _ => {}
        }
        let in_space = TupleSpace::new(inputs.iter().map(Carrier::len).collect());
        let out_space = TupleSpace::new(outputs.iter().map(Carrier::len).collect());
        Ok(TimeContract { interface, inputs, outputs, in_space, out_space, kind, horizon })
    }

    /// Carriers read off a box whose ports are all finite.
    pub fn finite_carriers(ports: &[PortType]) -> Result<Vec<Carrier>> {
        ports
            .iter()
            .map(|p| match p {
                PortType::Finite(s) => Ok(Carrier::Labels(s.clone())),
                PortType::Lin(_) => Err(Error::Type("linear port without sample points".into())),
            })
            .collect()
    }

    pub fn interface(&self) -> &Interface {
        &self.interface
    }

    pub fn kind(&self) -> &TimeContractKind {
        &self.kind
    }

    pub fn horizon(&self) -> Option<usize> {
        self.horizon
    }

    pub fn input_carriers(&self) -> &[Carrier] {
        &self.inputs
    }

    pub fn output_carriers(&self) -> &[Carrier] {
        &self.outputs
    }

    /// Graph of joint input signals.
    pub fn in_graph(&self) -> FinGraph {
        complete_graph(&joint_labels(&self.inputs, &self.in_space))
    }

    pub fn out_graph(&self) -> FinGraph {
        complete_graph(&joint_labels(&self.outputs, &self.out_space))
    }

    pub fn in_size(&self) -> usize {
        self.in_space.size()
    }

    pub fn out_size(&self) -> usize {
        self.out_space.size()
    }

    /// Membership for signals given as per-step port tuples.
    pub fn contains_tuples(&self, xs: &[Vec<usize>], ys: &[Vec<usize>]) -> Result<bool> {
        if xs.len() != ys.len() || xs.is_empty() {
            return Err(Error::Value(format!("signals of lengths {} and {}", xs.len(), ys.len())));
        }
        if let Some(h) = self.horizon {
            if xs.len() > h + 1 {
                return Err(Error::OutOfRange(format!("interval length {} beyond horizon {h}", xs.len() - 1)));
            }
        }
        for x in xs {
            self.in_space.encode(x)?;
        }
        for y in ys {
            self.out_space.encode(y)?;
        }
        let n = xs.len() - 1;
        Ok(match &self.kind {
            TimeContractKind::Lift(c) => {
                for (x, y) in xs.iter().zip(ys) {
                    if !self.pair_in(c, x, y)? {
                        return Ok(false);
                    }
                }
                true
            }
            TimeContractKind::Window { assume, guarantee, delay } => (0..=n)
                .filter(|i| i + delay <= n)
                .all(|i| !self.holds_in(assume, &xs[i]) || self.holds_out(guarantee, &ys[i + delay])),
            TimeContractKind::Implies { pattern, response, within } => {
                let l = pattern.len();
                (0..=n).filter(|i| i + l + within - 1 <= n).all(|i| {
                    let matched = pattern.iter().enumerate().all(|(k, p)| self.holds_in(p, &xs[i + k]));
                    !matched || (i + l..i + l + within).any(|j| self.holds_out(response, &ys[j]))
                })
            }
            TimeContractKind::Table(t) => {
                let xi = xs.iter().map(|x| self.in_space.encode(x).expect("checked")).collect();
                let yi = ys.iter().map(|y| self.out_space.encode(y).expect("checked")).collect();
                t.contains(&(xi, yi))
            }
            TimeContractKind::Predicate(f) => f(xs, ys),
        })
    }

    fn holds_in(&self, p: &PortPredicate, x: &[usize]) -> bool {
        self.inputs[p.port].admits(&p.subset, x[p.port])
    }

    fn holds_out(&self, p: &PortPredicate, y: &[usize]) -> bool {
        self.outputs[p.port].admits(&p.subset, y[p.port])
    }

    fn pair_in(&self, c: &StaticContract, x: &[usize], y: &[usize]) -> Result<bool> {
        let sampled = |cs: &[Carrier], v: &[usize]| -> Option<DVector<f64>> {
            let mut coords = Vec::new();
            for (c, &i) in cs.iter().zip(v) {
                match c {
                    Carrier::Samples(p) => coords.extend_from_slice(&p[i]),
                    Carrier::Labels(_) => return None,
                }
            }
            Some(DVector::from_vec(coords))
        };
        if self.interface.all_finite() {
            Vec::pair_in(c, &x.to_vec(), &y.to_vec())
        } else {
            match (sampled(&self.inputs, x), sampled(&self.outputs, y)) {
                (Some(a), Some(b)) => DVector::pair_in(c, &a, &b),
                _ => Err(Error::Unsupported("lifting a contract over mixed finite and linear ports".into())),
            }
        }
    }

    fn tuples(space: &TupleSpace, s: &Section) -> Vec<Vec<usize>> {
        s.vertices().iter().map(|&v| space.decode(v)).collect()
    }
}

fn joint_labels(cs: &[Carrier], space: &TupleSpace) -> Vec<String> {
    space
        .iter()
        .map(|t| {
            let parts: Vec<String> = t.iter().zip(cs).map(|(&v, c)| c.label(v)).collect();
            if parts.len() == 1 {
                parts[0].clone()
            } else {
                format!("({})", parts.join(","))
            }
        })
        .collect()
}

/// Every instantaneous pair must lie in `r`; carriers come from the ports,
/// or from `samples` for linear ports (inputs then outputs, one grid per
/// port).
pub fn lift_static(r: &StaticContract, samples: Option<(Vec<Carrier>, Vec<Carrier>)>) -> Result<TimeContract> {
    let iface = r.interface().clone();
    let (ins, outs) = match samples {
        Some(cs) => cs,
        None => (TimeContract::finite_carriers(&iface.inputs)?, TimeContract::finite_carriers(&iface.outputs)?),
    };
    TimeContract::new(iface, ins, outs, TimeContractKind::Lift(r.clone()), None)
}

/// Membership of an (input, output) section pair, both paths in the complete
/// graphs of joint values.
pub fn time_membership(c: &TimeContract, x: &Section, y: &Section) -> Result<bool> {
    if x.len() != y.len() {
        return Err(Error::Value(format!("input section has length {}, output section {}", x.len(), y.len())));
    }
    if x.vertices().iter().any(|&v| v >= c.in_size()) || y.vertices().iter().any(|&v| v >= c.out_size()) {
        return Err(Error::OutOfRange("section leaves the carrier".into()));
    }
    c.contains_tuples(&TimeContract::tuples(&c.in_space, x), &TimeContract::tuples(&c.out_space, y))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClosureViolation {
    /// The member pair, as tuple indices per step.
    pub input: Vec<usize>,
    pub output: Vec<usize>,
    pub offset: usize,
    pub length: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClosureReport {
    pub horizon: usize,
    pub members_checked: usize,
    pub restrictions_checked: usize,
    pub counterexamples: Vec<ClosureViolation>,
}

impl ClosureReport {
    pub fn closed(&self) -> bool {
        self.counterexamples.is_empty()
    }
}

/// Exhaustively checks that restricting any member pair of length `n ≤ up_to`
/// to any subinterval gives a member pair. At most `max_counterexamples` are
/// collected.
pub fn check_restriction_closed(c: &TimeContract, up_to: usize, max_counterexamples: usize) -> Result<ClosureReport> {
    if let Some(h) = c.horizon {
        if up_to > h {
            return Err(Error::OutOfRange(format!("check up to {up_to} beyond horizon {h}")));
        }
    }
    let mut report =
        ClosureReport { horizon: up_to, members_checked: 0, restrictions_checked: 0, counterexamples: Vec::new() };
    for n in 0..=up_to {
        let xs_space = TupleSpace::new(vec![c.in_size(); n + 1]);
        let ys_space = TupleSpace::new(vec![c.out_size(); n + 1]);
        for xi in xs_space.iter() {
            let xs: Vec<Vec<usize>> = xi.iter().map(|&v| c.in_space.decode(v)).collect();
            for yi in ys_space.iter() {
                let ys: Vec<Vec<usize>> = yi.iter().map(|&v| c.out_space.decode(v)).collect();
                if !c.contains_tuples(&xs, &ys)? {
                    continue;
                }
                report.members_checked += 1;
                for m in 0..n {
                    for p in 0..=n - m {
                        report.restrictions_checked += 1;
                        if !c.contains_tuples(&xs[p..=p + m], &ys[p..=p + m])?
                            && report.counterexamples.len() < max_counterexamples
                        {
                            report.counterexamples.push(ClosureViolation {
                                input: xi.clone(),
                                output: yi.clone(),
                                offset: p,
                                length: m,
                            });
                        }
                    }
                }
            }
        }
    }
    Ok(report)
}
