use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};

use super::{finite_spaces, ContractBody, PortSubset, Relation, StaticContract};
use crate::behavior::{check_inhabitants, Behavior, Trajectory};
use crate::error::{mismatch, Error, Result};
use crate::wiring::{Interface, PortRef, WiringDiagram};

/// Absolute tolerance for membership in a linear graph.
pub const GRAPH_TOLERANCE: f64 = 1e-9;

fn block_diag(x: &DMatrix<f64>, y: &DMatrix<f64>) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(x.nrows() + y.nrows(), x.ncols() + y.ncols());
    m.view_mut((0, 0), x.shape()).copy_from(x);
    m.view_mut((x.nrows(), x.ncols()), y.shape()).copy_from(y);
    m
}

/// Parallel contract: `{(x₁x₂, y₁y₂) | (x₁,y₁) ∈ R₁, (x₂,y₂) ∈ R₂}`.
pub fn contract_tensor(r1: &StaticContract, r2: &StaticContract) -> Result<StaticContract> {
    let interface = r1.interface.tensor(&r2.interface);
    if r1.is_empty() || r2.is_empty() {
        return Ok(StaticContract::empty(interface));
    }
    let body = match (&r1.body, &r2.body) {
        (ContractBody::Independent { inputs: a, outputs: b }, ContractBody::Independent { inputs: c, outputs: d }) => {
            ContractBody::Independent {
                inputs: a.iter().chain(c).cloned().collect(),
                outputs: b.iter().chain(d).cloned().collect(),
            }
        }
        (ContractBody::LinearGraph(h), ContractBody::LinearGraph(k)) => ContractBody::LinearGraph(block_diag(h, k)),
        _ => {
            let (p, q) = match (r1.to_relation(), r2.to_relation()) {
                (Ok(p), Ok(q)) => (p, q),
                _ => {
                    return Err(Error::Unsupported(
                        "tensor of a linear graph with a non-graph contract has no finite representation".into(),
                    ))
                }
            };
            let mut out = Relation::new();
            for (x1, y1) in &p {
                for (x2, y2) in &q {
                    out.insert(([x1.as_slice(), x2].concat(), [y1.as_slice(), y2].concat()));
                }
            }
            ContractBody::Relation(out)
        }
    };
    Ok(StaticContract { interface, body })
}

struct Coordinates {
    inner_in: Vec<Vec<usize>>,
    inner_out: Vec<Vec<usize>>,
}

fn coordinates(d: &WiringDiagram) -> Coordinates {
    let offsets = |ports: &mut dyn Iterator<Item = usize>| {
        let mut acc = 0;
        ports
            .map(|n| {
                let v: Vec<usize> = (acc..acc + n).collect();
                acc += n;
                v
            })
            .collect()
    };
    Coordinates {
        inner_in: offsets(&mut d.inner.iter().map(|x| x.inputs.len())),
        inner_out: offsets(&mut d.inner.iter().map(|x| x.outputs.len())),
    }
}

/// Composite of a finite relation on the tensored inner box:
/// `{(y₁, y₂) | ∃x₂ : (f_in(x₂, y₁), x₂) ∈ R ∧ f_out(x₂) = y₂}`.
pub fn contract_apply_finite(d: &WiringDiagram, r: &StaticContract) -> Result<StaticContract> {
    let inner = d.inner_tensor();
    if !r.interface.same_ports(&inner) {
        return Err(mismatch(format!("contract on {} but the inner boxes form {inner}", r.interface)));
    }
    if let Some(v) = crate::wiring::validate_diagram(d).first() {
        return Err(Error::InvalidDiagram(v.to_string()));
    }
    let (outer_in, _) = finite_spaces(&d.outer)?;
    let pairs = r.to_relation()?;
    let coords = coordinates(d);
    let mut out = Relation::new();
    'pairs: for (x_in, x_out) in &pairs {
        let mut y1: Vec<Option<usize>> = vec![None; d.outer.inputs.len()];
        for (b, srcs) in d.input_sources.iter().enumerate() {
            for (p, &src) in srcs.iter().enumerate() {
                let v = x_in[coords.inner_in[b][p]];
                match src {
                    PortRef::OuterInput(i) => match y1[i] {
                        Some(w) if w != v => continue 'pairs,
                        _ => y1[i] = Some(v),
                    },
                    PortRef::InnerOutput(c, q) => {
                        if x_out[coords.inner_out[c][q]] != v {
                            continue 'pairs;
                        }
                    }
                    _ => unreachable!("validated diagram"),
                }
            }
        }
        let y2: Vec<usize> = d
            .output_sources
            .iter()
            .map(|&src| match src {
                PortRef::InnerOutput(c, q) => x_out[coords.inner_out[c][q]],
                _ => unreachable!("validated diagram"),
            })
            .collect();
        // outer inputs read by no inner box are unconstrained
        let free: Vec<usize> = (0..y1.len()).filter(|&i| y1[i].is_none()).collect();
        let radices = free.iter().map(|&i| outer_in.radices()[i]).collect();
        for fill in crate::space::TupleSpace::new(radices).iter() {
            let mut y = y1.clone();
            for (&i, v) in free.iter().zip(fill) {
                y[i] = Some(v);
            }
            out.insert((y.into_iter().map(|v| v.expect("filled")).collect(), y2.clone()));
        }
    }
    StaticContract::relation(d.outer.clone(), out)
}

fn is_singleton(s: &PortSubset) -> bool {
    match s {
        PortSubset::Labels(l) => l.len() == 1,
        PortSubset::Box(b) => b.iter().all(|c| matches!(c.parts(), [(lo, hi)] if lo == hi)),
    }
}

/// Composite of product contracts by intersecting, for every source port,
/// the subsets of the source and of all ports it feeds.
///
/// When one inner output feeds several outer outputs and more than one value
/// is feasible, the composite is a diagonal rather than a product; it is then
/// computed as a finite relation if every port is finite, and rejected
/// otherwise.
pub fn contract_apply_independent(d: &WiringDiagram, contracts: &[StaticContract]) -> Result<StaticContract> {
    check_inhabitants(d, contracts.iter().map(|c| &c.interface))?;
    if contracts.iter().any(StaticContract::is_empty) {
        return Ok(StaticContract::empty(d.outer.clone()));
    }
    let all_finite = d.outer.all_finite() && d.inner.iter().all(Interface::all_finite);
    let mut ins = Vec::with_capacity(contracts.len());
    let mut outs = Vec::with_capacity(contracts.len());
    for (b, c) in contracts.iter().enumerate() {
        match &c.body {
            ContractBody::Independent { inputs, outputs } => {
                ins.push(inputs);
                outs.push(outputs);
            }
            _ if all_finite => return contract_apply(d, contracts),
            _ => return Err(Error::Unsupported(format!("contract of inner box #{b} is not independent"))),
        }
    }

    let mut feasible: BTreeMap<PortRef, PortSubset> = BTreeMap::new();
    for (i, p) in d.outer.inputs.iter().enumerate() {
        feasible.insert(PortRef::OuterInput(i), PortSubset::full(p));
    }
    for (b, o) in outs.iter().enumerate() {
        for (p, s) in o.iter().enumerate() {
            feasible.insert(PortRef::InnerOutput(b, p), s.clone());
        }
    }
    for (b, srcs) in d.input_sources.iter().enumerate() {
        for (p, src) in srcs.iter().enumerate() {
            let f = feasible.get_mut(src).expect("validated source");
            *f = f.intersect(&ins[b][p])?;
        }
    }
    if feasible.values().any(PortSubset::is_empty) {
        return Ok(StaticContract::empty(d.outer.clone()));
    }
    let mut readers: BTreeMap<PortRef, usize> = BTreeMap::new();
    for src in &d.output_sources {
        *readers.entry(*src).or_default() += 1;
    }
    if readers.iter().any(|(src, &n)| n > 1 && !is_singleton(&feasible[src])) {
        if all_finite {
            return contract_apply(d, contracts);
        }
        return Err(Error::Unsupported(
            "an inner output feeds several outer outputs; the composite is not independent".into(),
        ));
    }
    let inputs = (0..d.outer.inputs.len()).map(|i| feasible[&PortRef::OuterInput(i)].clone()).collect();
    let outputs = d.output_sources.iter().map(|src| feasible[src].clone()).collect();
    StaticContract::independent(d.outer.clone(), inputs, outputs)
}

/// Composite of per-box contracts. Product contracts go through
/// [`contract_apply_independent`], everything else through the tensored
/// finite relation.
pub fn contract_apply(d: &WiringDiagram, contracts: &[StaticContract]) -> Result<StaticContract> {
    check_inhabitants(d, contracts.iter().map(|c| &c.interface))?;
    let independent =
        contracts.iter().all(|c| matches!(c.body, ContractBody::Independent { .. } | ContractBody::Empty));
    let all_finite = d.outer.all_finite() && d.inner.iter().all(Interface::all_finite);
    if independent && !all_finite {
        return contract_apply_independent(d, contracts);
    }
    let unit = StaticContract::relation(Interface::unit(), [(vec![], vec![])].into_iter().collect())?;
    let t = contracts.iter().try_fold(unit, |acc, c| contract_tensor(&acc, c))?;
    contract_apply_finite(d, &t)
}

/// The maximal contract a memoryless behavior satisfies: the graph of its
/// function.
pub fn maximal_contract(b: &Behavior) -> Result<StaticContract> {
    match b {
        Behavior::Function(f) => {
            let pairs = f.input_space().iter().zip(f.table()).map(|(x, y)| (x, y.clone())).collect();
            StaticContract::relation(f.interface().clone(), pairs)
        }
        Behavior::Linear(h) => StaticContract::linear_graph(h.interface().clone(), h.matrix().clone()),
        Behavior::Moore(_) | Behavior::Lti(_) => {
            Err(Error::Unsupported("the maximal static contract is only defined for memoryless behaviors".into()))
        }
    }
}

/// A value that can be tested against a static contract.
pub trait Observation {
    fn pair_in(c: &StaticContract, x: &Self, y: &Self) -> Result<bool>;
    /// Membership of an output alone in the contract's output projection.
    fn output_in(c: &StaticContract, y: &Self) -> Result<bool>;
}

impl Observation for Vec<usize> {
    fn pair_in(c: &StaticContract, x: &Self, y: &Self) -> Result<bool> {
        let (ins, outs) = finite_spaces(&c.interface)?;
        ins.encode(x)?;
        outs.encode(y)?;
        Ok(match &c.body {
            ContractBody::Relation(r) => r.contains(&(x.clone(), y.clone())),
            ContractBody::Independent { inputs, outputs } => {
                x.iter().zip(inputs).all(|(&v, s)| s.contains_label(v))
                    && y.iter().zip(outputs).all(|(&v, s)| s.contains_label(v))
            }
            ContractBody::Empty => false,
            ContractBody::LinearGraph(_) => unreachable!("finite ports"),
        })
    }

    fn output_in(c: &StaticContract, y: &Self) -> Result<bool> {
        let (_, outs) = finite_spaces(&c.interface)?;
        outs.encode(y)?;
        Ok(match &c.body {
            ContractBody::Relation(r) => r.iter().any(|(_, w)| w == y),
            ContractBody::Independent { outputs, .. } => y.iter().zip(outputs).all(|(&v, s)| s.contains_label(v)),
            ContractBody::Empty => false,
            ContractBody::LinearGraph(_) => unreachable!("finite ports"),
        })
    }
}

fn ports_contain(subsets: &[PortSubset], ports: &[crate::wiring::PortType], v: &DVector<f64>) -> bool {
    let mut off = 0;
    subsets.iter().zip(ports).all(|(s, p)| {
        let coords = &v.as_slice()[off..off + p.dim()];
        off += p.dim();
        s.contains_vector(coords)
    })
}

impl Observation for DVector<f64> {
    fn pair_in(c: &StaticContract, x: &Self, y: &Self) -> Result<bool> {
        check_linear(c, x, y)?;
        match &c.body {
            ContractBody::Independent { inputs, outputs } => {
                Ok(ports_contain(inputs, &c.interface.inputs, x) && ports_contain(outputs, &c.interface.outputs, y))
            }
            ContractBody::LinearGraph(h) => Ok((h * x - y).amax() <= GRAPH_TOLERANCE),
            ContractBody::Empty => Ok(false),
            ContractBody::Relation(_) => unreachable!("linear ports"),
        }
    }

    fn output_in(c: &StaticContract, y: &Self) -> Result<bool> {
        check_linear(c, &DVector::zeros(c.interface.input_dim()), y)?;
        match &c.body {
            ContractBody::Independent { outputs, .. } => Ok(ports_contain(outputs, &c.interface.outputs, y)),
            ContractBody::LinearGraph(h) => {
                if h.ncols() == 0 {
                    return Ok(y.amax() <= GRAPH_TOLERANCE);
                }
                // y lies in the image of H iff the least-squares residual vanishes
                let x = h.clone().svd(true, true).solve(y, 1e-12).map_err(|e| Error::Value(e.to_string()))?;
                Ok((h * x - y).amax() <= GRAPH_TOLERANCE)
            }
            ContractBody::Empty => Ok(false),
            ContractBody::Relation(_) => unreachable!("linear ports"),
        }
    }
}

fn check_linear(c: &StaticContract, x: &DVector<f64>, y: &DVector<f64>) -> Result<()> {
    if !c.interface.all_linear() {
        return Err(Error::Type(format!("real-valued observation against finite contract on {}", c.interface)));
    }
    if x.len() != c.interface.input_dim() {
        return Err(Error::Dimension { expected: c.interface.input_dim(), got: x.len() });
    }
    if y.len() != c.interface.output_dim() {
        return Err(Error::Dimension { expected: c.interface.output_dim(), got: y.len() });
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Satisfaction {
    pub holds: bool,
    /// Step of the first pair outside the contract.
    pub first_violation: Option<usize>,
}

/// Checks every instantaneous pair `(inputs[t], outputs[t])`. A trailing
/// output with no matching input is checked against the output projection.
pub fn satisfies<S, V: Observation>(t: &Trajectory<S, V>, r: &StaticContract) -> Result<Satisfaction> {
    let n = t.inputs.len();
    if t.outputs.len() != n && t.outputs.len() != n + 1 && !t.outputs.is_empty() {
        return Err(Error::Value(format!("{n} inputs but {} outputs", t.outputs.len())));
    }
    if t.outputs.is_empty() && n > 0 {
        return Err(Error::Value(format!("{n} inputs but no outputs")));
    }
    for (step, (x, y)) in t.inputs.iter().zip(&t.outputs).enumerate() {
        if !V::pair_in(r, x, y)? {
            return Ok(Satisfaction { holds: false, first_violation: Some(step) });
        }
    }
    if t.outputs.len() == n + 1 && !V::output_in(r, &t.outputs[n])? {
        return Ok(Satisfaction { holds: false, first_violation: Some(n) });
    }
    Ok(Satisfaction { holds: true, first_violation: None })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::behavior::{FiniteFunction, LinearMap};
    use crate::contracts::IntervalSet;
    use crate::wiring::{identity_diagram, PortType};
    use nalgebra::dmatrix;

    fn t3() -> PortType {
        PortType::finite("T", &["a", "b", "c"])
    }

    fn serial(a: &Interface, b: &Interface) -> WiringDiagram {
        WiringDiagram::new(
            vec![a.clone(), b.clone()],
            Interface::new("S", a.inputs.clone(), b.outputs.clone()),
            vec![vec![PortRef::OuterInput(0)], vec![PortRef::InnerOutput(0, 0)]],
            vec![PortRef::InnerOutput(1, 0)],
        )
    }

    #[test]
    fn identity_keeps_relation() {
        let x = Interface::new("X", vec![t3()], vec![t3()]);
        let r: Relation = [(vec![0], vec![1]), (vec![2], vec![2])].into_iter().collect();
        let c = StaticContract::relation(x.clone(), r.clone()).unwrap();
        let out = contract_apply_finite(&identity_diagram(&x), &c).unwrap();
        assert_eq!(out.to_relation().unwrap(), r);
    }

    #[test]
    fn serial_is_relational_composition() {
        let x = Interface::new("X", vec![t3()], vec![t3()]);
        let r1: Relation = [(vec![0], vec![1]), (vec![1], vec![2])].into_iter().collect();
        let r2: Relation = [(vec![1], vec![0]), (vec![2], vec![0]), (vec![2], vec![1])].into_iter().collect();
        let out = contract_apply(
            &serial(&x, &x),
            &[StaticContract::relation(x.clone(), r1).unwrap(), StaticContract::relation(x.clone(), r2).unwrap()],
        )
        .unwrap();
        let expect: Relation = [(vec![0], vec![0]), (vec![1], vec![0]), (vec![1], vec![1])].into_iter().collect();
        assert_eq!(out.to_relation().unwrap(), expect);
    }

    #[test]
    fn tensor_sizes_multiply() {
        let x = Interface::new("X", vec![t3()], vec![t3()]);
        let r1 = StaticContract::relation(x.clone(), [(vec![0], vec![0]), (vec![1], vec![1])].into()).unwrap();
        let r2 =
            StaticContract::relation(x.clone(), [(vec![0], vec![0]), (vec![1], vec![2]), (vec![2], vec![2])].into())
                .unwrap();
        let t = contract_tensor(&r1, &r2).unwrap();
        assert_eq!(t.to_relation().unwrap().len(), 6);
        assert!(t.to_relation().unwrap().contains(&(vec![1, 2], vec![1, 2])));
        let unit = StaticContract::full(Interface::unit());
        assert_eq!(contract_tensor(&r1, &unit).unwrap().to_relation().unwrap(), r1.to_relation().unwrap());
    }

    #[test]
    fn independent_serial_intersects_middle_wire() {
        let lin = Interface::new("X", vec![PortType::real()], vec![PortType::real()]);
        let iv = |lo, hi| PortSubset::Box(vec![IntervalSet::interval(lo, hi).unwrap()]);
        let c1 = StaticContract::independent(lin.clone(), vec![iv(0.0, 1.0)], vec![iv(0.0, 10.0)]).unwrap();
        let c2 = StaticContract::independent(lin.clone(), vec![iv(5.0, 20.0)], vec![iv(-1.0, 1.0)]).unwrap();
        let out = contract_apply_independent(&serial(&lin, &lin), &[c1.clone(), c2]).unwrap();
        assert_eq!(out.body(), &ContractBody::Independent { inputs: vec![iv(0.0, 1.0)], outputs: vec![iv(-1.0, 1.0)] });
        let c3 = StaticContract::independent(lin.clone(), vec![iv(11.0, 20.0)], vec![iv(-1.0, 1.0)]).unwrap();
        assert!(contract_apply_independent(&serial(&lin, &lin), &[c1, c3]).unwrap().is_empty());
    }

    #[test]
    fn duplicated_output_falls_back() {
        let b = PortType::booleans();
        let x = Interface::new("X", vec![], vec![b.clone()]);
        let d = WiringDiagram::new(
            vec![x.clone()],
            Interface::new("O", vec![], vec![b.clone(), b.clone()]),
            vec![vec![]],
            vec![PortRef::InnerOutput(0, 0), PortRef::InnerOutput(0, 0)],
        );
        let out = contract_apply_independent(&d, &[StaticContract::full(x)]).unwrap();
        let expect: Relation = [(vec![], vec![0, 0]), (vec![], vec![1, 1])].into_iter().collect();
        assert_eq!(out.to_relation().unwrap(), expect);
    }

    #[test]
    fn maximal_contracts() {
        let x =
            Interface::new("X", vec![PortType::finite("AB", &["a", "b"])], vec![PortType::finite("AB", &["a", "b"])]);
        let id = FiniteFunction::from_fn(x, |v| v.to_vec()).unwrap();
        let c = maximal_contract(&Behavior::Function(id)).unwrap();
        assert_eq!(c.to_relation().unwrap(), [(vec![0], vec![0]), (vec![1], vec![1])].into());
        let lin = Interface::new("L", vec![PortType::real()], vec![PortType::real()]);
        let six = LinearMap::new(lin, dmatrix![6.0]).unwrap();
        let g = maximal_contract(&Behavior::Linear(six)).unwrap();
        assert_eq!(g.body(), &ContractBody::LinearGraph(dmatrix![6.0]));
        let a = DVector::from_element(1, 1.5);
        assert!(DVector::pair_in(&g, &a, &DVector::from_element(1, 9.0)).unwrap());
        assert!(!DVector::pair_in(&g, &a, &DVector::from_element(1, 9.5)).unwrap());
        assert!(maximal_contract(&Behavior::Moore(crate::behavior::MooreMachine::trivial())).is_err());
    }

    #[test]
    fn satisfies_reports_first_violation() {
        let lin = Interface::new("X", vec![PortType::real()], vec![PortType::real()]);
        let iv = |lo, hi| PortSubset::Box(vec![IntervalSet::interval(lo, hi).unwrap()]);
        let c = StaticContract::independent(lin, vec![iv(2.0, 3.0)], vec![iv(10.0, 11.0)]).unwrap();
        let v = |xs: &[f64]| xs.iter().map(|&x| DVector::from_element(1, x)).collect::<Vec<_>>();
        let mut t: Trajectory<(), DVector<f64>> =
            Trajectory { inputs: v(&[2.0, 2.5, 2.7, 3.0]), states: vec![], outputs: v(&[10.0, 11.0, 11.0, 11.0]) };
        assert!(satisfies(&t, &c).unwrap().holds);
        t.outputs[2] = DVector::from_element(1, 9.5);
        assert_eq!(satisfies(&t, &c).unwrap().first_violation, Some(2));
        let empty: Trajectory<(), DVector<f64>> = Trajectory { inputs: vec![], states: vec![], outputs: vec![] };
        assert!(satisfies(&empty, &StaticContract::empty(c.interface().clone())).unwrap().holds);
    }
}
