use nalgebra::DMatrix;

use super::lti::LtiSystem;
use super::moore::{check_inhabitants, tuple_label, MooreMachine};
use crate::error::{Error, Result};
use crate::space::TupleSpace;
use crate::wiring::{Interface, PortRef, WiringDiagram};

/// A total function between the finite input and output tuples of a box.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiniteFunction {
    interface: Interface,
    input_space: TupleSpace,
    /// Output tuple for every input index.
    table: Vec<Vec<usize>>,
}

impl FiniteFunction {
    pub fn new(interface: Interface, table: Vec<Vec<usize>>) -> Result<Self> {
        if !interface.all_finite() {
            return Err(Error::Type(format!("finite function on {interface} needs finite ports")));
        }
        let input_space = interface.input_space().expect("finite");
        let output_space = interface.output_space().expect("finite");
        if table.len() != input_space.size() {
            return Err(Error::Dimension { expected: input_space.size(), got: table.len() });
        }
        for y in &table {
            output_space.encode(y)?;
        }
        Ok(FiniteFunction { interface, input_space, table })
    }

    pub fn from_fn(interface: Interface, h: impl Fn(&[usize]) -> Vec<usize>) -> Result<Self> {
        let space = interface
            .input_space()
            .ok_or_else(|| Error::Type(format!("finite function on {interface} needs finite ports")))?;
        let table = space.iter().map(|x| h(&x)).collect();
        Self::new(interface, table)
    }

    pub fn interface(&self) -> &Interface {
        &self.interface
    }

    pub fn input_space(&self) -> &TupleSpace {
        &self.input_space
    }

    pub fn table(&self) -> &[Vec<usize>] {
        &self.table
    }

    pub fn eval(&self, x: &[usize]) -> Result<&[usize]> {
        Ok(&self.table[self.input_space.encode(x)?])
    }

    /// Parallel placement of two functions.
    pub fn tensor(&self, other: &FiniteFunction) -> FiniteFunction {
        let table = self
            .table
            .iter()
            .flat_map(|y1| {
                other.table.iter().map(move |y2| {
                    let mut y = y1.clone();
                    y.extend_from_slice(y2);
                    y
                })
            })
            .collect();
        FiniteFunction::new(self.interface.tensor(&other.interface), table).expect("tensor of total functions")
    }
}

/// A linear map `y = H x` between the linear ports of a box.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearMap {
    interface: Interface,
    h: DMatrix<f64>,
}

impl LinearMap {
    pub fn new(interface: Interface, h: DMatrix<f64>) -> Result<Self> {
        if !interface.all_linear() {
            return Err(Error::Type(format!("linear map on {interface} needs linear ports")));
        }
        let shape = (interface.output_dim(), interface.input_dim());
        if h.shape() != shape {
            return Err(Error::Value(format!("H is {}x{}, expected {}x{}", h.nrows(), h.ncols(), shape.0, shape.1)));
        }
        Ok(LinearMap { interface, h })
    }

    pub fn interface(&self) -> &Interface {
        &self.interface
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.h
    }
}

/// A memoryless function viewed as a machine whose state is the last input:
/// update replaces the state with the input, readout applies the function.
pub fn embed_function(h: &FiniteFunction) -> MooreMachine {
    let space = &h.input_space;
    let labels_of = |x: Vec<usize>| -> Vec<String> {
        x.iter().zip(&h.interface.inputs).map(|(&v, p)| p.as_finite().expect("finite").labels[v].clone()).collect()
    };
    let states = space
        .iter()
        .map(|x| {
            let ls = labels_of(x);
            if ls.len() == 1 {
                ls[0].clone()
            } else {
                tuple_label(ls)
            }
        })
        .collect();
    let n = space.size();
    let update = (0..n).flat_map(|_| 0..n).collect();
    MooreMachine::new(h.interface.clone(), states, 0, update, h.table.clone()).expect("embedding is total")
}

/// The linear embedding `(ℝᵏ, A = 0, B = I, C = H)`.
pub fn embed_linear(h: &LinearMap) -> LtiSystem {
    let k = h.interface.input_dim();
    LtiSystem::new(h.interface.clone(), DMatrix::zeros(k, k), DMatrix::identity(k, k), h.h.clone())
        .expect("embedding has consistent shapes")
}

/// Composite of memoryless functions over a loop-free wiring, evaluated in
/// dependency order.
pub fn compose_functions(d: &WiringDiagram, fns: &[FiniteFunction]) -> Result<FiniteFunction> {
    check_inhabitants(d, fns.iter().map(|f| &f.interface))?;
    let order = d
        .topological_order()
        .ok_or_else(|| Error::Unsupported("memoryless functions cannot interpret a feedback loop".into()))?;
    if !d.outer.all_finite() {
        return Err(Error::Type("finite composite needs finite outer ports".into()));
    }
    let space = d.outer.input_space().expect("finite");
    let mut table = Vec::with_capacity(space.size());
    for y in space.iter() {
        let mut outs: Vec<Option<&[usize]>> = vec![None; fns.len()];
        for &b in &order {
            let x: Vec<usize> = d.input_sources[b]
                .iter()
                .map(|&src| match src {
                    PortRef::OuterInput(i) => y[i],
                    PortRef::InnerOutput(c, q) => outs[c].expect("dependency order")[q],
                    _ => unreachable!("validated diagram"),
                })
                .collect();
            outs[b] = Some(fns[b].eval(&x)?);
        }
        table.push(
            d.output_sources
                .iter()
                .map(|&src| match src {
                    PortRef::InnerOutput(c, q) => outs[c].expect("every box evaluated")[q],
                    _ => unreachable!("validated diagram"),
                })
                .collect(),
        );
    }
    FiniteFunction::new(d.outer.clone(), table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wiring::PortType;
    use nalgebra::dmatrix;

    fn bool_box(name: &str, n_in: usize, n_out: usize) -> Interface {
        Interface::new(name, vec![PortType::booleans(); n_in], vec![PortType::booleans(); n_out])
    }

    #[test]
    fn identity_echoes_with_delay() {
        let id = FiniteFunction::from_fn(bool_box("Id", 1, 1), |x| x.to_vec()).unwrap();
        let m = embed_function(&id);
        assert_eq!(m.num_states(), 2);
        for s in 0..2 {
            for x in 0..2 {
                let t = m.update(s, &[x]).unwrap();
                assert_eq!(m.readout(t), &[x]);
            }
        }
    }

    #[test]
    fn linear_embedding_shapes() {
        let iface = Interface::new("L", vec![PortType::real(), PortType::real()], vec![PortType::real()]);
        let l = embed_linear(&LinearMap::new(iface, dmatrix![1.0, 1.0]).unwrap());
        assert_eq!(l.a(), &DMatrix::zeros(2, 2));
        assert_eq!(l.b(), &DMatrix::identity(2, 2));
        assert_eq!(l.c(), &dmatrix![1.0, 1.0]);
    }

    #[test]
    fn tensor_then_embed_equals_embed_then_tensor() {
        let not = FiniteFunction::from_fn(bool_box("N", 1, 1), |x| vec![1 - x[0]]).unwrap();
        let and = FiniteFunction::from_fn(bool_box("A", 2, 1), |x| vec![x[0] & x[1]]).unwrap();
        let lhs = embed_function(&not.tensor(&and));
        let rhs = super::super::moore::moore_tensor(&embed_function(&not), &embed_function(&and));
        assert!(lhs.table_eq(&rhs));
    }

    #[test]
    fn feedback_is_rejected() {
        let not = FiniteFunction::from_fn(bool_box("N", 1, 1), |x| vec![1 - x[0]]).unwrap();
        let d = WiringDiagram::new(
            vec![not.interface().clone()],
            bool_box("O", 0, 1),
            vec![vec![PortRef::InnerOutput(0, 0)]],
            vec![PortRef::InnerOutput(0, 0)],
        );
        assert!(matches!(compose_functions(&d, &[not]), Err(Error::Unsupported(_))));
    }

    #[test]
    fn serial_composition() {
        let not = FiniteFunction::from_fn(bool_box("N", 1, 1), |x| vec![1 - x[0]]).unwrap();
        let d = WiringDiagram::new(
            vec![not.interface().clone(), not.interface().clone()],
            bool_box("O", 1, 1),
            vec![vec![PortRef::OuterInput(0)], vec![PortRef::InnerOutput(0, 0)]],
            vec![PortRef::InnerOutput(1, 0)],
        );
        let c = compose_functions(&d, &[not.clone(), not]).unwrap();
        assert_eq!(c.table(), &[vec![0], vec![1]]);
    }
}
