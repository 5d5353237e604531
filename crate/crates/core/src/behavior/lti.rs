use nalgebra::{DMatrix, DVector};

use super::moore::check_inhabitants;
use crate::error::{Error, Result};
use crate::wiring::{wiring_to_matrices, Interface, PortRef, WiringDiagram};

/// A linear time-invariant system `s' = A s + B x`, `y = C s`.
#[derive(Debug, Clone, PartialEq)]
pub struct LtiSystem {
    interface: Interface,
    a: DMatrix<f64>,
    b: DMatrix<f64>,
    c: DMatrix<f64>,
}

impl LtiSystem {
    pub fn new(interface: Interface, a: DMatrix<f64>, b: DMatrix<f64>, c: DMatrix<f64>) -> Result<Self> {
        if !interface.all_linear() {
            return Err(Error::Type(format!("LTI system on {interface} needs linear ports")));
        }
        let n = a.nrows();
        let (k, l) = (interface.input_dim(), interface.output_dim());
        let check = |what: &str, m: &DMatrix<f64>, r: usize, c: usize| {
            if m.shape() == (r, c) {
                Ok(())
            } else {
                Err(Error::Value(format!("{what} is {}x{}, expected {r}x{c}", m.nrows(), m.ncols())))
            }
        };
        check("A", &a, n, n)?;
        check("B", &b, n, k)?;
        check("C", &c, l, n)?;
        Ok(LtiSystem { interface, a, b, c })
    }

    /// The zero-dimensional system on the unit box.
    pub fn trivial() -> Self {
        Self::zero(Interface::unit(), 0).expect("unit box is linear")
    }

    pub fn zero(interface: Interface, n: usize) -> Result<Self> {
        let (k, l) = (interface.input_dim(), interface.output_dim());
        Self::new(interface, DMatrix::zeros(n, n), DMatrix::zeros(n, k), DMatrix::zeros(l, n))
    }

    pub fn interface(&self) -> &Interface {
        &self.interface
    }

    pub fn state_dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn b(&self) -> &DMatrix<f64> {
        &self.b
    }

    pub fn c(&self) -> &DMatrix<f64> {
        &self.c
    }

    pub fn update(&self, s: &DVector<f64>, x: &DVector<f64>) -> Result<DVector<f64>> {
        dim_check(self.state_dim(), s.len())?;
        dim_check(self.interface.input_dim(), x.len())?;
        Ok(&self.a * s + &self.b * x)
    }

    pub fn readout(&self, s: &DVector<f64>) -> Result<DVector<f64>> {
        dim_check(self.state_dim(), s.len())?;
        Ok(&self.c * s)
    }

    /// Largest absolute entry difference over A, B and C; `None` when shapes
    /// or ports differ.
    pub fn max_abs_diff(&self, other: &LtiSystem) -> Option<f64> {
        if !self.interface.same_ports(&other.interface) || self.state_dim() != other.state_dim() {
            return None;
        }
        let d = |x: &DMatrix<f64>, y: &DMatrix<f64>| (x - y).abs().max();
        Some(d(&self.a, &other.a).max(d(&self.b, &other.b)).max(d(&self.c, &other.c)))
    }

    pub fn approx_eq(&self, other: &LtiSystem, tol: f64) -> bool {
        self.max_abs_diff(other).is_some_and(|d| d <= tol)
    }

    pub fn renamed(mut self, name: impl Into<String>) -> Self {
        self.interface.name = name.into();
        self
    }
}

fn dim_check(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::Dimension { expected, got })
    }
}

fn block_diag(x: &DMatrix<f64>, y: &DMatrix<f64>) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(x.nrows() + y.nrows(), x.ncols() + y.ncols());
    m.view_mut((0, 0), x.shape()).copy_from(x);
    m.view_mut((x.nrows(), x.ncols()), y.shape()).copy_from(y);
    m
}

/// Parallel composite: block-diagonal A, B and C.
pub fn lti_tensor(l1: &LtiSystem, l2: &LtiSystem) -> LtiSystem {
    LtiSystem {
        interface: l1.interface.tensor(&l2.interface),
        a: block_diag(&l1.a, &l2.a),
        b: block_diag(&l1.b, &l2.b),
        c: block_diag(&l1.c, &l2.c),
    }
}

/// Composite over a linear wiring: `(A + B·Af·C, B·Bf, Cf·C)` of the tensored
/// components.
pub fn lti_apply(d: &WiringDiagram, systems: &[LtiSystem]) -> Result<LtiSystem> {
    check_inhabitants(d, systems.iter().map(|s| &s.interface))?;
    let t = systems.iter().fold(LtiSystem::trivial(), |acc, s| lti_tensor(&acc, s));
    let m = wiring_to_matrices(d)?;
    LtiSystem::new(d.outer.clone(), &t.a + &t.b * &m.af * &t.c, &t.b * &m.bf, &m.cf * &t.c)
}

/// Anything that can be stepped as a Moore machine over real vectors.
pub trait VectorDynamics {
    fn interface(&self) -> &Interface;
    fn state_dim(&self) -> usize;
    fn update(&self, s: &DVector<f64>, x: &DVector<f64>) -> Result<DVector<f64>>;
    fn readout(&self, s: &DVector<f64>) -> Result<DVector<f64>>;
}

/// Pointwise evaluation of an LTI system as a general Moore machine.
#[derive(Debug, Clone, Copy)]
pub struct LinearEvaluator<'a> {
    system: &'a LtiSystem,
}

pub fn lti_to_moore(l: &LtiSystem) -> LinearEvaluator<'_> {
    LinearEvaluator { system: l }
}

impl VectorDynamics for LinearEvaluator<'_> {
    fn interface(&self) -> &Interface {
        &self.system.interface
    }

    fn state_dim(&self) -> usize {
        self.system.state_dim()
    }

    fn update(&self, s: &DVector<f64>, x: &DVector<f64>) -> Result<DVector<f64>> {
        self.system.update(s, x)
    }

    fn readout(&self, s: &DVector<f64>) -> Result<DVector<f64>> {
        self.system.readout(s)
    }
}

/// The general composite of vector-valued machines, routing values port by
/// port: `u'(y, s) = u(f_in(y, r(s)), s)` and `r' = f_out ∘ r`. Makes no use
/// of linearity.
pub struct WiredDynamics<'a> {
    diagram: &'a WiringDiagram,
    parts: Vec<Box<dyn VectorDynamics + 'a>>,
    state_offsets: Vec<usize>,
}

impl<'a> WiredDynamics<'a> {
    pub fn new(diagram: &'a WiringDiagram, parts: Vec<Box<dyn VectorDynamics + 'a>>) -> Result<Self> {
        check_inhabitants(diagram, parts.iter().map(|p| p.interface()))?;
        let mut acc = 0;
        let state_offsets = parts
            .iter()
            .map(|p| {
                let o = acc;
                acc += p.state_dim();
                o
            })
            .collect();
        Ok(WiredDynamics { diagram, parts, state_offsets })
    }

    fn split(&self, s: &DVector<f64>) -> Vec<DVector<f64>> {
        self.parts.iter().zip(&self.state_offsets).map(|(p, &o)| s.rows(o, p.state_dim()).into_owned()).collect()
    }

    /// Value on every output port of every inner box.
    fn port_values(&self, states: &[DVector<f64>]) -> Result<Vec<Vec<DVector<f64>>>> {
        self.parts.iter().zip(states).map(|(p, s)| Ok(slice_ports(&p.readout(s)?, &p.interface().outputs))).collect()
    }
}

fn slice_ports(v: &DVector<f64>, ports: &[crate::wiring::PortType]) -> Vec<DVector<f64>> {
    let mut off = 0;
    ports
        .iter()
        .map(|p| {
            let r = v.rows(off, p.dim()).into_owned();
            off += p.dim();
            r
        })
        .collect()
}

fn concat(parts: &[DVector<f64>]) -> DVector<f64> {
    DVector::from_iterator(parts.iter().map(|v| v.len()).sum(), parts.iter().flat_map(|v| v.iter().copied()))
}

impl VectorDynamics for WiredDynamics<'_> {
    fn interface(&self) -> &Interface {
        &self.diagram.outer
    }

    fn state_dim(&self) -> usize {
        self.parts.iter().map(|p| p.state_dim()).sum()
    }

    fn update(&self, s: &DVector<f64>, x: &DVector<f64>) -> Result<DVector<f64>> {
        dim_check(self.state_dim(), s.len())?;
        dim_check(self.diagram.outer.input_dim(), x.len())?;
        let states = self.split(s);
        let outs = self.port_values(&states)?;
        let ys = slice_ports(x, &self.diagram.outer.inputs);
        let mut next = Vec::with_capacity(self.parts.len());
        for (b, p) in self.parts.iter().enumerate() {
            let inputs: Vec<DVector<f64>> = self.diagram.input_sources[b]
                .iter()
                .map(|&src| match src {
                    PortRef::OuterInput(i) => ys[i].clone(),
                    PortRef::InnerOutput(c, q) => outs[c][q].clone(),
                    _ => unreachable!("validated diagram"),
                })
                .collect();
            next.push(p.update(&states[b], &concat(&inputs))?);
        }
        Ok(concat(&next))
    }

    fn readout(&self, s: &DVector<f64>) -> Result<DVector<f64>> {
        dim_check(self.state_dim(), s.len())?;
        let outs = self.port_values(&self.split(s))?;
        let ys: Vec<DVector<f64>> = self
            .diagram
            .output_sources
            .iter()
            .map(|&src| match src {
                PortRef::InnerOutput(c, q) => outs[c][q].clone(),
                _ => unreachable!("validated diagram"),
            })
            .collect();
        Ok(concat(&ys))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wiring::{identity_diagram, PortType};
    use nalgebra::dmatrix;

    fn scalar_box(name: &str, n_in: usize, n_out: usize) -> Interface {
        Interface::new(name, vec![PortType::real(); n_in], vec![PortType::real(); n_out])
    }

    #[test]
    fn rejects_bad_shapes() {
        let x = scalar_box("X", 1, 1);
        assert!(LtiSystem::new(x.clone(), dmatrix![1.0], dmatrix![1.0, 2.0], dmatrix![1.0]).is_err());
        let fin = Interface::new("F", vec![PortType::booleans()], vec![]);
        assert!(matches!(LtiSystem::zero(fin, 1), Err(Error::Type(_))));
    }

    #[test]
    fn tensor_is_block_diagonal() {
        let x = scalar_box("X", 1, 1);
        let l1 = LtiSystem::new(x.clone(), dmatrix![2.0], dmatrix![3.0], dmatrix![4.0]).unwrap();
        let l2 = LtiSystem::new(x, dmatrix![5.0], dmatrix![6.0], dmatrix![7.0]).unwrap();
        let t = lti_tensor(&l1, &l2);
        assert_eq!(t.a(), &dmatrix![2.0, 0.0; 0.0, 5.0]);
        assert_eq!(t.b(), &dmatrix![3.0, 0.0; 0.0, 6.0]);
        assert_eq!(t.c(), &dmatrix![4.0, 0.0; 0.0, 7.0]);
        assert_eq!(lti_tensor(&l1, &LtiSystem::trivial()), l1);
    }

    #[test]
    fn identity_wiring_keeps_system() {
        let x = Interface::new("X", vec![PortType::Lin(2)], vec![PortType::real()]);
        let l = LtiSystem::new(
            x.clone(),
            dmatrix![0.5, 1.0; -1.0, 0.25],
            dmatrix![1.0, 0.0; 2.0, 3.0],
            dmatrix![1.0, -1.0],
        )
        .unwrap();
        let c = lti_apply(&identity_diagram(&x), std::slice::from_ref(&l)).unwrap();
        assert!(c.approx_eq(&l, 1e-12));
    }

    #[test]
    fn zero_system_evaluates_to_zero() {
        let l = LtiSystem::zero(scalar_box("Z", 2, 1), 3).unwrap();
        let e = lti_to_moore(&l);
        let s = DVector::from_vec(vec![1.0, 2.0, 3.0]);
        let x = DVector::from_vec(vec![4.0, 5.0]);
        assert_eq!(e.update(&s, &x).unwrap(), DVector::zeros(3));
        assert_eq!(e.readout(&s).unwrap(), DVector::zeros(1));
        assert!(matches!(e.update(&x, &x), Err(Error::Dimension { .. })));
    }

    #[test]
    fn feedback_loop_both_routes_agree() {
        // integrator with its output fed back negatively through a gain box
        let plant = LtiSystem::new(scalar_box("P", 2, 1), dmatrix![1.0], dmatrix![1.0, 1.0], dmatrix![1.0]).unwrap();
        let gain = LtiSystem::new(scalar_box("K", 1, 1), dmatrix![0.0], dmatrix![1.0], dmatrix![-0.5]).unwrap();
        let d = WiringDiagram::new(
            vec![plant.interface().clone(), gain.interface().clone()],
            scalar_box("O", 1, 1),
            vec![vec![PortRef::OuterInput(0), PortRef::InnerOutput(1, 0)], vec![PortRef::InnerOutput(0, 0)]],
            vec![PortRef::InnerOutput(0, 0)],
        );
        let comp = lti_apply(&d, &[plant.clone(), gain.clone()]).unwrap();
        let wired =
            WiredDynamics::new(&d, vec![Box::new(lti_to_moore(&plant)), Box::new(lti_to_moore(&gain))]).unwrap();
        let s = DVector::from_vec(vec![0.3, -1.2]);
        let x = DVector::from_vec(vec![2.0]);
        let diff = comp.update(&s, &x).unwrap() - wired.update(&s, &x).unwrap();
        assert!(diff.amax() < 1e-12);
        assert_eq!(comp.readout(&s).unwrap(), wired.readout(&s).unwrap());
    }
}
