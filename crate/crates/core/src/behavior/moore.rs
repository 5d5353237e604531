use crate::error::{mismatch, Error, Result};
use crate::space::TupleSpace;
use crate::wiring::{Interface, PortRef, WiringDiagram};

/// A deterministic Moore machine over finite ports, stored as explicit
/// update and readout tables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MooreMachine {
    interface: Interface,
    states: Vec<String>,
    initial: usize,
    input_space: TupleSpace,
    /// Next state, indexed by `state * input_space.size() + input index`.
    update: Vec<usize>,
    /// Output tuple of every state.
    readout: Vec<Vec<usize>>,
}

impl MooreMachine {
    /// Builds a machine from complete tables, checking totality and that every
    /// value lies in its carrier.
    pub fn new(
        interface: Interface,
        states: Vec<String>,
        initial: usize,
        update: Vec<usize>,
        readout: Vec<Vec<usize>>,
    ) -> Result<Self> {
        let input_space = interface
            .input_space()
            .filter(|_| interface.all_finite())
            .ok_or_else(|| Error::Type(format!("Moore machine on {interface} needs finite ports")))?;
        let output_space = interface.output_space().expect("all ports finite");
        let n = states.len();
        if n == 0 {
            return Err(Error::Value("a Moore machine needs at least one state".into()));
        }
        if initial >= n {
            return Err(Error::OutOfRange(format!("initial state {initial} of {n}")));
        }
        if update.len() != n * input_space.size() {
            return Err(Error::Dimension { expected: n * input_space.size(), got: update.len() });
        }
        if let Some(bad) = update.iter().find(|&&s| s >= n) {
            return Err(Error::OutOfRange(format!("update targets state {bad} of {n}")));
        }
        if readout.len() != n {
            return Err(Error::Dimension { expected: n, got: readout.len() });
        }
        for out in &readout {
            output_space.encode(out)?;
        }
        Ok(MooreMachine { interface, states, initial, input_space, update, readout })
    }

    /// Tabulates update and readout functions over the full state and input
    /// space.
    pub fn from_fn(
        interface: Interface,
        states: Vec<String>,
        initial: usize,
        update: impl Fn(usize, &[usize]) -> usize,
        readout: impl Fn(usize) -> Vec<usize>,
    ) -> Result<Self> {
        let space = interface
            .input_space()
            .ok_or_else(|| Error::Type(format!("Moore machine on {interface} needs finite ports")))?;
        let table =
            (0..states.len()).flat_map(|s| space.iter().map(move |x| (s, x))).map(|(s, x)| update(s, &x)).collect();
        let outs = (0..states.len()).map(readout).collect();
        Self::new(interface, states, initial, table, outs)
    }

    /// The machine with one state and no ports: the unit of [`moore_tensor`].
    pub fn trivial() -> Self {
        Self::new(Interface::unit(), vec!["*".into()], 0, vec![0], vec![vec![]]).expect("trivial machine")
    }

    pub fn interface(&self) -> &Interface {
        &self.interface
    }

    pub fn states(&self) -> &[String] {
        &self.states
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn initial(&self) -> usize {
        self.initial
    }

    pub fn with_initial(mut self, initial: usize) -> Result<Self> {
        if initial >= self.states.len() {
            return Err(Error::OutOfRange(format!("initial state {initial} of {}", self.states.len())));
        }
        self.initial = initial;
        Ok(self)
    }

    pub fn state_index(&self, label: &str) -> Option<usize> {
        self.states.iter().position(|s| s == label)
    }

    pub fn input_space(&self) -> &TupleSpace {
        &self.input_space
    }

    pub fn num_inputs(&self) -> usize {
        self.input_space.size()
    }

    /// Next state for an input given by its index in [`Self::input_space`].
    pub fn step(&self, state: usize, input_index: usize) -> usize {
        self.update[state * self.input_space.size() + input_index]
    }

    pub fn update(&self, state: usize, input: &[usize]) -> Result<usize> {
        if state >= self.states.len() {
            return Err(Error::OutOfRange(format!("state {state} of {}", self.states.len())));
        }
        Ok(self.step(state, self.input_space.encode(input)?))
    }

    pub fn readout(&self, state: usize) -> &[usize] {
        &self.readout[state]
    }

    pub fn update_table(&self) -> &[usize] {
        &self.update
    }

    pub fn readout_table(&self) -> &[Vec<usize>] {
        &self.readout
    }

    /// Equal ports, initial state and tables; state labels are ignored.
    pub fn table_eq(&self, other: &MooreMachine) -> bool {
        self.interface.same_ports(&other.interface)
            && self.states.len() == other.states.len()
            && self.initial == other.initial
            && self.update == other.update
            && self.readout == other.readout
    }

    /// States reachable from the initial state.
    pub fn reachable(&self) -> Vec<usize> {
        let mut seen = vec![false; self.states.len()];
        let mut stack = vec![self.initial];
        seen[self.initial] = true;
        let mut out = Vec::new();
        while let Some(s) = stack.pop() {
            out.push(s);
            for x in 0..self.num_inputs() {
                let t = self.step(s, x);
                if !seen[t] {
                    seen[t] = true;
                    stack.push(t);
                }
            }
        }
        out.sort_unstable();
        out
    }

    pub fn renamed(mut self, name: impl Into<String>) -> Self {
        self.interface.name = name.into();
        self
    }
}

pub(crate) fn tuple_label(parts: impl IntoIterator<Item = impl AsRef<str>>) -> String {
    let parts: Vec<String> = parts.into_iter().map(|p| p.as_ref().to_string()).collect();
    format!("({})", parts.join(","))
}

/// Parallel composite: product state set, componentwise update and readout.
pub fn moore_tensor(m1: &MooreMachine, m2: &MooreMachine) -> MooreMachine {
    let interface = m1.interface.tensor(&m2.interface);
    let n2 = m2.num_states();
    let states = m1.states.iter().flat_map(|s| m2.states.iter().map(move |t| tuple_label([s, t]))).collect();
    let (k1, k2) = (m1.num_inputs(), m2.num_inputs());
    let mut update = Vec::with_capacity(m1.num_states() * n2 * k1 * k2);
    let mut readout = Vec::with_capacity(m1.num_states() * n2);
    for s in 0..m1.num_states() {
        for t in 0..n2 {
            // input index of the tensor is x1 * k2 + x2 (first ports most significant)
            for x1 in 0..k1 {
                for x2 in 0..k2 {
                    update.push(m1.step(s, x1) * n2 + m2.step(t, x2));
                }
            }
            let mut out = m1.readout(s).to_vec();
            out.extend_from_slice(m2.readout(t));
            readout.push(out);
        }
    }
    MooreMachine::new(interface, states, m1.initial * n2 + m2.initial, update, readout)
        .expect("tensor of well-formed machines is well-formed")
}

pub(crate) fn check_inhabitants<'a>(
    d: &WiringDiagram,
    interfaces: impl ExactSizeIterator<Item = &'a Interface>,
) -> Result<()> {
    if interfaces.len() != d.inner.len() {
        return Err(mismatch(format!("{} systems for {} inner boxes", interfaces.len(), d.inner.len())));
    }
    for (b, (slot, iface)) in d.inner.iter().zip(interfaces).enumerate() {
        if !slot.same_ports(iface) {
            return Err(mismatch(format!("inner box #{b} is {slot} but its system lives on {iface}")));
        }
    }
    let violations = crate::wiring::validate_diagram(d);
    if let Some(v) = violations.first() {
        return Err(Error::InvalidDiagram(v.to_string()));
    }
    Ok(())
}

/// The composite machine of a wiring: state set is the product of component
/// state sets; each step resolves every inner input from the outer inputs and
/// the current component readouts, then steps all components at once.
pub fn moore_apply(d: &WiringDiagram, machines: &[MooreMachine]) -> Result<MooreMachine> {
    check_inhabitants(d, machines.iter().map(|m| &m.interface))?;
    if !d.outer.all_finite() {
        return Err(Error::Type("Moore composition needs finite outer ports".into()));
    }
    let state_space = TupleSpace::new(machines.iter().map(MooreMachine::num_states).collect());
    let outer_in = d.outer.input_space().expect("finite outer");
    let states: Vec<String> = if machines.len() == 1 {
        machines[0].states.clone()
    } else {
        state_space.iter().map(|st| tuple_label(st.iter().zip(machines).map(|(&s, m)| m.states[s].as_str()))).collect()
    };
    let initial =
        state_space.encode(&machines.iter().map(|m| m.initial).collect::<Vec<_>>()).expect("initial states in range");

    let mut update = Vec::with_capacity(state_space.size() * outer_in.size());
    let mut readout = Vec::with_capacity(state_space.size());
    let mut inner_inputs: Vec<Vec<usize>> = machines.iter().map(|m| vec![0; m.interface.inputs.len()]).collect();
    let mut next = vec![0usize; machines.len()];
    for comp in state_space.iter() {
        let outs: Vec<&[usize]> = comp.iter().zip(machines).map(|(&s, m)| m.readout(s)).collect();
        let read = |src: PortRef, y: &[usize]| match src {
            PortRef::OuterInput(i) => y[i],
            PortRef::InnerOutput(b, p) => outs[b][p],
            _ => unreachable!("validated diagram"),
        };
        for y in outer_in.iter() {
            for (b, m) in machines.iter().enumerate() {
                for (p, &src) in d.input_sources[b].iter().enumerate() {
                    inner_inputs[b][p] = read(src, &y);
                }
                next[b] = m.update(comp[b], &inner_inputs[b])?;
            }
            update.push(state_space.encode(&next)?);
        }
        readout.push(d.output_sources.iter().map(|&src| read(src, &[])).collect());
    }
    MooreMachine::new(d.outer.clone(), states, initial, update, readout)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wiring::{identity_diagram, PortType};

    fn bool_box(name: &str, n_in: usize, n_out: usize) -> Interface {
        Interface::new(name, vec![PortType::booleans(); n_in], vec![PortType::booleans(); n_out])
    }

    /// Flips its state on input 1; outputs the state.
    fn toggle() -> MooreMachine {
        MooreMachine::from_fn(bool_box("T", 1, 1), vec!["a".into(), "b".into()], 0, |s, x| s ^ x[0], |s| vec![s])
            .unwrap()
    }

    #[test]
    fn rejects_partial_tables() {
        let err = MooreMachine::new(bool_box("T", 1, 1), vec!["a".into()], 0, vec![0], vec![vec![0]]);
        assert!(matches!(err, Err(Error::Dimension { .. })));
        let err = MooreMachine::new(bool_box("T", 0, 1), vec!["a".into()], 0, vec![0], vec![vec![2]]);
        assert!(err.is_err());
        let lin = Interface::new("L", vec![PortType::real()], vec![]);
        assert!(matches!(MooreMachine::new(lin, vec!["a".into()], 0, vec![], vec![vec![]]), Err(Error::Type(_))));
    }

    #[test]
    fn tensor_with_trivial_machine() {
        let m = toggle();
        let t = moore_tensor(&m, &MooreMachine::trivial());
        assert!(t.table_eq(&m));
        let t = moore_tensor(&MooreMachine::trivial(), &m);
        assert!(t.table_eq(&m));
    }

    #[test]
    fn tensor_state_count_and_componentwise_update() {
        let m1 = toggle();
        let m2 = MooreMachine::from_fn(
            Interface::new("C", vec![PortType::booleans()], vec![PortType::finite("T3", &["0", "1", "2"])]),
            vec!["0".into(), "1".into(), "2".into()],
            0,
            |s, x| (s + x[0]) % 3,
            |s| vec![s],
        )
        .unwrap();
        let t = moore_tensor(&m1, &m2);
        assert_eq!(t.num_states(), 6);
        for s in 0..2 {
            for u in 0..3 {
                for x in 0..2 {
                    for y in 0..2 {
                        let st = s * 3 + u;
                        let expect = m1.update(s, &[x]).unwrap() * 3 + m2.update(u, &[y]).unwrap();
                        assert_eq!(t.update(st, &[x, y]).unwrap(), expect);
                    }
                }
                assert_eq!(t.readout(s * 3 + u), &[s, u]);
            }
        }
    }

    #[test]
    fn identity_wiring_keeps_machine() {
        let m = toggle();
        let c = moore_apply(&identity_diagram(m.interface()), std::slice::from_ref(&m)).unwrap();
        assert!(c.table_eq(&m));
        assert_eq!(c.states(), m.states());
    }

    #[test]
    fn apply_checks_inhabitants() {
        let m = toggle();
        let other = identity_diagram(&bool_box("Z", 2, 1));
        assert!(matches!(moore_apply(&other, std::slice::from_ref(&m)), Err(Error::InterfaceMismatch(_))));
        assert!(moore_apply(&identity_diagram(m.interface()), &[]).is_err());
    }

    #[test]
    fn feedback_loop_reads_previous_readout() {
        // toggle fed by its own output: a → (reads 0) a → ... stays at a; from b flips forever
        let m = toggle();
        let outer = bool_box("O", 0, 1);
        let d = WiringDiagram::new(
            vec![m.interface().clone()],
            outer,
            vec![vec![PortRef::InnerOutput(0, 0)]],
            vec![PortRef::InnerOutput(0, 0)],
        );
        let c = moore_apply(&d, &[m]).unwrap();
        assert_eq!(c.update(0, &[]).unwrap(), 0);
        assert_eq!(c.update(1, &[]).unwrap(), 0);
    }

    #[test]
    fn reachable_states() {
        let m = MooreMachine::from_fn(
            bool_box("R", 1, 1),
            vec!["a".into(), "b".into(), "c".into()],
            0,
            |s, x| if s == 2 { 2 } else { x[0] },
            |s| vec![s % 2],
        )
        .unwrap();
        assert_eq!(m.reachable(), vec![0, 1]);
    }
}
