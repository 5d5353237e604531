use nalgebra::DVector;

use super::lti::LtiSystem;
use super::moore::MooreMachine;
use crate::error::{Error, Result};

/// A run of a machine: `T` inputs, `T + 1` states and `T + 1` outputs with
/// `outputs[t] = r(states[t])`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<S, V> {
    pub inputs: Vec<V>,
    pub states: Vec<S>,
    pub outputs: Vec<V>,
}

pub type FiniteTrajectory = Trajectory<usize, Vec<usize>>;
pub type LinearTrajectory = Trajectory<DVector<f64>, DVector<f64>>;

impl<S, V> Trajectory<S, V> {
    /// Number of steps taken.
    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }
}

pub trait Simulate {
    type State;
    type Value;

    fn simulate(&self, s0: Self::State, inputs: &[Self::Value]) -> Result<Trajectory<Self::State, Self::Value>>;
}

impl Simulate for MooreMachine {
    type State = usize;
    type Value = Vec<usize>;

    fn simulate(&self, s0: usize, inputs: &[Vec<usize>]) -> Result<FiniteTrajectory> {
        if s0 >= self.num_states() {
            return Err(Error::OutOfRange(format!("state {s0} of {}", self.num_states())));
        }
        let mut states = vec![s0];
        let mut s = s0;
        for x in inputs {
            s = self.update(s, x).map_err(|e| Error::Type(format!("step {}: {e}", states.len() - 1)))?;
            states.push(s);
        }
        let outputs = states.iter().map(|&s| self.readout(s).to_vec()).collect();
        Ok(Trajectory { inputs: inputs.to_vec(), states, outputs })
    }
}

impl Simulate for LtiSystem {
    type State = DVector<f64>;
    type Value = DVector<f64>;

    fn simulate(&self, s0: DVector<f64>, inputs: &[DVector<f64>]) -> Result<LinearTrajectory> {
        let mut outputs = vec![self.readout(&s0)?];
        let mut states = vec![s0];
        for x in inputs {
            let next = self.update(states.last().expect("non-empty"), x)?;
            outputs.push(self.readout(&next)?);
            states.push(next);
        }
        Ok(Trajectory { inputs: inputs.to_vec(), states, outputs })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::behavior::{embed_function, FiniteFunction};
    use crate::wiring::{Interface, PortType};
    use nalgebra::dmatrix;

    #[test]
    fn empty_input_gives_single_point() {
        let m = MooreMachine::trivial();
        let t = m.simulate(0, &[]).unwrap();
        assert_eq!(t.states, vec![0]);
        assert_eq!(t.outputs, vec![Vec::<usize>::new()]);
        assert!(t.is_empty());
    }

    #[test]
    fn embedded_not_echoes_with_delay() {
        let b = Interface::new("N", vec![PortType::booleans()], vec![PortType::booleans()]);
        let m = embed_function(&FiniteFunction::from_fn(b, |x| vec![1 - x[0]]).unwrap());
        let t = m.simulate(0, &[vec![0], vec![1], vec![0]]).unwrap();
        // h(s0), h(x0), h(x1), h(x2)
        assert_eq!(t.outputs, vec![vec![1], vec![1], vec![0], vec![1]]);
        assert!(m.simulate(0, &[vec![2]]).is_err());
        assert!(m.simulate(5, &[]).is_err());
    }

    #[test]
    fn linear_trajectory_steps() {
        let b = Interface::new("X", vec![PortType::real()], vec![PortType::real()]);
        let l = LtiSystem::new(b, dmatrix![0.5], dmatrix![1.0], dmatrix![2.0]).unwrap();
        let one = DVector::from_element(1, 1.0);
        let t = l.simulate(DVector::zeros(1), &[one.clone(), one]).unwrap();
        assert_eq!(t.states.len(), 3);
        assert_eq!(t.states[2][0], 1.5);
        assert_eq!(t.outputs[2][0], 3.0);
    }
}
