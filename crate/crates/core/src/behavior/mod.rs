//! Behavior algebras on wiring diagrams: Moore machines over finite ports and
//! LTI systems over linear ports, with their composite-system constructions.

mod function;
mod lti;
mod moore;
mod simulate;

pub use function::{compose_functions, embed_function, embed_linear, FiniteFunction, LinearMap};
pub use lti::{lti_apply, lti_tensor, lti_to_moore, LinearEvaluator, LtiSystem, VectorDynamics, WiredDynamics};
pub(crate) use moore::check_inhabitants;
pub use moore::{moore_apply, moore_tensor, MooreMachine};
pub use simulate::{FiniteTrajectory, LinearTrajectory, Simulate, Trajectory};

use crate::error::{Error, Result};
use crate::wiring::{Interface, WiringDiagram};

/// Any inhabitant a box may be given.
#[derive(Debug, Clone, PartialEq)]
pub enum Behavior {
    Moore(MooreMachine),
    Lti(LtiSystem),
    Function(FiniteFunction),
    Linear(LinearMap),
}

/// A system that can be stepped: what composites evaluate to.
#[derive(Debug, Clone, PartialEq)]
pub enum System {
    Moore(MooreMachine),
    Lti(LtiSystem),
}

impl Behavior {
    pub fn interface(&self) -> &Interface {
        match self {
            Behavior::Moore(m) => m.interface(),
            Behavior::Lti(l) => l.interface(),
            Behavior::Function(f) => f.interface(),
            Behavior::Linear(h) => h.interface(),
        }
    }

    pub fn is_memoryless(&self) -> bool {
        matches!(self, Behavior::Function(_) | Behavior::Linear(_))
    }

    /// Functions are embedded as machines remembering their last input.
    pub fn to_system(&self) -> System {
        match self {
            Behavior::Moore(m) => System::Moore(m.clone()),
            Behavior::Lti(l) => System::Lti(l.clone()),
            Behavior::Function(f) => System::Moore(embed_function(f)),
            Behavior::Linear(h) => System::Lti(embed_linear(h)),
        }
    }
}

impl System {
    pub fn interface(&self) -> &Interface {
        match self {
            System::Moore(m) => m.interface(),
            System::Lti(l) => l.interface(),
        }
    }

    pub fn as_moore(&self) -> Option<&MooreMachine> {
        match self {
            System::Moore(m) => Some(m),
            System::Lti(_) => None,
        }
    }

    pub fn as_lti(&self) -> Option<&LtiSystem> {
        match self {
            System::Lti(l) => Some(l),
            System::Moore(_) => None,
        }
    }
}

/// Composite of arbitrary behaviors: dispatches to [`moore_apply`] when every
/// port is finite and to [`lti_apply`] when every port is linear.
pub fn compose_systems(d: &WiringDiagram, parts: &[System]) -> Result<System> {
    let machines: Option<Vec<MooreMachine>> = parts.iter().map(|p| p.as_moore().cloned()).collect();
    if let Some(ms) = machines {
        return moore_apply(d, &ms).map(System::Moore);
    }
    let systems: Option<Vec<LtiSystem>> = parts.iter().map(|p| p.as_lti().cloned()).collect();
    if let Some(ls) = systems {
        return lti_apply(d, &ls).map(System::Lti);
    }
    Err(Error::Type("cannot compose finite and linear behaviors in one algebra".into()))
}

pub fn compose_behaviors(d: &WiringDiagram, parts: &[Behavior]) -> Result<System> {
    let systems: Vec<System> = parts.iter().map(Behavior::to_system).collect();
    if systems.is_empty() {
        // no inhabitant decides the algebra; follow the outer ports
        return if d.outer.all_finite() {
            moore_apply(d, &[]).map(System::Moore)
        } else {
            lti_apply(d, &[]).map(System::Lti)
        };
    }
    compose_systems(d, &systems)
}
