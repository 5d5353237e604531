use crate::behavior::{compose_systems, LtiSystem, MooreMachine, System};
use crate::error::{mismatch, Error, Result};
use crate::wiring::{validate_diagram, Interface, PortRef, PortType, WiringDiagram};

/// A constant fed into a cut wire.
#[derive(Debug, Clone, PartialEq)]
pub enum ConstValue {
    /// Label index of a finite port.
    Label(usize),
    /// Coordinates of a linear port; only the zero vector is supported by LTI
    /// composites.
    Real(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub enum RewireSource {
    Port(PortRef),
    Const(ConstValue),
}

/// Replaces the source of one destination port.
#[derive(Debug, Clone, PartialEq)]
pub struct Rewiring {
    pub dest: PortRef,
    pub source: RewireSource,
}

impl Rewiring {
    pub fn port(dest: PortRef, src: PortRef) -> Self {
        Rewiring { dest, source: RewireSource::Port(src) }
    }

    pub fn constant(dest: PortRef, value: ConstValue) -> Self {
        Rewiring { dest, source: RewireSource::Const(value) }
    }
}

/// A stateless box with no inputs emitting `value` forever.
pub fn constant_system(port: &PortType, value: &ConstValue) -> Result<System> {
    let iface = Interface::new("const", vec![], vec![port.clone()]);
    match (port, value) {
        (PortType::Finite(s), ConstValue::Label(v)) if *v < s.len() => {
            Ok(System::Moore(MooreMachine::new(iface, vec![s.labels[*v].clone()], 0, vec![0], vec![vec![*v]])?))
        }
        (PortType::Lin(n), ConstValue::Real(x)) if x.len() == *n => {
            if x.iter().any(|&c| c != 0.0) {
                return Err(Error::Unsupported(
                    "a nonzero constant is affine, not an LTI system; only 0 can feed a cut linear wire".into(),
                ));
            }
            Ok(System::Lti(LtiSystem::zero(iface, 0)?))
        }
        _ => Err(Error::Type(format!("constant {value:?} does not fit port type {port}"))),
    }
}

/// The rewired diagram plus the constant boxes it appends to the inner list,
/// in order.
pub fn rewire_diagram(d: &WiringDiagram, rewirings: &[Rewiring]) -> Result<(WiringDiagram, Vec<System>)> {
    let mut out = d.clone();
    let mut consts = Vec::new();
    for r in rewirings {
        let dest_type = out
            .port_type(r.dest)
            .cloned()
            .ok_or_else(|| Error::OutOfRange(format!("rewired port {} does not exist", r.dest)))?;
        let src = match &r.source {
            RewireSource::Port(p) => *p,
            RewireSource::Const(v) => {
                let sys = constant_system(&dest_type, v)?;
                out.inner.push(sys.interface().clone());
                out.input_sources.push(Vec::new());
                consts.push(sys);
                PortRef::InnerOutput(out.inner.len() - 1, 0)
            }
        };
        out.set_source(r.dest, src)?;
    }
    if let Some(v) = validate_diagram(&out).first() {
        return Err(Error::InvalidDiagram(format!("rewired diagram: {v}")));
    }
    Ok((out, consts))
}

/// Original and attacked composites, with the data the attacked one was
/// built from.
#[derive(Debug, Clone, PartialEq)]
pub struct AttackOutcome {
    pub before: System,
    pub after: System,
    pub diagram: WiringDiagram,
    pub behaviors: Vec<System>,
}

fn rewritten(d: &WiringDiagram, behaviors: &[System], rewrites: &[(usize, System)]) -> Result<Vec<System>> {
    let mut out = behaviors.to_vec();
    for (slot, sys) in rewrites {
        let inner = d.inner.get(*slot).ok_or_else(|| Error::OutOfRange(format!("inner box #{slot}")))?;
        if !sys.interface().same_ports(inner) {
            return Err(mismatch(format!("replacement for #{slot} lives on {}, box is {inner}", sys.interface())));
        }
        out[*slot] = sys.clone();
    }
    Ok(out)
}

/// Replaces the behaviors of some inner boxes and recomposes.
pub fn apply_rewrite(d: &WiringDiagram, behaviors: &[System], rewrites: &[(usize, System)]) -> Result<AttackOutcome> {
    apply_attack(d, behaviors, rewrites, &[])
}

/// Changes sources of some ports, keeping every behavior, and recomposes.
pub fn apply_rewire(d: &WiringDiagram, behaviors: &[System], rewirings: &[Rewiring]) -> Result<AttackOutcome> {
    let before = compose_systems(d, behaviors)?;
    let (diagram, consts) = rewire_diagram(d, rewirings)?;
    let mut all = behaviors.to_vec();
    all.extend(consts);
    let after = compose_systems(&diagram, &all)?;
    Ok(AttackOutcome { before, after, diagram, behaviors: all })
}

/// Rewrites then rewirings, recomposed once.
pub fn apply_attack(
    d: &WiringDiagram,
    behaviors: &[System],
    rewrites: &[(usize, System)],
    rewirings: &[Rewiring],
) -> Result<AttackOutcome> {
    let before = compose_systems(d, behaviors)?;
    let attacked = rewritten(d, behaviors, rewrites)?;
    let o = apply_rewire(d, &attacked, rewirings)?;
    Ok(AttackOutcome { before, ..o })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::security::behavioral_equiv;
    use crate::wiring::identity_diagram;

    fn and_box() -> Interface {
        Interface::new("A", vec![PortType::booleans(); 2], vec![PortType::booleans()])
    }

    fn and_machine() -> System {
        System::Moore(
            MooreMachine::from_fn(and_box(), vec!["0".into(), "1".into()], 0, |_, x| x[0] & x[1], |s| vec![s]).unwrap(),
        )
    }

    #[test]
    fn identity_rewire_keeps_composite() {
        let d = identity_diagram(&and_box());
        let o = apply_rewire(&d, &[and_machine()], &[]).unwrap();
        assert_eq!(o.before, o.after);
    }

    #[test]
    fn cut_to_constant_zero() {
        let d = identity_diagram(&and_box());
        let o =
            apply_rewire(&d, &[and_machine()], &[Rewiring::constant(PortRef::InnerInput(0, 1), ConstValue::Label(0))])
                .unwrap();
        assert_eq!(o.diagram.inner.len(), 2);
        let after = o.after.as_moore().unwrap();
        // with one input stuck at 0 the and-gate never reaches state 1
        for s in 0..after.num_states() {
            for x in 0..after.num_inputs() {
                assert_eq!(after.readout(after.step(s, x))[0], 0);
            }
        }
        assert!(!behavioral_equiv(o.before.as_moore().unwrap(), after).unwrap());
    }

    #[test]
    fn swapping_inputs_changes_update() {
        // box reading (a, b) and emitting a; swapping its inputs makes it emit b
        let iface = Interface::new("P", vec![PortType::booleans(); 2], vec![PortType::booleans()]);
        let m = System::Moore(
            MooreMachine::from_fn(iface.clone(), vec!["0".into(), "1".into()], 0, |_, x| x[0], |s| vec![s]).unwrap(),
        );
        let d = identity_diagram(&iface);
        let o = apply_rewire(
            &d,
            &[m],
            &[
                Rewiring::port(PortRef::InnerInput(0, 0), PortRef::OuterInput(1)),
                Rewiring::port(PortRef::InnerInput(0, 1), PortRef::OuterInput(0)),
            ],
        )
        .unwrap();
        let (b, a) = (o.before.as_moore().unwrap(), o.after.as_moore().unwrap());
        assert_ne!(b.update(0, &[1, 0]).unwrap(), a.update(0, &[1, 0]).unwrap());
    }

    #[test]
    fn rewrite_checks_interface() {
        let d = identity_diagram(&and_box());
        let wrong = System::Moore(MooreMachine::trivial());
        assert!(apply_rewrite(&d, &[and_machine()], &[(0, wrong)]).is_err());
        let o = apply_rewrite(&d, &[and_machine()], &[]).unwrap();
        assert_eq!(o.before, o.after);
    }

    #[test]
    fn linear_constants() {
        let p = PortType::Lin(2);
        assert!(constant_system(&p, &ConstValue::Real(vec![0.0, 0.0])).is_ok());
        assert!(matches!(constant_system(&p, &ConstValue::Real(vec![1.0, 0.0])), Err(Error::Unsupported(_))));
        assert!(constant_system(&PortType::booleans(), &ConstValue::Label(2)).is_err());
    }
}
