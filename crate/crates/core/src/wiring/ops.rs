use super::{Interface, PortRef, WiringDiagram};
use crate::error::{mismatch, Result};

/// `(π₂, id)`: every inner input reads the matching outer input and every
/// outer output reads the matching inner output.
pub fn identity_diagram(x: &Interface) -> WiringDiagram {
    WiringDiagram::new(
        vec![x.clone()],
        x.clone(),
        vec![(0..x.inputs.len()).map(PortRef::OuterInput).collect()],
        (0..x.outputs.len()).map(|j| PortRef::InnerOutput(0, j)).collect(),
    )
}

/// The diagram with no inner boxes on the unit interface; neutral for
/// [`tensor_diagrams`].
pub fn empty_diagram() -> WiringDiagram {
    WiringDiagram::new(vec![], Interface::unit(), vec![], vec![])
}

/// Parallel placement of two diagrams. `g`'s indices are shifted past `f`'s.
pub fn tensor_diagrams(f: &WiringDiagram, g: &WiringDiagram) -> WiringDiagram {
    let in_shift = f.outer.inputs.len();
    let box_shift = f.inner.len();
    let shift = |r: &PortRef| match *r {
        PortRef::OuterInput(i) => PortRef::OuterInput(i + in_shift),
        PortRef::InnerOutput(b, p) => PortRef::InnerOutput(b + box_shift, p),
        other => other,
    };
    let mut inner = f.inner.clone();
    inner.extend(g.inner.iter().cloned());
    let mut input_sources = f.input_sources.clone();
    input_sources.extend(g.input_sources.iter().map(|v| v.iter().map(shift).collect()));
    let mut output_sources = f.output_sources.clone();
    output_sources.extend(g.output_sources.iter().map(shift));
    WiringDiagram::new(inner, f.outer.tensor(&g.outer), input_sources, output_sources)
}

pub fn tensor_all<'a>(ds: impl IntoIterator<Item = &'a WiringDiagram>) -> WiringDiagram {
    ds.into_iter().fold(empty_diagram(), |acc, d| tensor_diagrams(&acc, d))
}

/// `g ∘ f` where `g`'s single inner box is `f`'s outer box.
///
/// Each source of the result is found by at most two hops:
/// `(g∘f)_in(x', z) = f_in(x', g_in(f_out(x'), z))` and
/// `(g∘f)_out = g_out ∘ f_out`.
pub fn compose_diagrams(g: &WiringDiagram, f: &WiringDiagram) -> Result<WiringDiagram> {
    if g.inner.len() != 1 || !g.inner[0].same_ports(&f.outer) {
        return Err(mismatch(format!(
            "cannot compose: outer diagram's inner boxes [{}] are not the single box {}",
            g.inner.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", "),
            f.outer
        )));
    }
    let through_f_out = |k: usize| -> Result<PortRef> {
        f.output_sources.get(k).copied().ok_or_else(|| mismatch(format!("inner diagram has no outer output {k}")))
    };
    let resolve_g = |src: PortRef| -> Result<PortRef> {
        match src {
            PortRef::OuterInput(j) => Ok(PortRef::OuterInput(j)),
            PortRef::InnerOutput(0, k) => through_f_out(k),
            other => Err(mismatch(format!("unexpected source {other} in outer diagram"))),
        }
    };
    let input_sources = f
        .input_sources
        .iter()
        .map(|srcs| {
            srcs.iter()
                .map(|&s| match s {
                    PortRef::OuterInput(i) => {
                        let gs = g.input_sources[0]
                            .get(i)
                            .copied()
                            .ok_or_else(|| mismatch(format!("outer diagram does not feed input {i}")))?;
                        resolve_g(gs)
                    }
                    other => Ok(other),
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let output_sources = g.output_sources.iter().map(|&s| resolve_g(s)).collect::<Result<Vec<_>>>()?;
    Ok(WiringDiagram::new(f.inner.clone(), g.outer.clone(), input_sources, output_sources))
}

/// Re-associates the inner factorization into one box (the tensor of all
/// inner boxes), renumbering ports accordingly.
pub fn collapse_inner(d: &WiringDiagram) -> WiringDiagram {
    let offsets: Vec<usize> = d
        .inner
        .iter()
        .scan(0, |acc, x| {
            let o = *acc;
            *acc += x.outputs.len();
            Some(o)
        })
        .collect();
    let flat = |r: &PortRef| match *r {
        PortRef::InnerOutput(b, p) => PortRef::InnerOutput(0, offsets[b] + p),
        other => other,
    };
    WiringDiagram::new(
        vec![d.inner_tensor()],
        d.outer.clone(),
        vec![d.input_sources.iter().flatten().map(flat).collect()],
        d.output_sources.iter().map(flat).collect(),
    )
}

/// `parent ∘ (impls[0] ⊗ … ⊗ impls[n-1])`: implements every inner box of
/// `parent` at once and erases the intermediate boundaries.
pub fn compose_hierarchical(parent: &WiringDiagram, impls: &[WiringDiagram]) -> Result<WiringDiagram> {
    if impls.len() != parent.inner.len() {
        return Err(mismatch(format!("{} implementations for {} inner boxes", impls.len(), parent.inner.len())));
    }
    for (b, (x, imp)) in parent.inner.iter().zip(impls).enumerate() {
        if !x.same_ports(&imp.outer) {
            return Err(mismatch(format!("implementation {b} has outer box {} but the slot is {x}", imp.outer)));
        }
    }
    compose_diagrams(&collapse_inner(parent), &tensor_all(impls))
}

/// Opens up inner box `slot` of `parent`, splicing in `child`'s inner boxes.
pub fn substitute(parent: &WiringDiagram, slot: usize, child: &WiringDiagram) -> Result<WiringDiagram> {
    let Some(erased) = parent.inner.get(slot) else {
        return Err(crate::Error::OutOfRange(format!(
            "slot {slot} of a diagram with {} inner boxes",
            parent.inner.len()
        )));
    };
    if !erased.same_ports(&child.outer) {
        return Err(mismatch(format!(
            "cannot substitute a diagram with outer box {} into slot {slot} ({erased})",
            child.outer
        )));
    }
    let k = child.inner.len();
    let parent_box = |b: usize| if b < slot { b } else { b + k - 1 };
    let resolve_parent = |src: PortRef| -> PortRef {
        match src {
            PortRef::InnerOutput(b, p) if b == slot => match child.output_sources[p] {
                PortRef::InnerOutput(c, q) => PortRef::InnerOutput(slot + c, q),
                other => other,
            },
            PortRef::InnerOutput(b, p) => PortRef::InnerOutput(parent_box(b), p),
            other => other,
        }
    };
    let resolve_child = |src: PortRef| -> PortRef {
        match src {
            PortRef::OuterInput(i) => resolve_parent(parent.input_sources[slot][i]),
            PortRef::InnerOutput(c, q) => PortRef::InnerOutput(slot + c, q),
            other => other,
        }
    };

    let mut inner = Vec::with_capacity(parent.inner.len() + k - 1);
    let mut input_sources = Vec::with_capacity(inner.capacity());
    for (b, x) in parent.inner.iter().enumerate() {
        if b == slot {
            inner.extend(child.inner.iter().cloned());
            input_sources.extend(child.input_sources.iter().map(|v| v.iter().map(|&s| resolve_child(s)).collect()));
        } else {
            inner.push(x.clone());
            input_sources.push(parent.input_sources[b].iter().map(|&s| resolve_parent(s)).collect());
        }
    }
    let output_sources = parent.output_sources.iter().map(|&s| resolve_parent(s)).collect();
    Ok(WiringDiagram::new(inner, parent.outer.clone(), input_sources, output_sources))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wiring::{validate_diagram, PortType};

    fn r() -> PortType {
        PortType::real()
    }

    /// X, Y: (R; R), Z: (R³; R) wired into A: (R³; R).
    fn fig_2_2() -> WiringDiagram {
        let x = Interface::new("X", vec![r()], vec![r()]);
        let y = Interface::new("Y", vec![r()], vec![r()]);
        let z = Interface::new("Z", vec![r(), r(), r()], vec![r()]);
        let a = Interface::new("A", vec![r(), r(), r()], vec![r()]);
        WiringDiagram::new(
            vec![x, y, z],
            a,
            vec![
                vec![PortRef::OuterInput(0)],
                vec![PortRef::OuterInput(1)],
                vec![PortRef::InnerOutput(0, 0), PortRef::InnerOutput(1, 0), PortRef::OuterInput(2)],
            ],
            vec![PortRef::InnerOutput(2, 0)],
        )
    }

    #[test]
    fn identity_is_unit_for_composition() {
        let f = fig_2_2();
        assert_eq!(compose_diagrams(&identity_diagram(&f.outer), &f).unwrap(), f);
        let collapsed = collapse_inner(&f);
        let id_in = identity_diagram(&collapsed.inner[0]);
        assert_eq!(compose_diagrams(&collapsed, &id_in).unwrap(), collapsed);
    }

    #[test]
    fn compose_rejects_mismatched_boxes() {
        let f = fig_2_2();
        let other = Interface::new("B", vec![r()], vec![r()]);
        assert!(compose_diagrams(&identity_diagram(&other), &f).is_err());
        assert!(compose_diagrams(&f, &f).is_err());
    }

    #[test]
    fn tensor_of_identities_is_identity() {
        let x = Interface::new("X", vec![r()], vec![r(), r()]);
        let y = Interface::new("Y", vec![PortType::booleans()], vec![]);
        let t = tensor_diagrams(&identity_diagram(&x), &identity_diagram(&y));
        let xy = x.tensor(&y);
        let id = identity_diagram(&xy);
        assert_eq!(collapse_inner(&t), id);
        assert_eq!(t.outer, xy);
    }

    #[test]
    fn tensor_with_empty_diagram_is_neutral() {
        let f = fig_2_2();
        assert_eq!(tensor_diagrams(&empty_diagram(), &f), f);
        assert_eq!(tensor_diagrams(&f, &empty_diagram()), f);
    }

    #[test]
    fn tensor_with_unit_box_keeps_wiring() {
        let f = fig_2_2();
        let unit = identity_diagram(&Interface::unit());
        let t = tensor_diagrams(&f, &unit);
        assert_eq!(t.outer, f.outer);
        assert_eq!(t.inner.len(), f.inner.len() + 1);
        assert_eq!(t.input_sources[..3], f.input_sources[..]);
        assert!(t.input_sources[3].is_empty());
        assert_eq!(t.output_sources, f.output_sources);
        assert!(validate_diagram(&t).is_empty());
    }

    #[test]
    fn substitute_identity_is_noop() {
        let f = fig_2_2();
        for slot in 0..3 {
            assert_eq!(substitute(&f, slot, &identity_diagram(&f.inner[slot])).unwrap(), f);
        }
    }

    #[test]
    fn substitute_rejects_wrong_child() {
        let f = fig_2_2();
        let wrong = identity_diagram(&f.inner[2]);
        assert!(substitute(&f, 0, &wrong).is_err());
        assert!(substitute(&f, 7, &wrong).is_err());
    }

    #[test]
    fn substitute_splices_serial_child() {
        // implement X as two boxes in series
        let f = fig_2_2();
        let p = Interface::new("P", vec![r()], vec![r()]);
        let q = Interface::new("Q", vec![r()], vec![r()]);
        let child = WiringDiagram::new(
            vec![p, q],
            f.inner[0].clone(),
            vec![vec![PortRef::OuterInput(0)], vec![PortRef::InnerOutput(0, 0)]],
            vec![PortRef::InnerOutput(1, 0)],
        );
        let s = substitute(&f, 0, &child).unwrap();
        assert!(validate_diagram(&s).is_empty());
        let names: Vec<_> = s.inner.iter().map(|x| x.name.as_str()).collect();
        assert_eq!(names, ["P", "Q", "Y", "Z"]);
        assert_eq!(s.input_sources[0], vec![PortRef::OuterInput(0)]);
        assert_eq!(s.input_sources[1], vec![PortRef::InnerOutput(0, 0)]);
        assert_eq!(
            s.input_sources[3],
            vec![PortRef::InnerOutput(1, 0), PortRef::InnerOutput(2, 0), PortRef::OuterInput(2)]
        );
        assert_eq!(s.output_sources, vec![PortRef::InnerOutput(3, 0)]);
    }
}
