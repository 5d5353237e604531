use nalgebra::DMatrix;

use super::{PortRef, PortType, WiringDiagram};
use crate::error::{Error, Result};

/// The 0/1 matrices of a linear wiring:
/// `f_in(x_out, y_in) = af·x_out + bf·y_in` and `f_out(x_out) = cf·x_out`.
///
/// Coordinates are flattened in declared port order with inner boxes
/// concatenated in inner-list order.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectionMatrices {
    /// inner-input-dim × inner-output-dim
    pub af: DMatrix<f64>,
    /// inner-input-dim × outer-input-dim
    pub bf: DMatrix<f64>,
    /// outer-output-dim × inner-output-dim
    pub cf: DMatrix<f64>,
}

fn coordinate_offsets(ports: &[&[PortType]]) -> Vec<Vec<usize>> {
    let mut acc = 0;
    ports
        .iter()
        .map(|ps| {
            ps.iter()
                .map(|p| {
                    let o = acc;
                    acc += p.dim();
                    o
                })
                .collect()
        })
        .collect()
}

pub fn wiring_to_matrices(d: &WiringDiagram) -> Result<SelectionMatrices> {
    let all_linear = d.outer.all_linear() && d.inner.iter().all(|x| x.all_linear());
    if !all_linear {
        return Err(Error::Type("selection matrices need every port to be a linear space".into()));
    }
    let inner_in: Vec<&[PortType]> = d.inner.iter().map(|x| x.inputs.as_slice()).collect();
    let inner_out: Vec<&[PortType]> = d.inner.iter().map(|x| x.outputs.as_slice()).collect();
    let in_off = coordinate_offsets(&inner_in);
    let out_off = coordinate_offsets(&inner_out);
    let outer_in_off = coordinate_offsets(&[d.outer.inputs.as_slice()]).remove(0);
    let outer_out_off = coordinate_offsets(&[d.outer.outputs.as_slice()]).remove(0);

    let n_in: usize = d.inner.iter().map(|x| x.input_dim()).sum();
    let n_out: usize = d.inner.iter().map(|x| x.output_dim()).sum();
    let mut af = DMatrix::zeros(n_in, n_out);
    let mut bf = DMatrix::zeros(n_in, d.outer.input_dim());
    let mut cf = DMatrix::zeros(d.outer.output_dim(), n_out);

    let bad =
        |dest: PortRef, src: PortRef| Error::InvalidDiagram(format!("{dest} fed by {src}; validate the diagram first"));
    for (b, srcs) in d.input_sources.iter().enumerate() {
        for (p, &src) in srcs.iter().enumerate() {
            let dim = d.inner[b].inputs[p].dim();
            let row = in_off[b][p];
            match src {
                PortRef::InnerOutput(c, q) if d.port_type(src).map(PortType::dim) == Some(dim) => {
                    let col = out_off[c][q];
                    for k in 0..dim {
                        af[(row + k, col + k)] = 1.0;
                    }
                }
                PortRef::OuterInput(i) if d.port_type(src).map(PortType::dim) == Some(dim) => {
                    let col = outer_in_off[i];
                    for k in 0..dim {
                        bf[(row + k, col + k)] = 1.0;
                    }
                }
                _ => return Err(bad(PortRef::InnerInput(b, p), src)),
            }
        }
    }
    for (j, &src) in d.output_sources.iter().enumerate() {
        let dim = d.outer.outputs[j].dim();
        match src {
            PortRef::InnerOutput(c, q) if d.port_type(src).map(PortType::dim) == Some(dim) => {
                let col = out_off[c][q];
                for k in 0..dim {
                    cf[(outer_out_off[j] + k, col + k)] = 1.0;
                }
            }
            _ => return Err(bad(PortRef::OuterOutput(j), src)),
        }
    }
    Ok(SelectionMatrices { af, bf, cf })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wiring::{identity_diagram, Interface};

    #[test]
    fn identity_matrices() {
        let x = Interface::new("X", vec![PortType::Lin(2)], vec![PortType::real()]);
        let m = wiring_to_matrices(&identity_diagram(&x)).unwrap();
        assert_eq!(m.af, DMatrix::zeros(2, 1));
        assert_eq!(m.bf, DMatrix::identity(2, 2));
        assert_eq!(m.cf, DMatrix::identity(1, 1));
    }

    #[test]
    fn finite_ports_are_rejected() {
        let x = Interface::new("X", vec![PortType::booleans()], vec![]);
        assert!(matches!(wiring_to_matrices(&identity_diagram(&x)), Err(Error::Type(_))));
    }

    #[test]
    fn multi_dimensional_port_maps_blockwise() {
        let a = Interface::new("A", vec![], vec![PortType::Lin(2)]);
        let b = Interface::new("B", vec![PortType::Lin(2)], vec![]);
        let outer = Interface::new("O", vec![], vec![PortType::Lin(2)]);
        let d = WiringDiagram::new(
            vec![a, b],
            outer,
            vec![vec![], vec![PortRef::InnerOutput(0, 0)]],
            vec![PortRef::InnerOutput(0, 0)],
        );
        let m = wiring_to_matrices(&d).unwrap();
        assert_eq!(m.af, DMatrix::identity(2, 2));
        assert_eq!(m.cf, DMatrix::identity(2, 2));
        assert_eq!(m.bf.shape(), (2, 0));
    }
}
