//! Result formatting: JSON (sorted keys, integral floats as integers,
//! shortest round-trip decimals), plain text tables, and trajectory CSV.

use std::io;

use nalgebra::{DMatrix, DVector};
use serde_json::{json, Map, Value};

use super::elaborate::FlatWiring;
use super::render::render_model;
use super::{Diagnostic, Model};
use crate::behavior::{LtiSystem, MooreMachine, Simulate, System, Trajectory};
use crate::contracts::{ContractBody, IntervalSet, PortSubset, StaticContract, GRAPH_TOLERANCE};
use crate::error::{Error, Result};
use crate::security::{distinguishing_input, lti_first_difference, AttackOutcome, OBSERVATION_TOLERANCE};
use crate::temporal::{Carrier, TimeContract};
use crate::wiring::{Interface, PortType};

/// Single-line JSON with a space after `:` and `,` between members.
struct Spaced;

impl serde_json::ser::Formatter for Spaced {
    fn begin_object_key<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        if first {
            Ok(())
        } else {
            w.write_all(b", ")
        }
    }

    fn begin_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        w.write_all(b": ")
    }
}

pub fn to_json(v: &Value) -> String {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, Spaced);
    serde::Serialize::serialize(v, &mut ser).expect("in-memory JSON");
    String::from_utf8(buf).expect("JSON is UTF-8")
}

/// Integral values become integers, others the shortest decimal that
/// round-trips; non-finite values become strings.
pub fn num(x: f64) -> Value {
    if x.is_finite() && x.fract() == 0.0 && x.abs() < 9.0e15 {
        json!(x as i64)
    } else if x.is_finite() {
        json!(x)
    } else if x > 0.0 {
        json!("inf")
    } else if x < 0.0 {
        json!("-inf")
    } else {
        json!("nan")
    }
}

pub fn matrix_json(m: &DMatrix<f64>) -> Value {
    Value::Array((0..m.nrows()).map(|i| Value::Array((0..m.ncols()).map(|j| num(m[(i, j)])).collect())).collect())
}

fn port_json(p: &PortType) -> Value {
    match p {
        PortType::Finite(s) => json!({"type": s.name, "values": s.labels}),
        PortType::Lin(n) => json!({"type": "lin", "dim": n}),
    }
}

pub fn interface_json(i: &Interface) -> Value {
    json!({
        "name": i.name,
        "inputs": i.inputs.iter().map(port_json).collect::<Vec<_>>(),
        "outputs": i.outputs.iter().map(port_json).collect::<Vec<_>>(),
    })
}

fn labels_of(ports: &[PortType], tuple: &[usize]) -> Vec<String> {
    ports
        .iter()
        .zip(tuple)
        .map(|(p, &v)| match p {
            PortType::Finite(s) => s.labels[v].clone(),
            PortType::Lin(_) => v.to_string(),
        })
        .collect()
}

fn input_tuples(m: &MooreMachine) -> Vec<Vec<String>> {
    m.input_space().iter().map(|x| labels_of(&m.interface().inputs, &x)).collect()
}

pub fn system_json(s: &System) -> Value {
    match s {
        System::Moore(m) => {
            let k = m.num_inputs();
            let states = m.states();
            let update: Vec<Vec<&str>> =
                (0..m.num_states()).map(|s| (0..k).map(|x| states[m.step(s, x)].as_str()).collect()).collect();
            let readout: Vec<Vec<String>> =
                (0..m.num_states()).map(|s| labels_of(&m.interface().outputs, m.readout(s))).collect();
            json!({
                "kind": "moore",
                "interface": interface_json(m.interface()),
                "states": states,
                "initial": states[m.initial()],
                "inputs": input_tuples(m),
                "update": update,
                "readout": readout,
            })
        }
        System::Lti(l) => json!({
            "kind": "lti",
            "interface": interface_json(l.interface()),
            "state_dim": l.state_dim(),
            "A": matrix_json(l.a()),
            "B": matrix_json(l.b()),
            "C": matrix_json(l.c()),
        }),
    }
}

fn pad_table(rows: &[Vec<String>]) -> String {
    let cols = rows.iter().map(Vec::len).max().unwrap_or(0);
    let widths: Vec<usize> =
        (0..cols).map(|c| rows.iter().filter_map(|r| r.get(c)).map(|s| s.chars().count()).max().unwrap_or(0)).collect();
    let mut out = String::new();
    for r in rows {
        let cells: Vec<String> = r.iter().enumerate().map(|(c, s)| format!("{s:<w$}", w = widths[c])).collect();
        out.push_str("  ");
        out.push_str(cells.join("  ").trim_end());
        out.push('\n');
    }
    out
}

fn matrix_text(name: &str, m: &DMatrix<f64>) -> String {
    if m.nrows() == 0 || m.ncols() == 0 {
        return format!("{name} ({}x{}): empty\n", m.nrows(), m.ncols());
    }
    let rows: Vec<Vec<String>> =
        (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)].to_string()).collect()).collect();
    format!("{name} ({}x{}):\n{}", m.nrows(), m.ncols(), pad_table(&rows))
}

pub fn system_text(s: &System) -> String {
    match s {
        System::Moore(m) => {
            let states = m.states();
            let tuple = |v: Vec<String>| format!("({})", v.join(", "));
            let mut header = vec!["state".to_string()];
            header.extend(input_tuples(m).into_iter().map(tuple));
            let mut rows = vec![header];
            for s in 0..m.num_states() {
                let mut r = vec![states[s].clone()];
                r.extend((0..m.num_inputs()).map(|x| states[m.step(s, x)].clone()));
                rows.push(r);
            }
            let readout: Vec<Vec<String>> = (0..m.num_states())
                .map(|s| vec![states[s].clone(), "->".into(), tuple(labels_of(&m.interface().outputs, m.readout(s)))])
                .collect();
            format!(
                "moore machine on {}\n{} states, initial {}\nupdate (rows: state, columns: input):\n{}readout:\n{}",
                m.interface(),
                m.num_states(),
                states[m.initial()],
                pad_table(&rows),
                pad_table(&readout)
            )
        }
        System::Lti(l) => format!(
            "lti system on {}\nstate dimension {}\n{}{}{}",
            l.interface(),
            l.state_dim(),
            matrix_text("A", l.a()),
            matrix_text("B", l.b()),
            matrix_text("C", l.c())
        ),
    }
}

fn interval_json(s: &IntervalSet) -> Value {
    Value::Array(s.parts().iter().map(|&(lo, hi)| json!([num(lo), num(hi)])).collect())
}

fn subset_json(port: &PortType, s: &PortSubset) -> Value {
    match (port, s) {
        (PortType::Finite(f), PortSubset::Labels(ls)) => {
            json!({"values": ls.iter().map(|&v| f.labels[v].clone()).collect::<Vec<_>>()})
        }
        (_, PortSubset::Box(cs)) => {
            json!({"intervals": cs.iter().map(interval_json).collect::<Vec<_>>()})
        }
        (_, PortSubset::Labels(ls)) => json!({"values": ls}),
    }
}

fn subset_text(port: &PortType, s: &PortSubset) -> String {
    if s.is_full_for(port) {
        return "full".into();
    }
    match (port, s) {
        (PortType::Finite(f), PortSubset::Labels(ls)) => {
            format!("{{{}}}", ls.iter().map(|&v| f.labels[v].clone()).collect::<Vec<_>>().join(", "))
        }
        (_, PortSubset::Box(cs)) if cs.len() == 1 => cs[0].to_string(),
        (_, PortSubset::Box(cs)) => format!("({})", cs.iter().map(ToString::to_string).collect::<Vec<_>>().join(", ")),
        (_, PortSubset::Labels(ls)) => format!("{ls:?}"),
    }
}

pub fn contract_json(c: &StaticContract) -> Value {
    let i = c.interface();
    let body = match c.body() {
        ContractBody::Empty => json!({"kind": "empty"}),
        ContractBody::Relation(r) => json!({
            "kind": "relation",
            "pairs": r
                .iter()
                .map(|(x, y)| json!({"in": labels_of(&i.inputs, x), "out": labels_of(&i.outputs, y)}))
                .collect::<Vec<_>>(),
        }),
        ContractBody::Independent { inputs, outputs } => json!({
            "kind": "independent",
            "inputs": i.inputs.iter().zip(inputs).map(|(p, s)| subset_json(p, s)).collect::<Vec<_>>(),
            "outputs": i.outputs.iter().zip(outputs).map(|(p, s)| subset_json(p, s)).collect::<Vec<_>>(),
        }),
        ContractBody::LinearGraph(h) => json!({
            "kind": "linear_graph",
            "H": matrix_json(h),
            "tolerance": GRAPH_TOLERANCE,
        }),
    };
    let mut m = match body {
        Value::Object(m) => m,
        _ => unreachable!(),
    };
    m.insert("interface".into(), interface_json(i));
    Value::Object(m)
}

pub fn contract_text(c: &StaticContract) -> String {
    let i = c.interface();
    let mut out = format!("contract on {i}\n");
    match c.body() {
        ContractBody::Empty => out.push_str("  empty\n"),
        ContractBody::Relation(r) => {
            out.push_str(&format!("  relation with {} pairs\n", r.len()));
            for (x, y) in r {
                out.push_str(&format!(
                    "  ({}; {})\n",
                    labels_of(&i.inputs, x).join(", "),
                    labels_of(&i.outputs, y).join(", ")
                ));
            }
        }
        ContractBody::Independent { inputs, outputs } => {
            for (k, (p, s)) in i.inputs.iter().zip(inputs).enumerate() {
                out.push_str(&format!("  in[{k}]: {}\n", subset_text(p, s)));
            }
            for (k, (p, s)) in i.outputs.iter().zip(outputs).enumerate() {
                out.push_str(&format!("  out[{k}]: {}\n", subset_text(p, s)));
            }
        }
        ContractBody::LinearGraph(h) => {
            out.push_str(&format!("  graph of y = H x (tolerance {GRAPH_TOLERANCE})\n"));
            out.push_str(&matrix_text("H", h));
        }
    }
    out
}

pub fn wiring_json(f: &FlatWiring) -> Value {
    let d = &f.diagram;
    let connections: Vec<Value> = d
        .destinations()
        .filter_map(|dest| d.source_of(dest).map(|src| json!({"dest": f.port_name(dest), "src": f.port_name(src)})))
        .collect();
    json!({
        "name": f.name,
        "outer": d.outer.name,
        "inner": f
            .aliases
            .iter()
            .zip(&d.inner)
            .map(|(a, b)| json!({"alias": a, "box": b.name}))
            .collect::<Vec<_>>(),
        "connections": connections,
    })
}

/// The wiring as a DSL declaration.
pub fn wiring_text(f: &FlatWiring) -> String {
    render_model(&Model { decls: vec![super::Decl::Wiring(f.to_decl())] })
}

pub fn diagnostics_json(ds: &[Diagnostic]) -> Value {
    json!({
        "valid": !super::has_errors(ds),
        "diagnostics": ds
            .iter()
            .map(|d| json!({
                "severity": d.severity.to_string(),
                "line": d.line,
                "col": d.col,
                "message": d.message,
                "related": d
                    .related
                    .iter()
                    .map(|(l, c, m)| json!({"line": l, "col": c, "message": m}))
                    .collect::<Vec<_>>(),
            }))
            .collect::<Vec<_>>(),
    })
}

/// One knowledge-database entry surviving the filter.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub name: String,
    /// Whether the entry is behaviorally equivalent to the target, when known.
    pub bisimilar: Option<bool>,
}

pub fn probe_json(cands: &[Candidate]) -> Value {
    json!({
        "candidates": cands
            .iter()
            .map(|c| json!({"name": c.name, "bisimilar": c.bisimilar}))
            .collect::<Vec<_>>(),
    })
}

pub fn probe_text(cands: &[Candidate]) -> String {
    if cands.is_empty() {
        return "no candidates\n".into();
    }
    let mut out = format!("{} candidate(s):\n", cands.len());
    for c in cands {
        let eq = match c.bisimilar {
            Some(true) => " (equivalent to target)",
            Some(false) => " (not equivalent to target)",
            None => "",
        };
        out.push_str(&format!("  {}{eq}\n", c.name));
    }
    out
}

/// Whether an attack changed the composite's behavior, with evidence.
#[derive(Debug, Clone, PartialEq)]
pub struct AttackVerdict {
    pub equivalent: bool,
    pub witness: Option<Value>,
}

/// Compares before and after: bisimulation plus a shortest distinguishing
/// input for machines, impulse responses for LTI systems.
pub fn attack_verdict(o: &AttackOutcome) -> Result<AttackVerdict> {
    match (&o.before, &o.after) {
        (System::Moore(b), System::Moore(a)) => {
            let Some(word) = distinguishing_input(b, a)? else {
                return Ok(AttackVerdict { equivalent: true, witness: None });
            };
            let inputs: Vec<Vec<usize>> = word.iter().map(|&x| b.input_space().decode(x)).collect();
            let trace = |m: &MooreMachine| -> Result<Vec<Vec<String>>> {
                Ok(m.simulate(m.initial(), &inputs)?
                    .outputs
                    .iter()
                    .map(|y| labels_of(&m.interface().outputs, y))
                    .collect())
            };
            Ok(AttackVerdict {
                equivalent: false,
                witness: Some(json!({
                    "inputs": inputs.iter().map(|x| labels_of(&b.interface().inputs, x)).collect::<Vec<_>>(),
                    "before": trace(b)?,
                    "after": trace(a)?,
                })),
            })
        }
        (System::Lti(b), System::Lti(a)) => {
            let k = lti_first_difference(b, a, OBSERVATION_TOLERANCE)?;
            let markov = |l: &LtiSystem, k: usize| {
                let mut p = l.b().clone();
                for _ in 0..k {
                    p = l.a() * p;
                }
                l.c() * p
            };
            Ok(AttackVerdict {
                equivalent: k.is_none(),
                witness: k.map(|k| {
                    json!({
                        "markov_index": k,
                        "before": matrix_json(&markov(b, k)),
                        "after": matrix_json(&markov(a, k)),
                        "tolerance": OBSERVATION_TOLERANCE,
                    })
                }),
            })
        }
        _ => Err(Error::Type("attack changed the kind of the composite".into())),
    }
}

pub fn attack_json(name: &str, o: &AttackOutcome, verdict: Option<&AttackVerdict>) -> Value {
    let mut m = Map::new();
    m.insert("attack".into(), json!(name));
    m.insert("before".into(), system_json(&o.before));
    m.insert("after".into(), system_json(&o.after));
    m.insert("changed".into(), json!(o.before != o.after));
    if let Some(v) = verdict {
        m.insert("equivalent".into(), json!(v.equivalent));
        m.insert("witness".into(), v.witness.clone().unwrap_or(Value::Null));
    }
    Value::Object(m)
}

pub fn attack_text(name: &str, o: &AttackOutcome, verdict: Option<&AttackVerdict>) -> String {
    let mut out =
        format!("attack {name}\n-- before --\n{}-- after --\n{}", system_text(&o.before), system_text(&o.after));
    out.push_str(if o.before == o.after { "composite unchanged\n" } else { "composite changed\n" });
    if let Some(v) = verdict {
        out.push_str(if v.equivalent {
            "verdict: behaviorally equivalent to the original\n"
        } else {
            "verdict: NOT behaviorally equivalent to the original\n"
        });
        if let Some(w) = &v.witness {
            out.push_str(&format!("witness: {}\n", to_json(w)));
        }
    }
    out
}

// ---- trajectories ----

/// A run read from or written to CSV. States are kept as text.
#[derive(Debug, Clone, PartialEq)]
pub enum TrajectoryData {
    Finite(Trajectory<String, Vec<usize>>),
    Linear(Trajectory<String, DVector<f64>>),
}

fn csv_err(e: csv::Error) -> Error {
    Error::Value(format!("csv: {e}"))
}

fn write_rows(rows: Vec<Vec<String>>) -> String {
    let mut w = csv::WriterBuilder::new().flexible(false).from_writer(Vec::new());
    for r in rows {
        w.write_record(&r).expect("in-memory CSV");
    }
    String::from_utf8(w.into_inner().expect("in-memory CSV")).expect("CSV is UTF-8")
}

fn columns(prefix: &str, n: usize) -> Vec<String> {
    (0..n).map(|i| format!("{prefix}{i}")).collect()
}

/// Header `t,state,in0..,out0..`; the last row has no input.
pub fn moore_trajectory_csv(m: &MooreMachine, t: &Trajectory<usize, Vec<usize>>) -> String {
    let i = m.interface();
    let mut header = vec!["t".to_string(), "state".to_string()];
    header.extend(columns("in", i.inputs.len()));
    header.extend(columns("out", i.outputs.len()));
    let mut rows = vec![header];
    for (k, s) in t.states.iter().enumerate() {
        let mut r = vec![k.to_string(), m.states()[*s].clone()];
        match t.inputs.get(k) {
            Some(x) => r.extend(labels_of(&i.inputs, x)),
            None => r.extend(std::iter::repeat_n(String::new(), i.inputs.len())),
        }
        r.extend(labels_of(&i.outputs, &t.outputs[k]));
        rows.push(r);
    }
    write_rows(rows)
}

/// Header `t,s0..,in0..,out0..` with one column per coordinate.
pub fn lti_trajectory_csv(l: &LtiSystem, t: &Trajectory<DVector<f64>, DVector<f64>>) -> String {
    let i = l.interface();
    let mut header = vec!["t".to_string()];
    header.extend(columns("s", l.state_dim()));
    header.extend(columns("in", i.input_dim()));
    header.extend(columns("out", i.output_dim()));
    let mut rows = vec![header];
    let fmt = |v: &DVector<f64>| v.iter().map(f64::to_string).collect::<Vec<_>>();
    for (k, s) in t.states.iter().enumerate() {
        let mut r = vec![k.to_string()];
        r.extend(fmt(s));
        match t.inputs.get(k) {
            Some(x) => r.extend(fmt(x)),
            None => r.extend(std::iter::repeat_n(String::new(), i.input_dim())),
        }
        r.extend(fmt(&t.outputs[k]));
        rows.push(r);
    }
    write_rows(rows)
}

fn indexed_columns(header: &[String], prefix: &str) -> Vec<usize> {
    let mut cols: Vec<(usize, usize)> = header
        .iter()
        .enumerate()
        .filter_map(|(c, h)| h.strip_prefix(prefix).and_then(|n| n.parse().ok()).map(|k| (k, c)))
        .collect();
    cols.sort();
    cols.into_iter().map(|(_, c)| c).collect()
}

/// Reads a trajectory written by [`moore_trajectory_csv`] or
/// [`lti_trajectory_csv`] (or by hand in the same layout) for a box. Rows
/// whose input cells are all empty end the input sequence.
pub fn parse_trajectory(text: &str, iface: &Interface) -> Result<TrajectoryData> {
    let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let header: Vec<String> = r.headers().map_err(csv_err)?.iter().map(str::to_string).collect();
    let records: Vec<csv::StringRecord> = r.records().collect::<std::result::Result<_, _>>().map_err(csv_err)?;
    let in_cols = indexed_columns(&header, "in");
    let out_cols = indexed_columns(&header, "out");
    let state_cols: Vec<usize> = match header.iter().position(|h| h == "state") {
        Some(c) => vec![c],
        None => indexed_columns(&header, "s"),
    };
    let linear = iface.all_linear() && !(iface.inputs.is_empty() && iface.outputs.is_empty());
    let (n_in, n_out) = if linear {
        (iface.input_dim(), iface.output_dim())
    } else if iface.all_finite() {
        (iface.inputs.len(), iface.outputs.len())
    } else {
        return Err(Error::Type(format!("{iface} mixes finite and linear ports")));
    };
    if in_cols.len() != n_in || out_cols.len() != n_out {
        return Err(Error::Value(format!(
            "trajectory has {} input and {} output columns, box {} needs {n_in} and {n_out}",
            in_cols.len(),
            out_cols.len(),
            iface.name
        )));
    }
    let mut states = Vec::new();
    let mut raw_in: Vec<Vec<String>> = Vec::new();
    let mut raw_out: Vec<Vec<String>> = Vec::new();
    let mut ended = false;
    for (row, rec) in records.iter().enumerate() {
        let get = |cols: &[usize]| cols.iter().map(|&c| rec.get(c).unwrap_or("").to_string()).collect::<Vec<_>>();
        states.push(get(&state_cols).join(" "));
        let x = get(&in_cols);
        if x.iter().all(String::is_empty) && n_in > 0 || ended {
            if !x.iter().all(String::is_empty) {
                return Err(Error::Value(format!("row {} has inputs after the input sequence ended", row + 1)));
            }
            ended = true;
        } else {
            raw_in.push(x);
        }
        raw_out.push(get(&out_cols));
    }
    if n_in == 0 && !raw_out.is_empty() {
        // no input columns: every row but the last is a step
        raw_in.truncate(raw_out.len() - 1);
    }
    if linear {
        let parse = |v: &[String]| -> Result<DVector<f64>> {
            let xs = v
                .iter()
                .map(|s| s.parse::<f64>().map_err(|_| Error::Value(format!("`{s}` is not a number"))))
                .collect::<Result<Vec<_>>>()?;
            Ok(DVector::from_vec(xs))
        };
        Ok(TrajectoryData::Linear(Trajectory {
            inputs: raw_in.iter().map(|v| parse(v)).collect::<Result<_>>()?,
            states,
            outputs: raw_out.iter().map(|v| parse(v)).collect::<Result<_>>()?,
        }))
    } else {
        let parse = |ports: &[PortType], v: &[String]| -> Result<Vec<usize>> {
            ports
                .iter()
                .zip(v)
                .map(|(p, s)| {
                    let set = p.as_finite().expect("finite");
                    set.index_of(s).ok_or_else(|| Error::Value(format!("`{s}` is not a value of type {}", set.name)))
                })
                .collect()
        };
        Ok(TrajectoryData::Finite(Trajectory {
            inputs: raw_in.iter().map(|v| parse(&iface.inputs, v)).collect::<Result<_>>()?,
            states,
            outputs: raw_out.iter().map(|v| parse(&iface.outputs, v)).collect::<Result<_>>()?,
        }))
    }
}

fn carrier_index(c: &Carrier, port: &PortType, value: &[f64], label: Option<usize>) -> Result<usize> {
    match (c, label) {
        (Carrier::Labels(_), Some(v)) => Ok(v),
        (Carrier::Samples(pts), None) => pts
            .iter()
            .position(|p| p.iter().zip(value).all(|(a, b)| (a - b).abs() <= OBSERVATION_TOLERANCE))
            .ok_or_else(|| Error::Value(format!("value {value:?} of port {port} is not one of its sample points"))),
        _ => Err(Error::Type("trajectory does not match the time contract's ports".into())),
    }
}

fn port_tuples(
    carriers: &[Carrier],
    ports: &[PortType],
    finite: Option<&[usize]>,
    linear: Option<&DVector<f64>>,
) -> Result<Vec<usize>> {
    let mut off = 0;
    carriers
        .iter()
        .zip(ports)
        .enumerate()
        .map(|(k, (c, p))| {
            let d = p.dim();
            let idx = match (finite, linear) {
                (Some(x), _) => carrier_index(c, p, &[], Some(x[k])),
                (_, Some(v)) => carrier_index(c, p, &v.as_slice()[off..off + d], None),
                _ => unreachable!(),
            };
            off += d;
            idx
        })
        .collect()
}

/// Membership of a recorded run in a time contract. The signal pair is the
/// run's steps that have an input, `(inputs[t], outputs[t])`.
pub fn time_contract_holds(c: &TimeContract, t: &TrajectoryData) -> Result<bool> {
    Ok(time_contract_violation(c, t)?.is_none())
}

/// The first time step `n` such that the window `[0, n]` of the trajectory
/// is rejected, or `None` if the whole trajectory is accepted.
pub fn time_contract_violation(c: &TimeContract, t: &TrajectoryData) -> Result<Option<usize>> {
    let i = c.interface();
    let (xs, ys): (Vec<Vec<usize>>, Vec<Vec<usize>>) = match t {
        TrajectoryData::Finite(t) => (
            t.inputs
                .iter()
                .map(|x| port_tuples(c.input_carriers(), &i.inputs, Some(x), None))
                .collect::<Result<_>>()?,
            t.outputs[..t.inputs.len()]
                .iter()
                .map(|y| port_tuples(c.output_carriers(), &i.outputs, Some(y), None))
                .collect::<Result<_>>()?,
        ),
        TrajectoryData::Linear(t) => (
            t.inputs
                .iter()
                .map(|x| port_tuples(c.input_carriers(), &i.inputs, None, Some(x)))
                .collect::<Result<_>>()?,
            t.outputs[..t.inputs.len()]
                .iter()
                .map(|y| port_tuples(c.output_carriers(), &i.outputs, None, Some(y)))
                .collect::<Result<_>>()?,
        ),
    };
    if c.contains_tuples(&xs, &ys)? {
        return Ok(None);
    }
    for n in 1..xs.len() {
        if !c.contains_tuples(&xs[..n], &ys[..n])? {
            return Ok(Some(n - 1));
        }
    }
    Ok(Some(xs.len() - 1))
}
