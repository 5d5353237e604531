use std::collections::{BTreeSet, HashMap};

use nalgebra::{DMatrix, DVector};

use super::ast::*;
use super::Diagnostic;
use crate::behavior::{compose_systems, Behavior, FiniteFunction, LinearMap, LtiSystem, MooreMachine, System};
use crate::contracts::{IntervalSet, PortSubset, Relation, StaticContract};
use crate::security::{apply_attack, AttackOutcome, ConstValue, KnowledgeDatabase, Rewiring, Test, TestKind};
use crate::space::TupleSpace;
use crate::temporal::{Carrier, PortPredicate, TimeContract, TimeContractKind};
use crate::wiring::{substitute, DiagramBuilder, FiniteSet, Interface, PortRef, PortType, Violation, WiringDiagram};

pub type EResult<T> = Result<T, Vec<Diagnostic>>;

fn fail<T>(at: Span, msg: impl Into<String>) -> EResult<T> {
    Err(vec![Diagnostic::error(at, msg)])
}

fn core(at: Span) -> impl Fn(crate::Error) -> Vec<Diagnostic> {
    move |e| vec![Diagnostic::error(at, e.to_string())]
}

/// Runs every check, keeping all diagnostics.
fn gather<T>(errs: &mut Vec<Diagnostic>, r: EResult<T>) -> Option<T> {
    match r {
        Ok(v) => Some(v),
        Err(mut e) => {
            errs.append(&mut e);
            None
        }
    }
}

fn done<T>(errs: Vec<Diagnostic>, v: impl FnOnce() -> EResult<T>) -> EResult<T> {
    if errs.is_empty() {
        v()
    } else {
        Err(errs)
    }
}

fn show_tuple(labels: &[String]) -> String {
    format!("({})", labels.join(", "))
}

/// A wiring diagram with a name for each inner box. After flattening, names
/// of substituted boxes are dotted paths.
#[derive(Debug, Clone, PartialEq)]
pub struct FlatWiring {
    pub name: String,
    pub diagram: WiringDiagram,
    pub aliases: Vec<String>,
}

impl FlatWiring {
    pub fn slot(&self, alias: &str) -> Option<usize> {
        self.aliases.iter().position(|a| a == alias)
    }

    pub fn port_name(&self, r: PortRef) -> String {
        let alias = |b: usize| self.aliases.get(b).cloned().unwrap_or_else(|| format!("#{b}"));
        match r {
            PortRef::OuterInput(i) => format!("outer.in[{i}]"),
            PortRef::OuterOutput(i) => format!("outer.out[{i}]"),
            PortRef::InnerInput(b, p) => format!("{}.in[{p}]", alias(b)),
            PortRef::InnerOutput(b, p) => format!("{}.out[{p}]", alias(b)),
        }
    }

    fn endpoint(&self, r: PortRef) -> Endpoint {
        let alias = |b: usize| self.aliases[b].clone();
        match r {
            PortRef::OuterInput(i) => Endpoint::Outer(Dir::In, i),
            PortRef::OuterOutput(i) => Endpoint::Outer(Dir::Out, i),
            PortRef::InnerInput(b, p) => Endpoint::Inner(alias(b), Dir::In, p),
            PortRef::InnerOutput(b, p) => Endpoint::Inner(alias(b), Dir::Out, p),
        }
    }

    /// The declaration that elaborates back to this wiring.
    pub fn to_decl(&self) -> WiringDecl {
        let d = &self.diagram;
        let inner = self
            .aliases
            .iter()
            .zip(&d.inner)
            .map(|(a, b)| InnerBox { alias: a.clone(), box_name: b.name.clone(), span: Span::default() })
            .collect();
        let connections = d
            .destinations()
            .filter_map(|dest| {
                d.source_of(dest).map(|src| Connection {
                    dest: self.endpoint(dest),
                    src: self.endpoint(src),
                    span: Span::default(),
                })
            })
            .collect();
        WiringDecl { name: self.name.clone(), inner, outer: d.outer.name.clone(), connections, span: Span::default() }
    }
}

/// A resolved attack: the flattened target wiring with its behaviors, and
/// the changes to make.
#[derive(Debug, Clone)]
pub struct AttackPlan {
    pub name: String,
    pub wiring: FlatWiring,
    pub behaviors: Vec<System>,
    pub rewrites: Vec<(usize, System)>,
    pub rewirings: Vec<Rewiring>,
}

impl AttackPlan {
    pub fn run(&self) -> crate::Result<AttackOutcome> {
        apply_attack(&self.wiring.diagram, &self.behaviors, &self.rewrites, &self.rewirings)
    }
}

#[derive(Clone, Copy, PartialEq)]
enum End {
    Dest,
    Src,
}

/// Turns declarations of a parsed model into core objects. Every method
/// reports problems as located diagnostics; a reference to a broken
/// declaration yields a single diagnostic at the reference.
pub struct Elaborator<'m> {
    model: &'m Model,
}

impl<'m> Elaborator<'m> {
    pub fn new(model: &'m Model) -> Self {
        Elaborator { model }
    }

    fn find(&self, kind: Kind, name: &str) -> Option<&'m Decl> {
        self.model.find(kind, name)
    }

    fn reference<T>(&self, kind: Kind, name: &str, at: Span, elab: impl FnOnce(&'m Decl) -> EResult<T>) -> EResult<T> {
        let Some(d) = self.find(kind, name) else {
            return fail(at, format!("unknown {kind} `{name}`"));
        };
        elab(d).map_err(|_| {
            vec![Diagnostic::error(at, format!("{kind} `{name}` has errors"))
                .with_related(d.span(), format!("`{name}` is declared here"))]
        })
    }

    fn top<T>(&self, kind: Kind, name: &str, elab: impl FnOnce(&'m Decl) -> EResult<T>) -> EResult<T> {
        match self.find(kind, name) {
            Some(d) => elab(d),
            None => fail(Span { line: 1, col: 1 }, format!("the model has no {kind} named `{name}`")),
        }
    }

    // ---- types and boxes ----

    fn elab_type(&self, t: &TypeDecl) -> EResult<PortType> {
        match &t.ty {
            TypeExpr::Fin(ls) => {
                if ls.is_empty() {
                    return fail(t.span, format!("finite type `{}` needs at least one value", t.name));
                }
                let mut seen = BTreeSet::new();
                for l in ls {
                    if !seen.insert(l) {
                        return fail(t.span, format!("value `{l}` is listed twice in type `{}`", t.name));
                    }
                }
                Ok(PortType::Finite(FiniteSet::new(&t.name, ls.iter().cloned())))
            }
            TypeExpr::Lin(0) => fail(t.span, format!("linear type `{}` needs dimension at least 1", t.name)),
            TypeExpr::Lin(k) => Ok(PortType::Lin(*k)),
        }
    }

    fn type_ref(&self, name: &str, at: Span) -> EResult<PortType> {
        self.reference(Kind::Type, name, at, |d| match d {
            Decl::Type(t) => self.elab_type(t),
            _ => unreachable!(),
        })
    }

    fn elab_box(&self, b: &BoxDecl) -> EResult<Interface> {
        let mut errs = Vec::new();
        let ins: Vec<_> = b.inputs.iter().filter_map(|t| gather(&mut errs, self.type_ref(t, b.span))).collect();
        let outs: Vec<_> = b.outputs.iter().filter_map(|t| gather(&mut errs, self.type_ref(t, b.span))).collect();
        done(errs, || Ok(Interface::new(&b.name, ins, outs)))
    }

    fn box_ref(&self, name: &str, at: Span) -> EResult<Interface> {
        self.reference(Kind::Box, name, at, |d| match d {
            Decl::Box(b) => self.elab_box(b),
            _ => unreachable!(),
        })
    }

    pub fn interface(&self, name: &str) -> EResult<Interface> {
        self.top(Kind::Box, name, |d| match d {
            Decl::Box(b) => self.elab_box(b),
            _ => unreachable!(),
        })
    }

    // ---- wirings ----

    fn resolve(
        &self,
        e: &Endpoint,
        end: End,
        aliases: &[String],
        inner: &[Interface],
        outer: &Interface,
        at: Span,
        wiring: &str,
    ) -> EResult<PortRef> {
        let check = |len: usize, i: usize, what: String| -> EResult<()> {
            if i < len {
                Ok(())
            } else {
                fail(at, format!("`{e}` does not exist: {what} has {len} such ports"))
            }
        };
        match (e, end) {
            (Endpoint::Const(_), _) => fail(at, "constants can only feed ports inside attack rewirings"),
            (Endpoint::Outer(Dir::Out, _), End::Src) => {
                fail(at, format!("`{e}` is used as a source, but outer outputs cannot be sources"))
            }
            (Endpoint::Outer(Dir::In, _), End::Dest) => {
                fail(at, format!("`{e}` is used as a destination, but outer inputs cannot be destinations"))
            }
            (Endpoint::Inner(_, Dir::In, _), End::Src) => {
                fail(at, format!("`{e}` is used as a source, but inner inputs cannot be sources"))
            }
            (Endpoint::Inner(_, Dir::Out, _), End::Dest) => {
                fail(at, format!("`{e}` is used as a destination, but inner outputs cannot be destinations"))
            }
            (Endpoint::Outer(Dir::In, i), _) => {
                check(outer.inputs.len(), *i, format!("outer box {}", outer.name))?;
                Ok(PortRef::OuterInput(*i))
            }
            (Endpoint::Outer(Dir::Out, i), _) => {
                check(outer.outputs.len(), *i, format!("outer box {}", outer.name))?;
                Ok(PortRef::OuterOutput(*i))
            }
            (Endpoint::Inner(a, d, i), _) => {
                let Some(b) = aliases.iter().position(|x| x == a) else {
                    return fail(at, format!("`{a}` is not an inner box of wiring `{wiring}`"));
                };
                let ports = match d {
                    Dir::In => &inner[b].inputs,
                    Dir::Out => &inner[b].outputs,
                };
                check(ports.len(), *i, format!("box {}", inner[b].name))?;
                Ok(match d {
                    Dir::In => PortRef::InnerInput(b, *i),
                    Dir::Out => PortRef::InnerOutput(b, *i),
                })
            }
        }
    }

    fn elab_wiring(&self, w: &WiringDecl) -> EResult<FlatWiring> {
        let mut errs = Vec::new();
        let mut aliases = Vec::new();
        let mut first: HashMap<&str, Span> = HashMap::new();
        for b in &w.inner {
            if let Some(prev) = first.insert(&b.alias, b.span) {
                errs.push(
                    Diagnostic::error(b.span, format!("inner box name `{}` is used twice", b.alias))
                        .with_related(prev, "first used here"),
                );
            }
            aliases.push(b.alias.clone());
        }
        let inner: Vec<_> =
            w.inner.iter().filter_map(|b| gather(&mut errs, self.box_ref(&b.box_name, b.span))).collect();
        let outer = gather(&mut errs, self.box_ref(&w.outer, w.span));
        if !errs.is_empty() {
            return Err(errs);
        }
        let outer = outer.expect("checked");
        let mut builder = DiagramBuilder::new(inner.clone(), outer.clone());
        let mut wired: HashMap<PortRef, Span> = HashMap::new();
        for c in &w.connections {
            let dest = gather(&mut errs, self.resolve(&c.dest, End::Dest, &aliases, &inner, &outer, c.span, &w.name));
            let src = gather(&mut errs, self.resolve(&c.src, End::Src, &aliases, &inner, &outer, c.span, &w.name));
            let (Some(dest), Some(src)) = (dest, src) else {
                continue;
            };
            if let Some(prev) = wired.insert(dest, c.span) {
                errs.push(
                    Diagnostic::error(c.span, format!("`{}` is wired twice", c.dest))
                        .with_related(prev, "first wired here"),
                );
                continue;
            }
            if let Err(e) = builder.connect(dest, src) {
                errs.extend(core(c.span)(e));
            }
        }
        if !errs.is_empty() {
            return Err(errs);
        }
        let flat = |diagram| FlatWiring { name: w.name.clone(), diagram, aliases: aliases.clone() };
        match builder.finish() {
            Ok(d) => Ok(flat(d)),
            Err(vs) => {
                let names = flat(WiringDiagram::new(inner, outer, vec![], vec![]));
                Err(vs
                    .iter()
                    .map(|v| {
                        let at = |p: &PortRef| wired.get(p).copied().unwrap_or(w.span);
                        match v {
                            Violation::Missing { dest } => {
                                Diagnostic::error(w.span, format!("`{}` has no source", names.port_name(*dest)))
                            }
                            Violation::TypeMismatch { dest, source, expected, found } => Diagnostic::error(
                                at(dest),
                                format!(
                                    "`{}` has type {expected} but is fed by `{}` of type {found}",
                                    names.port_name(*dest),
                                    names.port_name(*source)
                                ),
                            ),
                            Violation::IllegalSource { dest, .. } | Violation::OutOfRange { dest, .. } => {
                                Diagnostic::error(at(dest), v.to_string())
                            }
                            other => Diagnostic::error(w.span, other.to_string()),
                        }
                    })
                    .collect())
            }
        }
    }

    pub fn wiring(&self, name: &str) -> EResult<FlatWiring> {
        self.top(Kind::Wiring, name, |d| match d {
            Decl::Wiring(w) => self.elab_wiring(w),
            _ => unreachable!(),
        })
    }

    /// Wirings whose outer box is `box_name`.
    fn implementations(&self, box_name: &str) -> Vec<&'m WiringDecl> {
        self.model
            .decls
            .iter()
            .filter_map(|d| match d {
                Decl::Wiring(w) if w.outer == box_name => Some(w),
                _ => None,
            })
            .collect()
    }

    /// Substitutes, for every inner box implemented by exactly one wiring of
    /// the model, that wiring (itself flattened), down to `depth` levels
    /// (`None`: all the way).
    pub fn flatten(&self, name: &str, depth: Option<usize>) -> EResult<FlatWiring> {
        let w = match self.find(Kind::Wiring, name) {
            Some(Decl::Wiring(w)) => w,
            _ => return self.wiring(name),
        };
        self.flatten_rec(w, depth, &mut vec![name.to_string()])
    }

    fn flatten_rec(&self, w: &WiringDecl, depth: Option<usize>, stack: &mut Vec<String>) -> EResult<FlatWiring> {
        let mut flat = self.elab_wiring(w)?;
        if depth == Some(0) {
            return Ok(flat);
        }
        for slot in (0..flat.aliases.len()).rev() {
            let box_name = flat.diagram.inner[slot].name.clone();
            let [child] = self.implementations(&box_name)[..] else {
                continue;
            };
            if stack.contains(&child.name) {
                return fail(
                    w.span,
                    format!("wirings implement each other in a cycle: {} -> {}", stack.join(" -> "), child.name),
                );
            }
            stack.push(child.name.clone());
            let sub = self.flatten_rec(child, depth.map(|d| d - 1), stack);
            stack.pop();
            let sub = sub.map_err(|_| {
                vec![Diagnostic::error(w.span, format!("wiring `{}` has errors", child.name))
                    .with_related(child.span, format!("`{}` is declared here", child.name))]
            })?;
            flat.diagram = substitute(&flat.diagram, slot, &sub.diagram).map_err(core(w.span))?;
            let prefix = flat.aliases[slot].clone();
            flat.aliases.splice(slot..=slot, sub.aliases.iter().map(|a| format!("{prefix}.{a}")));
        }
        Ok(flat)
    }

    // ---- behaviors ----

    fn finite_box(&self, box_name: &str, at: Span, what: &str) -> EResult<Interface> {
        let iface = self.box_ref(box_name, at)?;
        if !iface.all_finite() {
            return fail(at, format!("{what} needs a box with finite ports, but `{box_name}` has linear ports"));
        }
        Ok(iface)
    }

    fn linear_box(&self, box_name: &str, at: Span, what: &str) -> EResult<Interface> {
        let iface = self.box_ref(box_name, at)?;
        if !iface.all_linear() {
            return fail(at, format!("{what} needs a box with linear ports, but `{box_name}` has finite ports"));
        }
        Ok(iface)
    }

    fn label_index(set: &FiniteSet, label: &str, at: Span, what: &str) -> EResult<usize> {
        set.index_of(label).ok_or_else(|| {
            vec![Diagnostic::error(at, format!("`{label}` is not a value of type {} ({what})", set.name))]
        })
    }

    fn labels(sets: &[&FiniteSet], labels: &[String], at: Span, what: &str) -> EResult<Vec<usize>> {
        if labels.len() != sets.len() {
            return fail(at, format!("{what} has {} values, but the box has {} such ports", labels.len(), sets.len()));
        }
        sets.iter()
            .zip(labels)
            .enumerate()
            .map(|(i, (s, l))| Self::label_index(s, l, at, &format!("{what}, port {i}")))
            .collect()
    }

    fn patterns(sets: &[&FiniteSet], pats: &[Pattern], at: Span, what: &str) -> EResult<Vec<Option<usize>>> {
        if pats.len() != sets.len() {
            return fail(at, format!("{what} has {} values, but the box has {} inputs", pats.len(), sets.len()));
        }
        sets.iter()
            .zip(pats)
            .enumerate()
            .map(|(i, (s, p))| match p {
                Pattern::Any => Ok(None),
                Pattern::Value(l) => Self::label_index(s, l, at, &format!("{what}, input {i}")).map(Some),
            })
            .collect()
    }

    fn finite_sets(ports: &[PortType]) -> Vec<&FiniteSet> {
        ports.iter().map(|p| p.as_finite().expect("finite box")).collect()
    }

    fn input_labels(sets: &[&FiniteSet], x: &[usize]) -> String {
        show_tuple(&sets.iter().zip(x).map(|(s, &v)| s.labels[v].clone()).collect::<Vec<_>>())
    }

    fn elab_moore(&self, m: &MooreDecl) -> EResult<MooreMachine> {
        let iface = self.finite_box(&m.box_name, m.span, &format!("moore machine `{}`", m.name))?;
        let mut errs = Vec::new();
        if m.states.is_empty() {
            return fail(m.span, "a moore machine needs at least one state");
        }
        let mut state_index = HashMap::new();
        for (i, s) in m.states.iter().enumerate() {
            if state_index.insert(s.as_str(), i).is_some() {
                errs.push(Diagnostic::error(m.span, format!("state `{s}` is listed twice")));
            }
        }
        let state = |s: &str, at: Span| -> EResult<usize> {
            state_index
                .get(s)
                .copied()
                .ok_or_else(|| vec![Diagnostic::error(at, format!("`{s}` is not a state of `{}`", m.name))])
        };
        let init = gather(&mut errs, state(&m.init, m.span));
        let ins = Self::finite_sets(&iface.inputs);
        let outs = Self::finite_sets(&iface.outputs);
        let space = iface.input_space().expect("finite");
        let (n, k) = (m.states.len(), space.size());
        let mut table: Vec<Option<usize>> = vec![None; n * k];
        let mut concrete: HashMap<(usize, Vec<usize>), Span> = HashMap::new();
        for row in &m.update {
            let s = match &row.state {
                Pattern::Any => Some(None),
                Pattern::Value(s) => gather(&mut errs, state(s, row.span)).map(Some),
            };
            let x = gather(&mut errs, Self::patterns(&ins, &row.input, row.span, "update row"));
            let next = gather(&mut errs, state(&row.next, row.span));
            let (Some(s), Some(x), Some(next)) = (s, x, next) else {
                continue;
            };
            if let (Some(sv), Some(xv)) = (s, x.iter().copied().collect::<Option<Vec<_>>>()) {
                if let Some(prev) = concrete.insert((sv, xv), row.span) {
                    errs.push(
                        Diagnostic::error(row.span, "duplicate update row").with_related(prev, "first given here"),
                    );
                    continue;
                }
            }
            for sv in 0..n {
                if s.is_some_and(|t| t != sv) {
                    continue;
                }
                for xi in 0..k {
                    let tuple = space.decode(xi);
                    if x.iter().zip(&tuple).all(|(p, v)| p.is_none_or(|p| p == *v)) {
                        table[sv * k + xi] = Some(next);
                    }
                }
            }
        }
        let missing: Vec<usize> = (0..n * k).filter(|&i| table[i].is_none()).collect();
        if let (Some(&i), true) = (missing.first(), errs.is_empty()) {
            let (s, x) = (i / k, space.decode(i % k));
            let more = if missing.len() > 1 {
                format!(" ({} more combinations missing)", missing.len() - 1)
            } else {
                String::new()
            };
            errs.push(Diagnostic::error(
                m.span,
                format!(
                    "update of `{}` is not total: no row for ({}, {}){more}",
                    m.name,
                    m.states[s],
                    Self::input_labels(&ins, &x)
                ),
            ));
        }
        let mut readout: Vec<Option<Vec<usize>>> = vec![None; n];
        let mut given: HashMap<usize, Span> = HashMap::new();
        for row in &m.readout {
            let s = gather(&mut errs, state(&row.state, row.span));
            let y = gather(&mut errs, Self::labels(&outs, &row.output, row.span, "readout row"));
            let (Some(s), Some(y)) = (s, y) else { continue };
            if let Some(prev) = given.insert(s, row.span) {
                errs.push(
                    Diagnostic::error(row.span, format!("readout of state `{}` is given twice", row.state))
                        .with_related(prev, "first given here"),
                );
            }
            readout[s] = Some(y);
        }
        for (s, r) in readout.iter().enumerate() {
            if r.is_none() {
                errs.push(Diagnostic::error(
                    m.span,
                    format!("readout of `{}` has no row for state `{}`", m.name, m.states[s]),
                ));
            }
        }
        done(errs, || {
            MooreMachine::new(
                iface,
                m.states.clone(),
                init.expect("checked"),
                table.into_iter().map(|t| t.expect("total")).collect(),
                readout.into_iter().map(|r| r.expect("total")).collect(),
            )
            .map_err(core(m.span))
        })
    }

    fn matrix(m: &Matrix, rows: usize, cols: usize, at: Span, what: &str) -> EResult<DMatrix<f64>> {
        if m.is_empty() && rows == 0 {
            return Ok(DMatrix::zeros(0, cols));
        }
        if m.len() != rows || m.iter().any(|r| r.len() != cols) {
            let got_cols = m.first().map_or(0, Vec::len);
            return fail(at, format!("{what} must be {rows}x{cols}, but is {}x{got_cols}", m.len()));
        }
        Ok(DMatrix::from_fn(rows, cols, |i, j| m[i][j]))
    }

    fn elab_lti(&self, l: &LtiDecl) -> EResult<LtiSystem> {
        let iface = self.linear_box(&l.box_name, l.span, &format!("lti system `{}`", l.name))?;
        let n = l.a.len();
        let mut errs = Vec::new();
        let a = gather(&mut errs, Self::matrix(&l.a, n, n, l.span, "A"));
        let b = gather(&mut errs, Self::matrix(&l.b, n, iface.input_dim(), l.span, "B"));
        let c = gather(&mut errs, Self::matrix(&l.c, iface.output_dim(), n, l.span, "C"));
        done(errs, || LtiSystem::new(iface, a.expect("ok"), b.expect("ok"), c.expect("ok")).map_err(core(l.span)))
    }

    fn elab_fn(&self, f: &FnDecl) -> EResult<FiniteFunction> {
        let iface = self.finite_box(&f.box_name, f.span, &format!("function `{}`", f.name))?;
        let ins = Self::finite_sets(&iface.inputs);
        let outs = Self::finite_sets(&iface.outputs);
        let space = iface.input_space().expect("finite");
        let mut table: Vec<Option<Vec<usize>>> = vec![None; space.size()];
        let mut concrete: HashMap<Vec<usize>, Span> = HashMap::new();
        let mut errs = Vec::new();
        for row in &f.rows {
            let x = gather(&mut errs, Self::patterns(&ins, &row.input, row.span, "table row"));
            let y = gather(&mut errs, Self::labels(&outs, &row.output, row.span, "table row output"));
            let (Some(x), Some(y)) = (x, y) else { continue };
            if let Some(xv) = x.iter().copied().collect::<Option<Vec<_>>>() {
                if let Some(prev) = concrete.insert(xv, row.span) {
                    errs.push(
                        Diagnostic::error(row.span, "duplicate table row").with_related(prev, "first given here"),
                    );
                    continue;
                }
            }
            for (xi, slot) in table.iter_mut().enumerate() {
                let tuple = space.decode(xi);
                if x.iter().zip(&tuple).all(|(p, v)| p.is_none_or(|p| p == *v)) {
                    *slot = Some(y.clone());
                }
            }
        }
        let missing: Vec<usize> = (0..table.len()).filter(|&i| table[i].is_none()).collect();
        if let (Some(&i), true) = (missing.first(), errs.is_empty()) {
            let more =
                if missing.len() > 1 { format!(" ({} more inputs missing)", missing.len() - 1) } else { String::new() };
            errs.push(Diagnostic::error(
                f.span,
                format!(
                    "table of `{}` is not total: no row for {}{more}",
                    f.name,
                    Self::input_labels(&ins, &space.decode(i))
                ),
            ));
        }
        done(errs, || {
            FiniteFunction::new(iface, table.into_iter().map(|y| y.expect("total")).collect()).map_err(core(f.span))
        })
    }

    fn elab_linfn(&self, f: &LinFnDecl) -> EResult<LinearMap> {
        let iface = self.linear_box(&f.box_name, f.span, &format!("linear function `{}`", f.name))?;
        let c = Self::matrix(&f.c, iface.output_dim(), iface.input_dim(), f.span, "C")?;
        LinearMap::new(iface, c).map_err(core(f.span))
    }

    fn elab_behavior(&self, d: &Decl) -> EResult<Behavior> {
        match d {
            Decl::Moore(m) => self.elab_moore(m).map(Behavior::Moore),
            Decl::Lti(l) => self.elab_lti(l).map(Behavior::Lti),
            Decl::Fn(f) => self.elab_fn(f).map(Behavior::Function),
            Decl::LinFn(f) => self.elab_linfn(f).map(Behavior::Linear),
            _ => unreachable!(),
        }
    }

    pub fn behavior(&self, name: &str) -> EResult<Behavior> {
        self.top(Kind::Behavior, name, |d| self.elab_behavior(d))
    }

    /// The behaviors declared for a box, in source order.
    pub fn behaviors_for(&self, box_name: &str) -> Vec<&'m str> {
        self.model
            .decls
            .iter()
            .filter(|d| d.kind() == Kind::Behavior && d.box_name() == Some(box_name))
            .map(Decl::name)
            .collect()
    }

    fn system_at(&self, name: &str, at: Span) -> EResult<System> {
        if self.find(Kind::Behavior, name).is_some() {
            return self.reference(Kind::Behavior, name, at, |d| self.elab_behavior(d).map(|b| b.to_system()));
        }
        if let Some(Decl::Wiring(w)) = self.find(Kind::Wiring, name) {
            return self.composite(w).map_err(|_| {
                vec![Diagnostic::error(at, format!("composite of wiring `{name}` cannot be built"))
                    .with_related(w.span, format!("`{name}` is declared here"))]
            });
        }
        fail(at, format!("unknown system `{name}`: no behavior or wiring has this name"))
    }

    /// A behavior, or the composite of a wiring with its default behaviors.
    pub fn system(&self, name: &str) -> EResult<System> {
        if let Some(Decl::Wiring(w)) = self.find(Kind::Wiring, name) {
            if self.find(Kind::Behavior, name).is_none() {
                return self.composite(w);
            }
        }
        if self.find(Kind::Behavior, name).is_some() {
            return self.behavior(name).map(|b| b.to_system());
        }
        fail(Span { line: 1, col: 1 }, format!("the model has no behavior or wiring named `{name}`"))
    }

    fn composite(&self, w: &WiringDecl) -> EResult<System> {
        let flat = self.flatten_rec(w, None, &mut vec![w.name.clone()])?;
        let behaviors = self.default_behaviors(&flat, &[], w.span)?;
        compose_systems(&flat.diagram, &behaviors).map_err(core(w.span))
    }

    /// One system per inner box: the `using` choice if any, otherwise the
    /// only behavior declared for the box.
    pub fn default_behaviors(
        &self,
        flat: &FlatWiring,
        using: &[(String, String, Span)],
        at: Span,
    ) -> EResult<Vec<System>> {
        let mut errs = Vec::new();
        for (path, _, span) in using {
            if flat.slot(path).is_none() {
                errs.push(Diagnostic::error(
                    *span,
                    format!("`{path}` is not an inner box of the flattened wiring `{}`", flat.name),
                ));
            }
        }
        let mut out = Vec::new();
        for (alias, b) in flat.aliases.iter().zip(&flat.diagram.inner) {
            let sys = if let Some((_, sys, span)) = using.iter().find(|(p, _, _)| p == alias) {
                self.system_at(sys, *span)
            } else {
                match self.behaviors_for(&b.name)[..] {
                    [only] => self.system_at(only, at),
                    [] => fail(
                        at,
                        format!("inner box `{alias}` of `{}` has no behavior: declare one for box `{}`", flat.name, b.name),
                    ),
                    ref many => fail(
                        at,
                        format!(
                            "inner box `{alias}` of `{}` has several candidate behaviors ({}); choose one with `using {{ {alias} = .. }}`",
                            flat.name,
                            many.join(", ")
                        ),
                    ),
                }
            };
            if let Some(s) = gather(&mut errs, sys) {
                out.push(s);
            }
        }
        done(errs, || Ok(out))
    }

    /// Composite of an unflattened wiring with named systems, one per inner box.
    pub fn compose(&self, wiring: &str, systems: &[String]) -> EResult<System> {
        let flat = self.wiring(wiring)?;
        let at = match self.find(Kind::Wiring, wiring) {
            Some(d) => d.span(),
            None => Span { line: 1, col: 1 },
        };
        if systems.len() != flat.aliases.len() {
            return fail(
                at,
                format!(
                    "wiring `{wiring}` has {} inner boxes, but {} behaviors were given",
                    flat.aliases.len(),
                    systems.len()
                ),
            );
        }
        let parts = systems.iter().map(|s| self.system(s)).collect::<EResult<Vec<_>>>()?;
        compose_systems(&flat.diagram, &parts).map_err(core(at))
    }

    // ---- contracts ----

    fn coordinate(set: &SetExpr, at: Span) -> EResult<IntervalSet> {
        let r = match set {
            SetExpr::Full => Ok(IntervalSet::full()),
            SetExpr::Union(parts) => IntervalSet::from_parts(parts.iter().copied()),
            SetExpr::Braces(ps) => {
                let mut pts = Vec::new();
                for p in ps {
                    match p.parse::<f64>() {
                        Ok(x) if x.is_finite() => pts.push((x, x)),
                        _ => return fail(at, format!("`{p}` is not a number")),
                    }
                }
                IntervalSet::from_parts(pts)
            }
            SetExpr::Coords(_) => return fail(at, "nested coordinate lists are not allowed"),
        };
        r.map_err(core(at))
    }

    fn subset(port: &PortType, set: &SetExpr, at: Span) -> EResult<PortSubset> {
        match (port, set) {
            (p, SetExpr::Full) => Ok(PortSubset::full(p)),
            (PortType::Finite(s), SetExpr::Braces(ls)) => ls
                .iter()
                .map(|l| Self::label_index(s, l, at, "set"))
                .collect::<EResult<BTreeSet<_>>>()
                .map(PortSubset::Labels),
            (PortType::Finite(s), _) => {
                fail(at, format!("port of finite type {} takes a set of values `{{..}}`, not intervals", s.name))
            }
            (PortType::Lin(n), SetExpr::Coords(cs)) => {
                if cs.len() != *n {
                    return fail(at, format!("port has dimension {n}, but {} coordinate sets are given", cs.len()));
                }
                cs.iter().map(|c| Self::coordinate(c, at)).collect::<EResult<Vec<_>>>().map(PortSubset::Box)
            }
            (PortType::Lin(1), s) => Ok(PortSubset::Box(vec![Self::coordinate(s, at)?])),
            (PortType::Lin(n), _) => {
                fail(at, format!("port has dimension {n}; give one set per coordinate as `(.., ..)`"))
            }
        }
    }

    fn port_of(iface: &Interface, dir: Dir, index: usize, at: Span) -> EResult<&PortType> {
        let ports = match dir {
            Dir::In => &iface.inputs,
            Dir::Out => &iface.outputs,
        };
        ports.get(index).ok_or_else(|| {
            vec![Diagnostic::error(
                at,
                format!("`{dir}[{index}]` does not exist: box {} has {} such ports", iface.name, ports.len()),
            )]
        })
    }

    fn elab_contract(&self, c: &ContractDecl) -> EResult<StaticContract> {
        match &c.body {
            ContractExpr::Rel(rows) => {
                let iface = self.finite_box(&c.box_name, c.span, &format!("relation contract `{}`", c.name))?;
                let ins = Self::finite_sets(&iface.inputs);
                let outs = Self::finite_sets(&iface.outputs);
                let mut errs = Vec::new();
                let mut pairs = Relation::new();
                for (xs, ys, at) in rows {
                    let x = gather(&mut errs, Self::labels(&ins, xs, *at, "relation row inputs"));
                    let y = gather(&mut errs, Self::labels(&outs, ys, *at, "relation row outputs"));
                    if let (Some(x), Some(y)) = (x, y) {
                        pairs.insert((x, y));
                    }
                }
                done(errs, || StaticContract::relation(iface, pairs).map_err(core(c.span)))
            }
            ContractExpr::Indep(sets) => {
                let iface = self.box_ref(&c.box_name, c.span)?;
                let mut inputs: Vec<_> = iface.inputs.iter().map(PortSubset::full).collect();
                let mut outputs: Vec<_> = iface.outputs.iter().map(PortSubset::full).collect();
                let mut errs = Vec::new();
                let mut given: HashMap<(Dir, usize), Span> = HashMap::new();
                for ps in sets {
                    if let Some(prev) = given.insert((ps.dir, ps.index), ps.span) {
                        errs.push(
                            Diagnostic::error(ps.span, format!("`{}[{}]` is constrained twice", ps.dir, ps.index))
                                .with_related(prev, "first constrained here"),
                        );
                        continue;
                    }
                    let Some(port) = gather(&mut errs, Self::port_of(&iface, ps.dir, ps.index, ps.span)) else {
                        continue;
                    };
                    if let Some(s) = gather(&mut errs, Self::subset(port, &ps.set, ps.span)) {
                        match ps.dir {
                            Dir::In => inputs[ps.index] = s,
                            Dir::Out => outputs[ps.index] = s,
                        }
                    }
                }
                done(errs, || StaticContract::independent(iface, inputs, outputs).map_err(core(c.span)))
            }
        }
    }

    fn contract_ref(&self, name: &str, at: Span) -> EResult<StaticContract> {
        self.reference(Kind::Contract, name, at, |d| match d {
            Decl::Contract(c) => self.elab_contract(c),
            _ => unreachable!(),
        })
    }

    pub fn contract(&self, name: &str) -> EResult<StaticContract> {
        self.top(Kind::Contract, name, |d| match d {
            Decl::Contract(c) => self.elab_contract(c),
            _ => unreachable!(),
        })
    }

    /// Contracts declared for a box, in source order.
    pub fn contracts_for(&self, box_name: &str) -> Vec<&'m str> {
        self.model
            .decls
            .iter()
            .filter(|d| d.kind() == Kind::Contract && d.box_name() == Some(box_name))
            .map(Decl::name)
            .collect()
    }

    // ---- time contracts ----

    fn carriers(
        ports: &[PortType],
        dir: Dir,
        samples: &[Samples],
        at: Span,
        errs: &mut Vec<Diagnostic>,
    ) -> Vec<Carrier> {
        let mut out = Vec::new();
        for (i, p) in ports.iter().enumerate() {
            let given: Vec<&Samples> = samples.iter().filter(|s| s.dir == dir && s.index == i).collect();
            if given.len() > 1 {
                errs.push(
                    Diagnostic::error(given[1].span, format!("samples for `{dir}[{i}]` are given twice"))
                        .with_related(given[0].span, "first given here"),
                );
            }
            match (p, given.first()) {
                (PortType::Finite(s), None) => out.push(Carrier::Labels(s.clone())),
                (PortType::Finite(_), Some(s)) => errs.push(Diagnostic::error(
                    s.span,
                    format!("`{dir}[{i}]` is finite; samples are only for linear ports"),
                )),
                (PortType::Lin(n), Some(s)) => {
                    if let Some(bad) = s.points.iter().find(|p| p.len() != *n) {
                        errs.push(Diagnostic::error(
                            s.span,
                            format!("sample point has {} coordinates, port has dimension {n}", bad.len()),
                        ));
                    } else if s.points.is_empty() {
                        errs.push(Diagnostic::error(s.span, format!("`{dir}[{i}]` needs at least one sample")));
                    } else {
                        out.push(Carrier::Samples(s.points.clone()));
                    }
                }
                (PortType::Lin(_), None) => errs.push(Diagnostic::error(
                    at,
                    format!("linear port `{dir}[{i}]` needs sample points: add `samples {{ {dir}[{i}]: {{..}} }}`"),
                )),
            }
        }
        for s in samples {
            if s.dir == dir && s.index >= ports.len() {
                errs.push(Diagnostic::error(s.span, format!("`{}[{}]` does not exist", s.dir, s.index)));
            }
        }
        out
    }

    fn predicate(iface: &Interface, ps: &PortSet, want: Dir, role: &str) -> EResult<PortPredicate> {
        if ps.dir != want {
            return fail(ps.span, format!("{role} must constrain an {want}put port"));
        }
        let port = Self::port_of(iface, ps.dir, ps.index, ps.span)?;
        Ok(PortPredicate::new(ps.index, Self::subset(port, &ps.set, ps.span)?))
    }

    fn encode_seq(carriers: &[Carrier], seq: &[Vec<String>], at: Span) -> EResult<Vec<usize>> {
        let space = TupleSpace::new(carriers.iter().map(Carrier::len).collect());
        let labels: Vec<Vec<String>> = carriers.iter().map(Carrier::labels).collect();
        seq.iter()
            .map(|t| {
                if t.len() != carriers.len() {
                    return fail(
                        at,
                        format!("tuple {} has {} values, expected {}", show_tuple(t), t.len(), carriers.len()),
                    );
                }
                let idx = t
                    .iter()
                    .zip(&labels)
                    .map(|(v, ls)| {
                        ls.iter()
                            .position(|l| l == v)
                            .ok_or_else(|| vec![Diagnostic::error(at, format!("`{v}` is not a value of its port"))])
                    })
                    .collect::<EResult<Vec<_>>>()?;
                space.encode(&idx).map_err(core(at))
            })
            .collect()
    }

    fn elab_time(&self, t: &TimeContractDecl) -> EResult<TimeContract> {
        let iface = self.box_ref(&t.box_name, t.span)?;
        let mut errs = Vec::new();
        let ins = Self::carriers(&iface.inputs, Dir::In, &t.samples, t.span, &mut errs);
        let outs = Self::carriers(&iface.outputs, Dir::Out, &t.samples, t.span, &mut errs);
        let kind = match &t.expr {
            TimeExpr::Lift(c) => gather(&mut errs, self.contract_ref(c, t.span)).map(TimeContractKind::Lift),
            TimeExpr::Window { assume, guarantee, delay } => {
                let a = gather(&mut errs, Self::predicate(&iface, assume, Dir::In, "assume"));
                let g = gather(&mut errs, Self::predicate(&iface, guarantee, Dir::Out, "guarantee"));
                a.zip(g).map(|(assume, guarantee)| TimeContractKind::Window { assume, guarantee, delay: *delay })
            }
            TimeExpr::Implies { pattern, response, within } => {
                let ps: Vec<_> = pattern
                    .iter()
                    .filter_map(|p| gather(&mut errs, Self::predicate(&iface, p, Dir::In, "pattern")))
                    .collect();
                let r = gather(&mut errs, Self::predicate(&iface, response, Dir::Out, "response"));
                r.map(|response| TimeContractKind::Implies { pattern: ps, response, within: *within })
            }
            TimeExpr::Table(rows) => {
                let mut table = BTreeSet::new();
                if errs.is_empty() {
                    for (xs, ys, at) in rows {
                        if xs.len() != ys.len() || xs.is_empty() {
                            errs.push(Diagnostic::error(
                                *at,
                                "a table row needs input and output sequences of the same nonzero length",
                            ));
                            continue;
                        }
                        let x = gather(&mut errs, Self::encode_seq(&ins, xs, *at));
                        let y = gather(&mut errs, Self::encode_seq(&outs, ys, *at));
                        if let (Some(x), Some(y)) = (x, y) {
                            table.insert((x, y));
                        }
                    }
                }
                Some(TimeContractKind::Table(table))
            }
        };
        done(errs, || TimeContract::new(iface, ins, outs, kind.expect("checked"), t.horizon).map_err(core(t.span)))
    }

    pub fn time_contract(&self, name: &str) -> EResult<TimeContract> {
        self.top(Kind::TimeContract, name, |d| match d {
            Decl::TimeContract(t) => self.elab_time(t),
            _ => unreachable!(),
        })
    }

    // ---- security ----

    fn elab_kb(&self, k: &KbDecl) -> EResult<KnowledgeDatabase> {
        let iface = self.box_ref(&k.box_name, k.span)?;
        let mut errs = Vec::new();
        let mut entries = Vec::new();
        for (name, at) in &k.entries {
            if let Some(s) = gather(&mut errs, self.system_at(name, *at)) {
                if s.interface().same_ports(&iface) {
                    entries.push((name.clone(), s));
                } else {
                    errs.push(Diagnostic::error(
                        *at,
                        format!("`{name}` lives on {}, not on box `{}`", s.interface(), k.box_name),
                    ));
                }
            }
        }
        done(errs, || KnowledgeDatabase::new(iface, entries).map_err(core(k.span)))
    }

    pub fn kb(&self, name: &str) -> EResult<KnowledgeDatabase> {
        self.top(Kind::Kb, name, |d| match d {
            Decl::Kb(k) => self.elab_kb(k),
            _ => unreachable!(),
        })
    }

    fn elab_test(&self, t: &TestDecl) -> EResult<Test> {
        let iface = self.box_ref(&t.box_name, t.span)?;
        let kind = match &t.expr {
            TestExpr::Terminal => TestKind::Terminal,
            TestExpr::IoTable { horizon } => TestKind::IoTable { horizon: *horizon },
            TestExpr::Trace { init, inputs } if iface.all_finite() => {
                let sets = Self::finite_sets(&iface.inputs);
                let inputs = inputs
                    .iter()
                    .map(|x| Self::labels(&sets, x, t.span, "trace input"))
                    .collect::<EResult<Vec<_>>>()?;
                TestKind::Trace { init: init.clone(), inputs }
            }
            TestExpr::Trace { init, inputs } if iface.all_linear() => {
                if init.is_some() {
                    return fail(t.span, "traces of linear systems start from the zero state; drop `init`");
                }
                let dim = iface.input_dim();
                let mut vs = Vec::new();
                for x in inputs {
                    let v: Vec<f64> = x
                        .iter()
                        .map(|s| s.parse::<f64>().ok().filter(|v| v.is_finite()))
                        .collect::<Option<_>>()
                        .ok_or_else(|| {
                            vec![Diagnostic::error(t.span, format!("{} is not a vector of numbers", show_tuple(x)))]
                        })?;
                    if v.len() != dim {
                        return fail(
                            t.span,
                            format!("trace input {} has {} coordinates, expected {dim}", show_tuple(x), v.len()),
                        );
                    }
                    vs.push(DVector::from_vec(v));
                }
                TestKind::RealTrace { inputs: vs }
            }
            TestExpr::Trace { .. } => {
                return fail(t.span, "trace tests need a box whose ports are all finite or all linear")
            }
        };
        Ok(Test::new(&t.name, iface, kind))
    }

    pub fn test(&self, name: &str) -> EResult<Test> {
        self.top(Kind::Test, name, |d| match d {
            Decl::Test(t) => self.elab_test(t),
            _ => unreachable!(),
        })
    }

    fn elab_attack(&self, a: &AttackDecl) -> EResult<AttackPlan> {
        let Some(Decl::Wiring(w)) = self.find(Kind::Wiring, &a.wiring) else {
            return fail(a.span, format!("unknown wiring `{}`", a.wiring));
        };
        let flat = self.flatten_rec(w, None, &mut vec![w.name.clone()]).map_err(|_| {
            vec![Diagnostic::error(a.span, format!("wiring `{}` has errors", a.wiring))
                .with_related(w.span, format!("`{}` is declared here", a.wiring))]
        })?;
        let mut errs = Vec::new();
        let behaviors = gather(&mut errs, self.default_behaviors(&flat, &a.using, a.span));
        let mut rewrites = Vec::new();
        for (path, sys, at) in &a.rewrites {
            let Some(slot) = flat.slot(path) else {
                errs.push(Diagnostic::error(
                    *at,
                    format!(
                        "`{path}` is not an inner box of the flattened wiring `{}` (inner boxes: {})",
                        a.wiring,
                        flat.aliases.join(", ")
                    ),
                ));
                continue;
            };
            if let Some(s) = gather(&mut errs, self.system_at(sys, *at)) {
                rewrites.push((slot, s));
            }
        }
        let d = &flat.diagram;
        let mut rewirings = Vec::new();
        for c in &a.rewires {
            let Some(dest) = gather(
                &mut errs,
                self.resolve(&c.dest, End::Dest, &flat.aliases, &d.inner, &d.outer, c.span, &a.wiring),
            ) else {
                continue;
            };
            let r = match &c.src {
                Endpoint::Const(v) => {
                    let ty = d.port_type(dest).expect("resolved");
                    let value = match ty {
                        PortType::Finite(s) => Self::label_index(s, v, c.span, "constant").map(ConstValue::Label),
                        PortType::Lin(n) => match v.parse::<f64>() {
                            Ok(x) if x.is_finite() => Ok(ConstValue::Real(vec![x; *n])),
                            _ => fail(c.span, format!("constant `{v}` for a linear port must be a number")),
                        },
                    };
                    value.map(|v| Rewiring::constant(dest, v))
                }
                src => self
                    .resolve(src, End::Src, &flat.aliases, &d.inner, &d.outer, c.span, &a.wiring)
                    .map(|s| Rewiring::port(dest, s)),
            };
            if let Some(r) = gather(&mut errs, r) {
                rewirings.push(r);
            }
        }
        done(errs, || {
            Ok(AttackPlan {
                name: a.name.clone(),
                wiring: flat,
                behaviors: behaviors.expect("checked"),
                rewrites,
                rewirings,
            })
        })
    }

    pub fn attack(&self, name: &str) -> EResult<AttackPlan> {
        self.top(Kind::Attack, name, |d| match d {
            Decl::Attack(a) => self.elab_attack(a),
            _ => unreachable!(),
        })
    }

    fn check_decl(&self, d: &Decl) -> Vec<Diagnostic> {
        let r: EResult<()> = match d {
            Decl::Type(t) => self.elab_type(t).map(drop),
            Decl::Box(b) => self.elab_box(b).map(drop),
            Decl::Wiring(w) => self.elab_wiring(w).map(drop),
            Decl::Moore(_) | Decl::Lti(_) | Decl::Fn(_) | Decl::LinFn(_) => self.elab_behavior(d).map(drop),
            Decl::Contract(c) => self.elab_contract(c).map(drop),
            Decl::TimeContract(t) => self.elab_time(t).map(drop),
            Decl::Kb(k) => self.elab_kb(k).map(drop),
            Decl::Test(t) => self.elab_test(t).map(drop),
            Decl::Attack(a) => self.elab_attack(a).and_then(|p| p.run().map(drop).map_err(core(a.span))),
        };
        r.err().unwrap_or_default()
    }
}

/// Every problem of a model: duplicate names, unresolved references, wiring
/// violations, malformed behaviors and contracts.
pub fn typecheck_model(m: &Model) -> Vec<Diagnostic> {
    let el = Elaborator::new(m);
    let mut out = Vec::new();
    let mut seen: HashMap<(Kind, &str), Span> = HashMap::new();
    let mut implemented: HashMap<&str, Span> = HashMap::new();
    for d in &m.decls {
        if let Some(prev) = seen.insert((d.kind(), d.name()), d.span()) {
            out.push(
                Diagnostic::error(d.span(), format!("{} `{}` is declared twice", d.kind(), d.name()))
                    .with_related(prev, "first declared here"),
            );
        }
        if let Decl::Wiring(w) = d {
            if let Some(prev) = implemented.insert(&w.outer, w.span) {
                out.push(
                    Diagnostic::warning(
                        w.span,
                        format!("box `{}` has several implementing wirings; flattening leaves it opaque", w.outer),
                    )
                    .with_related(prev, "another implementation"),
                );
            }
        }
        out.extend(el.check_decl(d));
    }
    out
}

/// Flattens a wiring of the model; see [`Elaborator::flatten`].
pub fn flatten(m: &Model, wiring: &str, depth: Option<usize>) -> EResult<FlatWiring> {
    Elaborator::new(m).flatten(wiring, depth)
}
