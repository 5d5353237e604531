use std::fmt::Write;

use super::ast::*;

fn join<T>(items: &[T], sep: &str, f: impl Fn(&T) -> String) -> String {
    items.iter().map(f).collect::<Vec<_>>().join(sep)
}

fn tuple(items: &[impl ToString]) -> String {
    format!("({})", join(items, ", ", ToString::to_string))
}

fn matrix(m: &Matrix) -> String {
    format!("[{}]", join(m, ", ", |r| format!("[{}]", join(r, ", ", f64::to_string))))
}

fn set_expr(s: &SetExpr) -> String {
    match s {
        SetExpr::Full => "full".into(),
        SetExpr::Braces(v) => format!("{{{}}}", v.join(", ")),
        SetExpr::Union(parts) => join(parts, " ∪ ", |(a, b)| format!("[{a}, {b}]")),
        SetExpr::Coords(cs) => format!("({})", join(cs, ", ", set_expr)),
    }
}

fn port_set(p: &PortSet, sep: &str) -> String {
    format!("{}[{}]{sep} {}", p.dir, p.index, set_expr(&p.set))
}

fn tuple_seq(s: &[Vec<String>]) -> String {
    format!("[{}]", join(s, ", ", |t| tuple(t)))
}

fn connection(c: &Connection) -> String {
    format!("{} <- {}", c.dest, c.src)
}

/// Canonical text of a model. Parsing it gives back an equal model.
pub fn render_model(m: &Model) -> String {
    let mut out = String::new();
    for (i, d) in m.decls.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        render_decl(&mut out, d);
    }
    out
}

fn render_decl(out: &mut String, d: &Decl) {
    // writing to a String cannot fail
    let _ = match d {
        Decl::Type(t) => match &t.ty {
            TypeExpr::Fin(ls) => writeln!(out, "type {} = fin {{{}}}", t.name, ls.join(", ")),
            TypeExpr::Lin(k) => writeln!(out, "type {} = lin {k}", t.name),
        },
        Decl::Box(b) => writeln!(out, "box {} (in: {}; out: {})", b.name, b.inputs.join(", "), b.outputs.join(", ")),
        Decl::Wiring(w) => {
            let inner = join(&w.inner, ", ", |b| {
                if b.alias == b.box_name {
                    b.alias.clone()
                } else {
                    format!("{}: {}", b.alias, b.box_name)
                }
            });
            let _ = writeln!(out, "wiring {} : [{inner}] -> {} {{", w.name, w.outer);
            for c in &w.connections {
                let _ = writeln!(out, "  {};", connection(c));
            }
            writeln!(out, "}}")
        }
        Decl::Moore(m) => {
            let _ = writeln!(out, "moore {} for {} {{", m.name, m.box_name);
            let _ = writeln!(out, "  states {{{}}};", m.states.join(", "));
            let _ = writeln!(out, "  init {};", m.init);
            let _ = writeln!(out, "  update {{");
            for r in &m.update {
                let _ = writeln!(out, "    ({}, {}) -> {};", r.state, tuple(&r.input), r.next);
            }
            let _ = writeln!(out, "  }}\n  readout {{");
            for r in &m.readout {
                let _ = writeln!(out, "    {} -> {};", r.state, tuple(&r.output));
            }
            writeln!(out, "  }}\n}}")
        }
        Decl::Lti(l) => writeln!(
            out,
            "lti {} for {} {{\n  A = {};\n  B = {};\n  C = {};\n}}",
            l.name,
            l.box_name,
            matrix(&l.a),
            matrix(&l.b),
            matrix(&l.c)
        ),
        Decl::Fn(f) => {
            let _ = writeln!(out, "fn {} for {} {{\n  table {{", f.name, f.box_name);
            for r in &f.rows {
                let _ = writeln!(out, "    {} -> {};", tuple(&r.input), tuple(&r.output));
            }
            writeln!(out, "  }}\n}}")
        }
        Decl::LinFn(f) => writeln!(out, "linfn {} for {} {{\n  C = {};\n}}", f.name, f.box_name, matrix(&f.c)),
        Decl::Contract(c) => {
            let _ = write!(out, "contract {} for {} = ", c.name, c.box_name);
            match &c.body {
                ContractExpr::Rel(rows) => {
                    let _ = writeln!(out, "rel {{");
                    let n = rows.len();
                    for (i, (xs, ys, _)) in rows.iter().enumerate() {
                        let comma = if i + 1 < n { "," } else { "" };
                        let _ = writeln!(out, "  ({}; {}){comma}", xs.join(", "), ys.join(", "));
                    }
                    writeln!(out, "}}")
                }
                ContractExpr::Indep(ps) => {
                    let _ = writeln!(out, "indep {{");
                    for p in ps {
                        let _ = writeln!(out, "  {};", port_set(p, ":"));
                    }
                    writeln!(out, "}}")
                }
            }
        }
        Decl::TimeContract(t) => {
            let _ = write!(out, "timecontract {} for {} = ", t.name, t.box_name);
            let _ = match &t.expr {
                TimeExpr::Lift(c) => write!(out, "lift({c})"),
                TimeExpr::Window { assume, guarantee, delay } => write!(
                    out,
                    "window(assume={}, guarantee={}, delay={delay})",
                    port_set(assume, " in"),
                    port_set(guarantee, " in")
                ),
                TimeExpr::Implies { pattern, response, within } => write!(
                    out,
                    "implies(pattern=[{}], response={}, within={within})",
                    join(pattern, ", ", |p| port_set(p, " in")),
                    port_set(response, " in")
                ),
                TimeExpr::Table(rows) => {
                    let _ = writeln!(out, "table {{");
                    for (xs, ys, _) in rows {
                        let _ = writeln!(out, "  {} -> {};", tuple_seq(xs), tuple_seq(ys));
                    }
                    write!(out, "}}")
                }
            };
            if !t.samples.is_empty() {
                let _ = writeln!(out, "\nsamples {{");
                for s in &t.samples {
                    let pts = join(&s.points, ", ", |p| if p.len() == 1 { p[0].to_string() } else { tuple(p) });
                    let _ = writeln!(out, "  {}[{}]: {{{pts}}};", s.dir, s.index);
                }
                let _ = write!(out, "}}");
            }
            if let Some(h) = t.horizon {
                let _ = write!(out, " horizon {h}");
            }
            writeln!(out)
        }
        Decl::Kb(k) => {
            writeln!(out, "kb {} for {} {{ {} }}", k.name, k.box_name, join(&k.entries, ", ", |(e, _)| e.clone()))
        }
        Decl::Test(t) => {
            let body = match &t.expr {
                TestExpr::Terminal => "terminal".to_string(),
                TestExpr::Trace { init, inputs } => {
                    let init = init.as_ref().map(|s| format!("init={s}, ")).unwrap_or_default();
                    format!("trace({init}inputs={})", tuple_seq(inputs))
                }
                TestExpr::IoTable { horizon } => format!("iotable(horizon={horizon})"),
            };
            writeln!(out, "test {} for {} = {body}", t.name, t.box_name)
        }
        Decl::Attack(a) => {
            let _ = write!(out, "attack {} on {}", a.name, a.wiring);
            if !a.using.is_empty() {
                let _ = write!(out, " using {{ {} }}", join(&a.using, "; ", |(p, s, _)| format!("{p} = {s}")));
            }
            let _ = writeln!(out, " {{");
            for (p, s, _) in &a.rewrites {
                let _ = writeln!(out, "  rewrite {p} with {s};");
            }
            if !a.rewires.is_empty() {
                let _ = writeln!(out, "  rewire {{");
                for c in &a.rewires {
                    let _ = writeln!(out, "    {};", connection(c));
                }
                let _ = writeln!(out, "  }}");
            }
            writeln!(out, "}}")
        }
    };
}

#[cfg(test)]
mod tests {
    use super::super::parse_model;
    use super::*;

    const SAMPLE: &str = r#"
type Bool = fin {0, 1}
type R = lin 1
box Gate (in: Bool, Bool; out: Bool)
box Plant (in: R; out: R)
box Top (in: Bool; out: Bool)
wiring W : [g: Gate, Gate] -> Top { g.in[0] <- outer.in[0]; g.in[1] <- Gate.out[0];
  Gate.in[0] <- g.out[0]; Gate.in[1] <- outer.in[0]; outer.out[0] <- Gate.out[0] }
moore And for Gate { states {lo, hi}; init lo;
  update { (_, (1, 1)) -> hi; (_, (0, _)) -> lo; (_, (1, 0)) -> lo }
  readout { lo -> (0); hi -> (1) } }
lti P for Plant { A = [[-0.313]]; B = [[1e-3]]; C = [[1]] }
fn Xor for Gate { table { (0, 0) -> (0); (1, 1) -> (0); (_, _) -> (1) } }
linfn Id for Plant { C = [[1]] }
contract R1 for Gate = rel { (0, 0; 1), (1, 1; 0) }
contract R2 for Plant = indep { in[0]: [0, 100] ∪ [200, 300]; out[0]: full }
timecontract T1 for Top = implies(pattern=[in[0] in {1}, in[0] in {1}], response=out[0] in {0}, within=5) horizon 7
timecontract T2 for Plant = lift(R2) samples { in[0]: {2, 2.5}; out[0]: {10} }
timecontract T3 for Top = table { [(1), (1)] -> [(0), (1)]; }
kb K for Gate { And, Xor }
test t1 for Gate = trace(init=lo, inputs=[(1, 1), (0, 1)])
test t2 for Gate = iotable(horizon=3)
attack X on W using { g = And } { rewrite g with Xor; rewire { g.in[1] <- const 0; Gate.in[0] <- outer.in[0] } }
"#;

    #[test]
    fn round_trip() {
        let m = parse_model(SAMPLE).unwrap();
        let text = render_model(&m);
        let again = parse_model(&text).unwrap_or_else(|e| panic!("{text}\n{e:?}"));
        assert_eq!(m, again);
        assert_eq!(text, render_model(&again));
    }
}
