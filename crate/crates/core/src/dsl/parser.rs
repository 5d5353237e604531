use super::ast::*;
use super::lexer::{lex, Tok, Token};
use super::Diagnostic;

pub(crate) const KEYWORDS: [&str; 12] =
    ["type", "box", "wiring", "moore", "lti", "fn", "linfn", "contract", "timecontract", "kb", "test", "attack"];

type PResult<T> = Result<T, Diagnostic>;

struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

/// Parses a model file. Syntax errors are collected per declaration: after
/// an error the parser skips to the next top-level keyword.
pub fn parse_model(text: &str) -> Result<Model, Vec<Diagnostic>> {
    let toks = lex(text).map_err(|d| vec![d])?;
    let mut p = Parser { toks, pos: 0 };
    let mut decls = Vec::new();
    let mut errors = Vec::new();
    while !p.at_eof() {
        let start = p.pos;
        match p.decl() {
            Ok(d) => decls.push(d),
            Err(e) => {
                errors.push(e);
                p.recover(start);
            }
        }
    }
    if errors.is_empty() {
        Ok(Model { decls })
    } else {
        Err(errors)
    }
}

fn is_keyword(t: &Tok) -> bool {
    matches!(t, Tok::Ident(s) if KEYWORDS.contains(&s.as_str()))
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        let i = (self.pos + k).min(self.toks.len() - 1);
        &self.toks[i].tok
    }

    fn span(&self) -> Span {
        self.toks[self.pos].span
    }

    fn at_eof(&self) -> bool {
        *self.peek() == Tok::Eof
    }

    fn advance(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if !self.at_eof() {
            self.pos += 1;
        }
        t
    }

    fn recover(&mut self, start: usize) {
        let mut depth: i64 = 0;
        for t in &self.toks[start..self.pos] {
            match t.tok {
                Tok::Sym('{') => depth += 1,
                Tok::Sym('}') => depth -= 1,
                _ => {}
            }
        }
        if self.pos == start {
            self.advance();
        }
        while !self.at_eof() {
            match self.peek() {
                Tok::Sym('{') => depth += 1,
                Tok::Sym('}') => depth -= 1,
                t if depth <= 0 && is_keyword(t) => return,
                _ => {}
            }
            self.advance();
        }
    }

    fn unexpected<T>(&self, wanted: &str) -> PResult<T> {
        Err(Diagnostic::error(self.span(), format!("expected {wanted}, found {}", self.peek())))
    }

    fn eat_sym(&mut self, c: char) -> bool {
        if *self.peek() == Tok::Sym(c) {
            self.advance();
            true
        } else {
            false
        }
    }

    fn sym(&mut self, c: char) -> PResult<()> {
        if self.eat_sym(c) {
            Ok(())
        } else {
            self.unexpected(&format!("`{c}`"))
        }
    }

    fn tok(&mut self, t: Tok) -> PResult<()> {
        if *self.peek() == t {
            self.advance();
            Ok(())
        } else {
            self.unexpected(&t.to_string())
        }
    }

    fn is_word(&self, w: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == w)
    }

    fn eat_word(&mut self, w: &str) -> bool {
        if self.is_word(w) {
            self.advance();
            true
        } else {
            false
        }
    }

    fn word(&mut self, w: &str) -> PResult<()> {
        if self.eat_word(w) {
            Ok(())
        } else {
            self.unexpected(&format!("`{w}`"))
        }
    }

    fn ident(&mut self) -> PResult<String> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.advance();
                Ok(s)
            }
            _ => self.unexpected("a name"),
        }
    }

    /// A declared name; keywords are reserved.
    fn name(&mut self) -> PResult<String> {
        let at = self.span();
        let s = self.ident()?;
        if KEYWORDS.contains(&s.as_str()) {
            return Err(Diagnostic::error(at, format!("`{s}` is a keyword and cannot be a name")));
        }
        Ok(s)
    }

    fn label(&mut self) -> PResult<String> {
        match self.peek().clone() {
            Tok::Ident(s) | Tok::Number(s) => {
                self.advance();
                Ok(s)
            }
            _ => self.unexpected("a value"),
        }
    }

    fn pattern(&mut self) -> PResult<Pattern> {
        let l = self.label()?;
        Ok(if l == "_" { Pattern::Any } else { Pattern::Value(l) })
    }

    fn usize(&mut self) -> PResult<usize> {
        let at = self.span();
        match self.peek().clone() {
            Tok::Number(s) => {
                self.advance();
                s.parse().map_err(|_| Diagnostic::error(at, format!("expected a non-negative integer, found {s}")))
            }
            _ => self.unexpected("an integer"),
        }
    }

    fn float(&mut self) -> PResult<f64> {
        let at = self.span();
        match self.peek().clone() {
            Tok::Number(s) => {
                self.advance();
                s.parse::<f64>()
                    .ok()
                    .filter(|x| x.is_finite())
                    .ok_or_else(|| Diagnostic::error(at, format!("number {s} is out of range")))
            }
            _ => self.unexpected("a number"),
        }
    }

    /// `item (sep item)*` up to `close`, allowing an empty list and a
    /// trailing separator. Consumes `close`.
    fn list<T>(&mut self, sep: char, close: char, mut item: impl FnMut(&mut Self) -> PResult<T>) -> PResult<Vec<T>> {
        let mut out = Vec::new();
        loop {
            if self.eat_sym(close) {
                return Ok(out);
            }
            out.push(item(self)?);
            if !self.eat_sym(sep) {
                self.sym(close)?;
                return Ok(out);
            }
        }
    }

    fn decl(&mut self) -> PResult<Decl> {
        let span = self.span();
        let kw = match self.peek() {
            Tok::Ident(s) if KEYWORDS.contains(&s.as_str()) => s.clone(),
            _ => return self.unexpected("a declaration"),
        };
        self.advance();
        let d = match kw.as_str() {
            "type" => Decl::Type(self.type_decl(span)?),
            "box" => Decl::Box(self.box_decl(span)?),
            "wiring" => Decl::Wiring(self.wiring_decl(span)?),
            "moore" => Decl::Moore(self.moore_decl(span)?),
            "lti" => Decl::Lti(self.lti_decl(span)?),
            "fn" => Decl::Fn(self.fn_decl(span)?),
            "linfn" => Decl::LinFn(self.linfn_decl(span)?),
            "contract" => Decl::Contract(self.contract_decl(span)?),
            "timecontract" => Decl::TimeContract(self.time_decl(span)?),
            "kb" => Decl::Kb(self.kb_decl(span)?),
            "test" => Decl::Test(self.test_decl(span)?),
            _ => Decl::Attack(self.attack_decl(span)?),
        };
        self.eat_sym(';');
        Ok(d)
    }

    fn type_decl(&mut self, span: Span) -> PResult<TypeDecl> {
        let name = self.name()?;
        self.sym('=')?;
        let ty = if self.eat_word("fin") {
            self.sym('{')?;
            TypeExpr::Fin(self.list(',', '}', Self::label)?)
        } else if self.eat_word("lin") {
            TypeExpr::Lin(self.usize()?)
        } else {
            return self.unexpected("`fin` or `lin`");
        };
        Ok(TypeDecl { name, ty, span })
    }

    fn box_decl(&mut self, span: Span) -> PResult<BoxDecl> {
        let name = self.name()?;
        self.sym('(')?;
        self.word("in")?;
        self.sym(':')?;
        let inputs = self.type_list(';')?;
        self.word("out")?;
        self.sym(':')?;
        let outputs = self.type_list(')')?;
        Ok(BoxDecl { name, inputs, outputs, span })
    }

    fn type_list(&mut self, close: char) -> PResult<Vec<String>> {
        self.list(',', close, Self::ident)
    }

    /// `a.b.c` up to (not including) a `.in[` / `.out[` port suffix.
    fn path(&mut self) -> PResult<String> {
        let mut s = self.ident()?;
        while *self.peek() == Tok::Sym('.')
            && !(matches!(self.peek_at(1), Tok::Ident(w) if w == "in" || w == "out")
                && *self.peek_at(2) == Tok::Sym('['))
        {
            self.advance();
            s.push('.');
            s.push_str(&self.ident()?);
        }
        Ok(s)
    }

    fn dir(&mut self) -> PResult<Dir> {
        if self.eat_word("in") {
            Ok(Dir::In)
        } else if self.eat_word("out") {
            Ok(Dir::Out)
        } else {
            self.unexpected("`in` or `out`")
        }
    }

    fn port(&mut self) -> PResult<(Dir, usize)> {
        let d = self.dir()?;
        self.sym('[')?;
        let i = self.usize()?;
        self.sym(']')?;
        Ok((d, i))
    }

    fn endpoint(&mut self) -> PResult<Endpoint> {
        if self.eat_word("const") {
            return Ok(Endpoint::Const(self.label()?));
        }
        let path = self.path()?;
        self.sym('.')?;
        let (d, i) = self.port()?;
        Ok(if path == "outer" { Endpoint::Outer(d, i) } else { Endpoint::Inner(path, d, i) })
    }

    fn connection(&mut self) -> PResult<Connection> {
        let span = self.span();
        let dest = self.endpoint()?;
        self.tok(Tok::LArrow)?;
        let src = self.endpoint()?;
        Ok(Connection { dest, src, span })
    }

    fn wiring_decl(&mut self, span: Span) -> PResult<WiringDecl> {
        let name = self.name()?;
        self.sym(':')?;
        self.sym('[')?;
        let inner = self.list(',', ']', |p| {
            let span = p.span();
            let alias = p.path()?;
            let box_name = if p.eat_sym(':') {
                p.ident()?
            } else if alias.contains('.') {
                return Err(Diagnostic::error(span, format!("dotted alias `{alias}` needs `: Box`")));
            } else {
                alias.clone()
            };
            Ok(InnerBox { alias, box_name, span })
        })?;
        self.tok(Tok::Arrow)?;
        let outer = self.ident()?;
        self.sym('{')?;
        let connections = self.list(';', '}', Self::connection)?;
        Ok(WiringDecl { name, inner, outer, connections, span })
    }

    fn for_box(&mut self) -> PResult<(String, String)> {
        let name = self.name()?;
        self.word("for")?;
        let b = self.ident()?;
        Ok((name, b))
    }

    fn tuple<T>(&mut self, item: impl FnMut(&mut Self) -> PResult<T>) -> PResult<Vec<T>> {
        self.sym('(')?;
        self.list(',', ')', item)
    }

    fn moore_decl(&mut self, span: Span) -> PResult<MooreDecl> {
        let (name, box_name) = self.for_box()?;
        self.sym('{')?;
        self.word("states")?;
        self.sym('{')?;
        let states = self.list(',', '}', Self::label)?;
        self.eat_sym(';');
        self.word("init")?;
        let init = self.label()?;
        self.eat_sym(';');
        self.word("update")?;
        self.sym('{')?;
        let update = self.list(';', '}', |p| {
            let span = p.span();
            p.sym('(')?;
            let state = p.pattern()?;
            p.sym(',')?;
            let input = p.tuple(Self::pattern)?;
            p.sym(')')?;
            p.tok(Tok::Arrow)?;
            let next = p.label()?;
            Ok(UpdateRow { state, input, next, span })
        })?;
        self.eat_sym(';');
        self.word("readout")?;
        self.sym('{')?;
        let readout = self.list(';', '}', |p| {
            let span = p.span();
            let state = p.label()?;
            p.tok(Tok::Arrow)?;
            let output = p.tuple(Self::label)?;
            Ok(ReadoutRow { state, output, span })
        })?;
        self.eat_sym(';');
        self.sym('}')?;
        Ok(MooreDecl { name, box_name, states, init, update, readout, span })
    }

    fn matrix(&mut self) -> PResult<Matrix> {
        self.sym('[')?;
        self.list(',', ']', |p| {
            p.sym('[')?;
            p.list(',', ']', Self::float)
        })
    }

    fn assign_matrix(&mut self, name: &str) -> PResult<Matrix> {
        self.word(name)?;
        self.sym('=')?;
        let m = self.matrix()?;
        self.eat_sym(';');
        Ok(m)
    }

    fn lti_decl(&mut self, span: Span) -> PResult<LtiDecl> {
        let (name, box_name) = self.for_box()?;
        self.sym('{')?;
        let a = self.assign_matrix("A")?;
        let b = self.assign_matrix("B")?;
        let c = self.assign_matrix("C")?;
        self.sym('}')?;
        Ok(LtiDecl { name, box_name, a, b, c, span })
    }

    fn fn_decl(&mut self, span: Span) -> PResult<FnDecl> {
        let (name, box_name) = self.for_box()?;
        self.sym('{')?;
        self.word("table")?;
        self.sym('{')?;
        let rows = self.list(';', '}', |p| {
            let span = p.span();
            let input = p.tuple(Self::pattern)?;
            p.tok(Tok::Arrow)?;
            let output = p.tuple(Self::label)?;
            Ok(FnRow { input, output, span })
        })?;
        self.eat_sym(';');
        self.sym('}')?;
        Ok(FnDecl { name, box_name, rows, span })
    }

    fn linfn_decl(&mut self, span: Span) -> PResult<LinFnDecl> {
        let (name, box_name) = self.for_box()?;
        self.sym('{')?;
        let c = self.assign_matrix("C")?;
        self.sym('}')?;
        Ok(LinFnDecl { name, box_name, c, span })
    }

    fn interval(&mut self) -> PResult<(f64, f64)> {
        let at = self.span();
        self.sym('[')?;
        let lo = self.float()?;
        self.sym(',')?;
        let hi = self.float()?;
        self.sym(']')?;
        if lo > hi {
            return Err(Diagnostic::error(at, format!("interval [{lo}, {hi}] has lower end above upper end")));
        }
        Ok((lo, hi))
    }

    fn set_expr(&mut self) -> PResult<SetExpr> {
        match self.peek() {
            Tok::Ident(w) if w == "full" => {
                self.advance();
                Ok(SetExpr::Full)
            }
            Tok::Sym('{') => {
                self.advance();
                Ok(SetExpr::Braces(self.list(',', '}', Self::label)?))
            }
            Tok::Sym('(') => Ok(SetExpr::Coords(self.tuple(Self::set_expr)?)),
            Tok::Sym('[') => {
                let mut parts = vec![self.interval()?];
                while *self.peek() == Tok::Union {
                    self.advance();
                    parts.push(self.interval()?);
                }
                Ok(SetExpr::Union(parts))
            }
            _ => self.unexpected("a set (`full`, `{..}`, `[lo,hi]` or `(..)`)"),
        }
    }

    fn port_set(&mut self, sep: &str) -> PResult<PortSet> {
        let span = self.span();
        let (dir, index) = self.port()?;
        if sep == ":" {
            self.sym(':')?;
        } else {
            self.word(sep)?;
        }
        let set = self.set_expr()?;
        Ok(PortSet { dir, index, set, span })
    }

    fn contract_decl(&mut self, span: Span) -> PResult<ContractDecl> {
        let (name, box_name) = self.for_box()?;
        self.sym('=')?;
        let body = if self.eat_word("rel") {
            self.sym('{')?;
            ContractExpr::Rel(self.list(',', '}', |p| {
                let span = p.span();
                p.sym('(')?;
                let mut xs = Vec::new();
                while !matches!(p.peek(), Tok::Sym(';')) {
                    xs.push(p.label()?);
                    if !p.eat_sym(',') {
                        break;
                    }
                }
                p.sym(';')?;
                let ys = p.list(',', ')', Self::label)?;
                Ok((xs, ys, span))
            })?)
        } else if self.eat_word("indep") {
            self.sym('{')?;
            ContractExpr::Indep(self.list(';', '}', |p| p.port_set(":"))?)
        } else {
            return self.unexpected("`rel` or `indep`");
        };
        Ok(ContractDecl { name, box_name, body, span })
    }

    fn keyed<T>(&mut self, key: &str, value: impl FnOnce(&mut Self) -> PResult<T>) -> PResult<T> {
        self.word(key)?;
        self.sym('=')?;
        value(self)
    }

    fn tuple_seq(&mut self) -> PResult<Vec<Vec<String>>> {
        self.sym('[')?;
        self.list(',', ']', |p| p.tuple(Self::label))
    }

    fn time_decl(&mut self, span: Span) -> PResult<TimeContractDecl> {
        let (name, box_name) = self.for_box()?;
        self.sym('=')?;
        let expr = match self.ident()?.as_str() {
            "lift" => {
                self.sym('(')?;
                let c = self.ident()?;
                self.sym(')')?;
                TimeExpr::Lift(c)
            }
            "window" => {
                self.sym('(')?;
                let assume = self.keyed("assume", |p| p.port_set("in"))?;
                self.sym(',')?;
                let guarantee = self.keyed("guarantee", |p| p.port_set("in"))?;
                self.sym(',')?;
                let delay = self.keyed("delay", Self::usize)?;
                self.sym(')')?;
                TimeExpr::Window { assume, guarantee, delay }
            }
            "implies" => {
                self.sym('(')?;
                let pattern = self.keyed("pattern", |p| {
                    p.sym('[')?;
                    p.list(',', ']', |p| p.port_set("in"))
                })?;
                self.sym(',')?;
                let response = self.keyed("response", |p| p.port_set("in"))?;
                self.sym(',')?;
                let within = self.keyed("within", Self::usize)?;
                self.sym(')')?;
                TimeExpr::Implies { pattern, response, within }
            }
            "table" => {
                self.sym('{')?;
                TimeExpr::Table(self.list(';', '}', |p| {
                    let span = p.span();
                    let xs = p.tuple_seq()?;
                    p.tok(Tok::Arrow)?;
                    let ys = p.tuple_seq()?;
                    Ok((xs, ys, span))
                })?)
            }
            other => {
                return Err(Diagnostic::error(
                    span,
                    format!("unknown time contract `{other}`; expected lift, window, implies or table"),
                ))
            }
        };
        let mut samples = Vec::new();
        if self.eat_word("samples") {
            self.sym('{')?;
            samples = self.list(';', '}', |p| {
                let span = p.span();
                let (dir, index) = p.port()?;
                p.sym(':')?;
                p.sym('{')?;
                let points = p.list(',', '}', |p| {
                    if *p.peek() == Tok::Sym('(') {
                        p.tuple(Self::float)
                    } else {
                        Ok(vec![p.float()?])
                    }
                })?;
                Ok(Samples { dir, index, points, span })
            })?;
        }
        let horizon = if self.eat_word("horizon") { Some(self.usize()?) } else { None };
        Ok(TimeContractDecl { name, box_name, expr, samples, horizon, span })
    }

    fn kb_decl(&mut self, span: Span) -> PResult<KbDecl> {
        let (name, box_name) = self.for_box()?;
        self.sym('{')?;
        let entries = self.list(',', '}', |p| {
            let at = p.span();
            Ok((p.ident()?, at))
        })?;
        Ok(KbDecl { name, box_name, entries, span })
    }

    fn test_decl(&mut self, span: Span) -> PResult<TestDecl> {
        let (name, box_name) = self.for_box()?;
        self.sym('=')?;
        let expr = if self.eat_word("terminal") {
            TestExpr::Terminal
        } else if self.eat_word("trace") {
            self.sym('(')?;
            let init = if self.is_word("init") {
                let s = self.keyed("init", Self::label)?;
                self.sym(',')?;
                Some(s)
            } else {
                None
            };
            let inputs = self.keyed("inputs", Self::tuple_seq)?;
            self.sym(')')?;
            TestExpr::Trace { init, inputs }
        } else if self.eat_word("iotable") {
            self.sym('(')?;
            let horizon = self.keyed("horizon", Self::usize)?;
            self.sym(')')?;
            TestExpr::IoTable { horizon }
        } else {
            return self.unexpected("`terminal`, `trace` or `iotable`");
        };
        Ok(TestDecl { name, box_name, expr, span })
    }

    fn attack_decl(&mut self, span: Span) -> PResult<AttackDecl> {
        let name = self.name()?;
        self.word("on")?;
        let wiring = self.ident()?;
        let mut using = Vec::new();
        if self.eat_word("using") {
            self.sym('{')?;
            using = self.list(';', '}', |p| {
                let at = p.span();
                let path = p.path()?;
                p.sym('=')?;
                Ok((path, p.ident()?, at))
            })?;
        }
        self.sym('{')?;
        let mut rewrites = Vec::new();
        let mut rewires = Vec::new();
        loop {
            if self.eat_sym('}') {
                break;
            }
            let at = self.span();
            if self.eat_word("rewrite") {
                let path = self.path()?;
                self.word("with")?;
                rewrites.push((path, self.ident()?, at));
            } else if self.eat_word("rewire") {
                self.sym('{')?;
                rewires.extend(self.list(';', '}', Self::connection)?);
            } else {
                return self.unexpected("`rewrite`, `rewire` or `}`");
            }
            if !self.eat_sym(';') && *self.peek() != Tok::Sym('}') {
                return self.unexpected("`;` or `}`");
            }
        }
        Ok(AttackDecl { name, wiring, using, rewrites, rewires, span })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file() {
        assert_eq!(parse_model("").unwrap(), Model::default());
        assert_eq!(parse_model("  # only a comment\n").unwrap(), Model::default());
    }

    #[test]
    fn wiring_with_aliases() {
        let m =
            parse_model("wiring W : [A, b2: B, X.Y: C] -> O { A.in[0] <- outer.in[1]; outer.out[0] <- X.Y.out[0] }")
                .unwrap();
        let Decl::Wiring(w) = &m.decls[0] else { panic!() };
        assert_eq!(w.inner[1].alias, "b2");
        assert_eq!(w.inner[2].alias, "X.Y");
        assert_eq!(w.connections[1].src, Endpoint::Inner("X.Y".into(), Dir::Out, 0));
        assert_eq!(w.connections[0].src, Endpoint::Outer(Dir::In, 1));
    }

    #[test]
    fn recovers_after_error() {
        let errs =
            parse_model("box A (in: ; out: T\ntype T = fin {a}\nbox B (in T; out:)\nbox C (in: ; out: )").unwrap_err();
        assert_eq!(errs.len(), 2);
        assert_eq!(errs[0].line, 2);
        assert_eq!(errs[1].line, 3);
    }

    #[test]
    fn keyword_names_rejected() {
        assert!(parse_model("box test (in: ; out: )").is_err());
    }

    #[test]
    fn time_contract_forms() {
        let m = parse_model(
            "timecontract T for B = window(assume=in[0] in [2,3], guarantee=out[0] in [10,11], delay=1) \
             samples { in[0]: {2, 2.5}; out[0]: {10} } horizon 4",
        )
        .unwrap();
        let Decl::TimeContract(t) = &m.decls[0] else { panic!() };
        assert_eq!(t.horizon, Some(4));
        assert_eq!(t.samples[0].points, vec![vec![2.0], vec![2.5]]);
    }
}
