use std::fmt;

/// A source position (1-based). Positions never take part in equality, so
/// models compare structurally.
#[derive(Debug, Clone, Copy, Default, Eq)]
pub struct Span {
    pub line: usize,
    pub col: usize,
}

impl PartialEq for Span {
    fn eq(&self, _: &Span) -> bool {
        true
    }
}

impl std::hash::Hash for Span {
    fn hash<H: std::hash::Hasher>(&self, _: &mut H) {}
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Dir {
    In,
    Out,
}

impl fmt::Display for Dir {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Dir::In => "in",
            Dir::Out => "out",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TypeExpr {
    Fin(Vec<String>),
    Lin(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TypeDecl {
    pub name: String,
    pub ty: TypeExpr,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoxDecl {
    pub name: String,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    pub span: Span,
}

/// An inner box of a wiring, addressed by its alias.
#[derive(Debug, Clone, PartialEq)]
pub struct InnerBox {
    pub alias: String,
    pub box_name: String,
    pub span: Span,
}

/// One end of a connection.
#[derive(Debug, Clone, PartialEq)]
pub enum Endpoint {
    Outer(Dir, usize),
    /// Inner box alias (a dotted path after flattening), direction, port.
    Inner(String, Dir, usize),
    Const(String),
}

impl fmt::Display for Endpoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Endpoint::Outer(d, i) => write!(f, "outer.{d}[{i}]"),
            Endpoint::Inner(a, d, i) => write!(f, "{a}.{d}[{i}]"),
            Endpoint::Const(v) => write!(f, "const {v}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Connection {
    pub dest: Endpoint,
    pub src: Endpoint,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WiringDecl {
    pub name: String,
    pub inner: Vec<InnerBox>,
    pub outer: String,
    pub connections: Vec<Connection>,
    pub span: Span,
}

/// A value label or the wildcard `_`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Pattern {
    Any,
    Value(String),
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Pattern::Any => f.write_str("_"),
            Pattern::Value(v) => f.write_str(v),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UpdateRow {
    pub state: Pattern,
    pub input: Vec<Pattern>,
    pub next: String,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReadoutRow {
    pub state: String,
    pub output: Vec<String>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MooreDecl {
    pub name: String,
    pub box_name: String,
    pub states: Vec<String>,
    pub init: String,
    pub update: Vec<UpdateRow>,
    pub readout: Vec<ReadoutRow>,
    pub span: Span,
}

pub type Matrix = Vec<Vec<f64>>;

#[derive(Debug, Clone, PartialEq)]
pub struct LtiDecl {
    pub name: String,
    pub box_name: String,
    pub a: Matrix,
    pub b: Matrix,
    pub c: Matrix,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FnRow {
    pub input: Vec<Pattern>,
    pub output: Vec<String>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FnDecl {
    pub name: String,
    pub box_name: String,
    pub rows: Vec<FnRow>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinFnDecl {
    pub name: String,
    pub box_name: String,
    pub c: Matrix,
    pub span: Span,
}

/// A set of port values. Its meaning depends on the port: braces list labels
/// of a finite port or points of a linear one.
#[derive(Debug, Clone, PartialEq)]
pub enum SetExpr {
    Full,
    Braces(Vec<String>),
    /// Union of closed intervals on a one-dimensional port.
    Union(Vec<(f64, f64)>),
    /// One set per coordinate of a multi-dimensional linear port.
    Coords(Vec<SetExpr>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PortSet {
    pub dir: Dir,
    pub index: usize,
    pub set: SetExpr,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ContractExpr {
    Rel(Vec<(Vec<String>, Vec<String>, Span)>),
    Indep(Vec<PortSet>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContractDecl {
    pub name: String,
    pub box_name: String,
    pub body: ContractExpr,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TimeExpr {
    Lift(String),
    Window {
        assume: PortSet,
        guarantee: PortSet,
        delay: usize,
    },
    Implies {
        pattern: Vec<PortSet>,
        response: PortSet,
        within: usize,
    },
    /// Member pairs as sequences of port tuples.
    Table(Vec<(Vec<Vec<String>>, Vec<Vec<String>>, Span)>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Samples {
    pub dir: Dir,
    pub index: usize,
    pub points: Vec<Vec<f64>>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimeContractDecl {
    pub name: String,
    pub box_name: String,
    pub expr: TimeExpr,
    pub samples: Vec<Samples>,
    pub horizon: Option<usize>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KbDecl {
    pub name: String,
    pub box_name: String,
    pub entries: Vec<(String, Span)>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TestExpr {
    Terminal,
    Trace { init: Option<String>, inputs: Vec<Vec<String>> },
    IoTable { horizon: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct TestDecl {
    pub name: String,
    pub box_name: String,
    pub expr: TestExpr,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttackDecl {
    pub name: String,
    pub wiring: String,
    /// Behavior chosen for a (flattened) inner box, overriding the default.
    pub using: Vec<(String, String, Span)>,
    pub rewrites: Vec<(String, String, Span)>,
    pub rewires: Vec<Connection>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Decl {
    Type(TypeDecl),
    Box(BoxDecl),
    Wiring(WiringDecl),
    Moore(MooreDecl),
    Lti(LtiDecl),
    Fn(FnDecl),
    LinFn(LinFnDecl),
    Contract(ContractDecl),
    TimeContract(TimeContractDecl),
    Kb(KbDecl),
    Test(TestDecl),
    Attack(AttackDecl),
}

/// Which namespace a declaration's name lives in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Kind {
    Type,
    Box,
    Wiring,
    Behavior,
    Contract,
    TimeContract,
    Kb,
    Test,
    Attack,
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Kind::Type => "type",
            Kind::Box => "box",
            Kind::Wiring => "wiring",
            Kind::Behavior => "behavior",
            Kind::Contract => "contract",
            Kind::TimeContract => "time contract",
            Kind::Kb => "knowledge database",
            Kind::Test => "test",
            Kind::Attack => "attack",
        })
    }
}

impl Decl {
    pub fn name(&self) -> &str {
        match self {
            Decl::Type(d) => &d.name,
            Decl::Box(d) => &d.name,
            Decl::Wiring(d) => &d.name,
            Decl::Moore(d) => &d.name,
            Decl::Lti(d) => &d.name,
            Decl::Fn(d) => &d.name,
            Decl::LinFn(d) => &d.name,
            Decl::Contract(d) => &d.name,
            Decl::TimeContract(d) => &d.name,
            Decl::Kb(d) => &d.name,
            Decl::Test(d) => &d.name,
            Decl::Attack(d) => &d.name,
        }
    }

    pub fn kind(&self) -> Kind {
        match self {
            Decl::Type(_) => Kind::Type,
            Decl::Box(_) => Kind::Box,
            Decl::Wiring(_) => Kind::Wiring,
            Decl::Moore(_) | Decl::Lti(_) | Decl::Fn(_) | Decl::LinFn(_) => Kind::Behavior,
            Decl::Contract(_) => Kind::Contract,
            Decl::TimeContract(_) => Kind::TimeContract,
            Decl::Kb(_) => Kind::Kb,
            Decl::Test(_) => Kind::Test,
            Decl::Attack(_) => Kind::Attack,
        }
    }

    pub fn span(&self) -> Span {
        match self {
            Decl::Type(d) => d.span,
            Decl::Box(d) => d.span,
            Decl::Wiring(d) => d.span,
            Decl::Moore(d) => d.span,
            Decl::Lti(d) => d.span,
            Decl::Fn(d) => d.span,
            Decl::LinFn(d) => d.span,
            Decl::Contract(d) => d.span,
            Decl::TimeContract(d) => d.span,
            Decl::Kb(d) => d.span,
            Decl::Test(d) => d.span,
            Decl::Attack(d) => d.span,
        }
    }

    /// The box a behavior, contract, knowledge database or test is for.
    pub fn box_name(&self) -> Option<&str> {
        match self {
            Decl::Moore(d) => Some(&d.box_name),
            Decl::Lti(d) => Some(&d.box_name),
            Decl::Fn(d) => Some(&d.box_name),
            Decl::LinFn(d) => Some(&d.box_name),
            Decl::Contract(d) => Some(&d.box_name),
            Decl::TimeContract(d) => Some(&d.box_name),
            Decl::Kb(d) => Some(&d.box_name),
            Decl::Test(d) => Some(&d.box_name),
            _ => None,
        }
    }
}

/// A parsed model file: declarations in source order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Model {
    pub decls: Vec<Decl>,
}

impl Model {
    pub fn find(&self, kind: Kind, name: &str) -> Option<&Decl> {
        self.decls.iter().find(|d| d.kind() == kind && d.name() == name)
    }

    pub fn names(&self, kind: Kind) -> impl Iterator<Item = &str> {
        self.decls.iter().filter(move |d| d.kind() == kind).map(Decl::name)
    }
}
