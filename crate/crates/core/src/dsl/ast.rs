//! Rule syntax tree.

use std::collections::BTreeSet;
use std::fmt;

use crate::graph::{Iri, Term, TriplePattern};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Builtin {
    FreeSpace,
    Clear,
    FireThreshold,
    HeightOf,
}

impl Builtin {
    pub fn from_name(name: &str) -> Option<Self> {
        match name.to_ascii_uppercase().as_str() {
            "FREESPACE" => Some(Builtin::FreeSpace),
            "CLEAR" => Some(Builtin::Clear),
            "FIRETHRESHOLD" => Some(Builtin::FireThreshold),
            "HEIGHT_OF" => Some(Builtin::HeightOf),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Builtin::FreeSpace => "FREESPACE",
            Builtin::Clear => "CLEAR",
            Builtin::FireThreshold => "FIRETHRESHOLD",
            Builtin::HeightOf => "HEIGHT_OF",
        }
    }

    /// Accepted argument counts, inclusive.
    pub fn arity(self) -> (usize, usize) {
        match self {
            Builtin::FreeSpace => (4, 5),
            Builtin::Clear => (2, 2),
            Builtin::FireThreshold | Builtin::HeightOf => (1, 1),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnaryOp {
    Not,
    Neg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinaryOp {
    Or,
    And,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    Add,
    Sub,
    Mul,
    Div,
}

impl BinaryOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinaryOp::Or => "OR",
            BinaryOp::And => "AND",
            BinaryOp::Eq => "=",
            BinaryOp::Ne => "!=",
            BinaryOp::Lt => "<",
            BinaryOp::Le => "<=",
            BinaryOp::Gt => ">",
            BinaryOp::Ge => ">=",
            BinaryOp::Add => "+",
            BinaryOp::Sub => "-",
            BinaryOp::Mul => "*",
            BinaryOp::Div => "/",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Number(f64),
    Text(String),
    Bool(bool),
    /// An IRI constant.
    Term(Term),
    Var(String),
    /// A bare word such as `LEFT`.
    Symbol(String),
    Call(Builtin, Vec<Expr>),
    Unary(UnaryOp, Box<Expr>),
    Binary(BinaryOp, Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn variables(&self, out: &mut BTreeSet<String>) {
        match self {
            Expr::Var(v) => {
                out.insert(v.clone());
            }
            Expr::Call(_, args) => args.iter().for_each(|a| a.variables(out)),
            Expr::Unary(_, e) => e.variables(out),
            Expr::Binary(_, a, b) => {
                a.variables(out);
                b.variables(out);
            }
            _ => {}
        }
    }

    pub fn iris(&self, out: &mut Vec<Iri>) {
        match self {
            Expr::Term(Term::Iri(i)) => out.push(i.clone()),
            Expr::Call(_, args) => args.iter().for_each(|a| a.iris(out)),
            Expr::Unary(_, e) => e.iris(out),
            Expr::Binary(_, a, b) => {
                a.iris(out);
                b.iris(out);
            }
            _ => {}
        }
    }

    fn count_vars(&self, counts: &mut std::collections::BTreeMap<String, usize>) {
        match self {
            Expr::Var(v) => *counts.entry(v.clone()).or_default() += 1,
            Expr::Call(_, args) => args.iter().for_each(|a| a.count_vars(counts)),
            Expr::Unary(_, e) => e.count_vars(counts),
            Expr::Binary(_, a, b) => {
                a.count_vars(counts);
                b.count_vars(counts);
            }
            _ => {}
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Number(n) => write!(f, "{n}"),
            Expr::Text(s) => write!(f, "{s:?}"),
            Expr::Bool(b) => write!(f, "{b}"),
            Expr::Term(t) => write!(f, "{t}"),
            Expr::Var(v) => write!(f, "?{v}"),
            Expr::Symbol(s) => write!(f, "{s}"),
            Expr::Call(b, args) => {
                write!(f, "{}(", b.name())?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{a}")?;
                }
                write!(f, ")")
            }
            Expr::Unary(UnaryOp::Not, e) => write!(f, "NOT {e}"),
            Expr::Unary(UnaryOp::Neg, e) => write!(f, "-{e}"),
            Expr::Binary(op, a, b) => write!(f, "({a} {} {b})", op.symbol()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GeoKind {
    Intersects,
    Adjacent,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ClauseKind {
    /// From `?v TYPE c` or `?v PROP p o`.
    Pattern(TriplePattern),
    Filter(Expr),
    NotExists(Vec<Clause>),
    Geo {
        kind: GeoKind,
        a: String,
        b: String,
        eps: Option<f64>,
    },
    Bind {
        expr: Expr,
        var: String,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Clause {
    pub kind: ClauseKind,
    pub line: usize,
    pub column: usize,
}

impl Clause {
    pub fn is_pattern(&self) -> bool {
        matches!(self.kind, ClauseKind::Pattern(_))
    }

    /// Variables read by the clause (for patterns: all of them).
    pub fn uses(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        match &self.kind {
            ClauseKind::Pattern(p) => out.extend(p.variables().map(str::to_string)),
            ClauseKind::Filter(e) | ClauseKind::Bind { expr: e, .. } => e.variables(&mut out),
            ClauseKind::NotExists(body) => {
                for c in body {
                    out.extend(c.uses());
                    out.extend(c.provides());
                }
            }
            ClauseKind::Geo { a, b, .. } => {
                out.insert(a.clone());
                out.insert(b.clone());
            }
        }
        out
    }

    /// Variables the clause makes available to later ones.
    pub fn provides(&self) -> BTreeSet<String> {
        match &self.kind {
            ClauseKind::Pattern(p) => p.variables().map(str::to_string).collect(),
            ClauseKind::Bind { var, .. } => BTreeSet::from([var.clone()]),
            _ => BTreeSet::new(),
        }
    }

    pub fn iris(&self) -> Vec<Iri> {
        let mut out = Vec::new();
        match &self.kind {
            ClauseKind::Pattern(p) => {
                for pos in p.positions() {
                    if let crate::graph::PatternTerm::Const(Term::Iri(i)) = pos {
                        out.push(i.clone());
                    }
                }
            }
            ClauseKind::Filter(e) | ClauseKind::Bind { expr: e, .. } => e.iris(&mut out),
            ClauseKind::NotExists(body) => body.iter().for_each(|c| out.extend(c.iris())),
            ClauseKind::Geo { .. } => {}
        }
        out
    }

    pub(crate) fn count_vars(&self, counts: &mut std::collections::BTreeMap<String, usize>) {
        match &self.kind {
            ClauseKind::Pattern(p) => {
                for v in p.variables() {
                    *counts.entry(v.to_string()).or_default() += 1;
                }
            }
            ClauseKind::Filter(e) => e.count_vars(counts),
            ClauseKind::Bind { expr, var } => {
                expr.count_vars(counts);
                *counts.entry(var.clone()).or_default() += 1;
            }
            ClauseKind::NotExists(body) => body.iter().for_each(|c| c.count_vars(counts)),
            ClauseKind::Geo { a, b, .. } => {
                *counts.entry(a.clone()).or_default() += 1;
                *counts.entry(b.clone()).or_default() += 1;
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RuleAst {
    pub id: String,
    pub topic: String,
    pub severity: String,
    pub clauses: Vec<Clause>,
    pub target: String,
    pub message: Option<String>,
    pub line: usize,
}

impl RuleAst {
    pub fn message_template(&self) -> String {
        self.message
            .clone()
            .unwrap_or_else(|| format!("{} non-compliant", self.id))
    }

    /// Every variable occurrence, nested blocks included.
    pub fn variable_counts(&self) -> std::collections::BTreeMap<String, usize> {
        let mut counts = std::collections::BTreeMap::new();
        for c in &self.clauses {
            c.count_vars(&mut counts);
        }
        *counts.entry(self.target.clone()).or_default() += 1;
        counts
    }
}
