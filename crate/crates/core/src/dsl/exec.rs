//! Plan execution over the graph and the box index.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;

use nalgebra::Vector3;

use super::ast::{BinaryOp, Builtin, Expr, GeoKind, UnaryOp};
use super::pack::{resolve_fire_threshold, PackDefaults};
use super::plan::{Operator, QueryPlan};
use crate::geom::{adjacent, intersects, make_freespace, GeomIndex, Obb, Side};
use crate::graph::{natural_cmp, Graph, Iri, Literal, PatternTerm, Term, TriplePattern};
use crate::vocab;

/// A runtime value: a graph term or something a builtin produced.
#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Term(Term),
    Number(f64),
    Bool(bool),
    Text(String),
    Symbol(String),
    Box(Obb),
}

impl Value {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Value::Number(n) => Some(*n),
            Value::Term(Term::Literal(l)) => l.as_f64(),
            _ => None,
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Value::Bool(b) => Some(*b),
            Value::Term(Term::Literal(l)) => l.as_bool(),
            _ => None,
        }
    }

    fn as_text(&self) -> Option<&str> {
        match self {
            Value::Text(s) | Value::Symbol(s) => Some(s),
            Value::Term(Term::Literal(l)) if l.as_f64().is_none() && l.as_bool().is_none() => Some(l.lexical()),
            _ => None,
        }
    }

    pub fn as_iri(&self) -> Option<&Iri> {
        match self {
            Value::Term(Term::Iri(i)) => Some(i),
            _ => None,
        }
    }

    /// The graph term this value stands for, if any. Boxes have none.
    pub fn to_term(&self) -> Option<Term> {
        match self {
            Value::Term(t) => Some(t.clone()),
            Value::Number(n) => Some(Literal::decimal(*n).into()),
            Value::Bool(b) => Some(Literal::boolean(*b).into()),
            Value::Text(s) | Value::Symbol(s) => Some(Literal::text(s).into()),
            Value::Box(_) => None,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Term(t) => write!(f, "{t}"),
            Value::Number(n) => write!(f, "{n}"),
            Value::Bool(b) => write!(f, "{b}"),
            Value::Text(s) => write!(f, "\"{s}\""),
            Value::Symbol(s) => write!(f, "{s}"),
            Value::Box(b) => write!(
                f,
                "box(center {:.3} {:.3} {:.3})",
                b.center().x,
                b.center().y,
                b.center().z
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum EvalError {
    MissingGeometry(Iri),
    Unbound(String),
    Type(String),
    Data(String),
}

impl fmt::Display for EvalError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EvalError::MissingGeometry(i) => write!(f, "no geometry for {i}"),
            EvalError::Unbound(v) => write!(f, "?{v} is unbound"),
            EvalError::Type(m) | EvalError::Data(m) => f.write_str(m),
        }
    }
}

/// One obstruction or geometric relation behind a finding.
pub type Explanation = (String, Iri);

pub const ROLE_FREESPACE: &str = "intersects FreeSpace";

/// Everything a rule evaluation reads.
pub struct ExecContext<'a> {
    pub graph: &'a Graph,
    pub geom: &'a GeomIndex,
    pub defaults: &'a PackDefaults,
    /// Physical elements with boxes, in natural IRI order, with AABBs.
    physical: Vec<(Iri, Obb, (Vector3<f64>, Vector3<f64>))>,
}

impl<'a> ExecContext<'a> {
    pub fn new(graph: &'a Graph, geom: &'a GeomIndex, defaults: &'a PackDefaults) -> Self {
        let mut physical: Vec<(Iri, Obb, (Vector3<f64>, Vector3<f64>))> = graph
            .subjects(&vocab::rdf_type(), &Term::Iri(vocab::reg("PhysicalElement")))
            .into_iter()
            .filter_map(|t| {
                let iri = t.as_iri()?.clone();
                let obb = *geom.get(&iri)?;
                let aabb = obb.aabb();
                Some((iri, obb, aabb))
            })
            .collect();
        physical.sort_by(|a, b| natural_cmp(a.0.as_str(), b.0.as_str()));
        ExecContext {
            graph,
            geom,
            defaults,
            physical,
        }
    }

    fn box_of(&self, v: &Value) -> Result<Obb, EvalError> {
        match v {
            Value::Box(b) => Ok(*b),
            Value::Term(Term::Iri(i)) => self.geom.get(i).copied().ok_or_else(|| EvalError::MissingGeometry(i.clone())),
            other => Err(EvalError::Type(format!("{other} is not a box or an element"))),
        }
    }

    fn facing_axis(&self, element: &Iri) -> usize {
        for t in self.graph.objects(&Term::Iri(element.clone()), &vocab::ifc("facingAxis")) {
            let Some(l) = t.as_literal() else { continue };
            if let Some(n) = l.as_f64() {
                return if n == 0.0 { 0 } else { 1 };
            }
            match l.lexical().trim().to_ascii_uppercase().as_str() {
                "0" | "X" => return 0,
                "1" | "Y" => return 1,
                _ => {}
            }
        }
        1
    }

    /// Physical elements other than `excluded` that intersect `space`.
    pub fn obstructions(&self, space: &Obb, excluded: Option<&Iri>) -> Vec<Iri> {
        let (lo, hi) = space.aabb();
        let eps = self.defaults.adjacency_eps_m;
        let base = space.min_z();
        self.physical
            .iter()
            .filter(|(iri, obb, (elo, ehi))| {
                if Some(iri) == excluded {
                    return false;
                }
                if (0..3).any(|k| ehi[k] < lo[k] || elo[k] > hi[k]) {
                    return false;
                }
                if self.defaults.floor_exemption && (obb.max_z() - base).abs() <= eps {
                    return false;
                }
                intersects(space, obb)
            })
            .map(|(iri, _, _)| iri.clone())
            .collect()
    }
}

fn call(
    ctx: &ExecContext<'_>,
    builtin: Builtin,
    args: &[Value],
    expl: &mut Vec<Explanation>,
) -> Result<Value, EvalError> {
    let num = |i: usize, what: &str| {
        args[i]
            .as_f64()
            .ok_or_else(|| EvalError::Type(format!("{}: {what} must be a number, got {}", builtin.name(), args[i])))
    };
    match builtin {
        Builtin::FreeSpace => {
            let element = args[0]
                .as_iri()
                .ok_or_else(|| EvalError::Type(format!("FREESPACE: {} is not an element", args[0])))?;
            let anchor = ctx
                .geom
                .get(element)
                .ok_or_else(|| EvalError::MissingGeometry(element.clone()))?
                .with_facing_axis(ctx.facing_axis(element));
            let side: Side = args[1]
                .as_text()
                .ok_or_else(|| EvalError::Type(format!("FREESPACE: side must be LEFT or RIGHT, got {}", args[1])))?
                .parse()
                .map_err(|e: crate::geom::GeomError| EvalError::Type(e.to_string()))?;
            let height = if args.len() > 4 {
                num(4, "height")?
            } else {
                ctx.defaults.freespace_height_m
            };
            make_freespace(&anchor, side, num(2, "width")?, num(3, "depth")?, height)
                .map(Value::Box)
                .map_err(|e| EvalError::Data(e.to_string()))
        }
        Builtin::Clear => {
            let space = ctx.box_of(&args[0])?;
            let found = ctx.obstructions(&space, args[1].as_iri());
            let clear = found.is_empty();
            expl.extend(found.into_iter().map(|i| (ROLE_FREESPACE.to_string(), i)));
            Ok(Value::Bool(clear))
        }
        Builtin::FireThreshold => resolve_fire_threshold(num(0, "height")?, &ctx.defaults.fire_threshold_table)
            .map(Value::Number)
            .map_err(|e| EvalError::Data(e.to_string())),
        Builtin::HeightOf => {
            let b = args[0]
                .as_iri()
                .ok_or_else(|| EvalError::Type(format!("HEIGHT_OF: {} is not a building", args[0])))?;
            ctx.graph
                .objects(&Term::Iri(b.clone()), &vocab::reg("fireHeight"))
                .iter()
                .find_map(|t| t.as_literal().and_then(Literal::as_f64))
                .map(Value::Number)
                .ok_or_else(|| EvalError::Data(format!("{b} has no reg:fireHeight")))
        }
    }
}

fn equal(a: &Value, b: &Value) -> bool {
    if let (Some(x), Some(y)) = (a.as_f64(), b.as_f64()) {
        return x == y;
    }
    if let (Some(x), Some(y)) = (a.as_bool(), b.as_bool()) {
        return x == y;
    }
    if let (Some(x), Some(y)) = (a.as_text(), b.as_text()) {
        return x == y;
    }
    match (a.to_term(), b.to_term()) {
        (Some(x), Some(y)) => x == y,
        _ => a == b,
    }
}

/// Evaluates `expr`. Every operand is evaluated (no short circuit) so
/// explanations do not depend on operand order.
pub fn eval_expr(
    expr: &Expr,
    lookup: &dyn Fn(&str) -> Option<Value>,
    ctx: &ExecContext<'_>,
    expl: &mut Vec<Explanation>,
) -> Result<Value, EvalError> {
    Ok(match expr {
        Expr::Number(n) => Value::Number(*n),
        Expr::Text(s) => Value::Text(s.clone()),
        Expr::Bool(b) => Value::Bool(*b),
        Expr::Term(t) => Value::Term(t.clone()),
        Expr::Symbol(s) => Value::Symbol(s.clone()),
        Expr::Var(v) => lookup(v).ok_or_else(|| EvalError::Unbound(v.clone()))?,
        Expr::Call(b, args) => {
            let args = args
                .iter()
                .map(|a| eval_expr(a, lookup, ctx, expl))
                .collect::<Result<Vec<_>, _>>()?;
            call(ctx, *b, &args, expl)?
        }
        Expr::Unary(UnaryOp::Not, e) => {
            let v = eval_expr(e, lookup, ctx, expl)?;
            Value::Bool(!v.as_bool().ok_or_else(|| EvalError::Type(format!("NOT needs a boolean, got {v}")))?)
        }
        Expr::Unary(UnaryOp::Neg, e) => {
            let v = eval_expr(e, lookup, ctx, expl)?;
            Value::Number(-v.as_f64().ok_or_else(|| EvalError::Type(format!("'-' needs a number, got {v}")))?)
        }
        Expr::Binary(op, a, b) => {
            let x = eval_expr(a, lookup, ctx, expl)?;
            let y = eval_expr(b, lookup, ctx, expl)?;
            let bools = || match (x.as_bool(), y.as_bool()) {
                (Some(p), Some(q)) => Ok((p, q)),
                _ => Err(EvalError::Type(format!("{} needs booleans, got {x} and {y}", op.symbol()))),
            };
            let nums = || match (x.as_f64(), y.as_f64()) {
                (Some(p), Some(q)) => Ok((p, q)),
                _ => Err(EvalError::Type(format!("{} needs numbers, got {x} and {y}", op.symbol()))),
            };
            match op {
                BinaryOp::Or => {
                    let (p, q) = bools()?;
                    Value::Bool(p || q)
                }
                BinaryOp::And => {
                    let (p, q) = bools()?;
                    Value::Bool(p && q)
                }
                BinaryOp::Eq => Value::Bool(equal(&x, &y)),
                BinaryOp::Ne => Value::Bool(!equal(&x, &y)),
                BinaryOp::Lt => nums().map(|(p, q)| Value::Bool(p < q))?,
                BinaryOp::Le => nums().map(|(p, q)| Value::Bool(p <= q))?,
                BinaryOp::Gt => nums().map(|(p, q)| Value::Bool(p > q))?,
                BinaryOp::Ge => nums().map(|(p, q)| Value::Bool(p >= q))?,
                BinaryOp::Add => nums().map(|(p, q)| Value::Number(p + q))?,
                BinaryOp::Sub => nums().map(|(p, q)| Value::Number(p - q))?,
                BinaryOp::Mul => nums().map(|(p, q)| Value::Number(p * q))?,
                BinaryOp::Div => nums().map(|(p, q)| Value::Number(p / q))?,
            }
        }
    })
}

/// Evaluates a geo clause on two values.
pub fn eval_geo(
    ctx: &ExecContext<'_>,
    kind: GeoKind,
    a: &Value,
    b: &Value,
    eps: Option<f64>,
    expl: &mut Vec<Explanation>,
) -> Result<bool, EvalError> {
    let (x, y) = (ctx.box_of(a)?, ctx.box_of(b)?);
    let (hit, role) = match kind {
        GeoKind::Intersects => (intersects(&x, &y), "intersects"),
        GeoKind::Adjacent => (adjacent(&x, &y, eps.unwrap_or(ctx.defaults.adjacency_eps_m)), "adjacent"),
    };
    if hit {
        for v in [a, b] {
            if let Some(i) = v.as_iri() {
                expl.push((role.to_string(), i.clone()));
            }
        }
    }
    Ok(hit)
}

/// One non-compliant target with what explains it.
#[derive(Debug, Clone, PartialEq)]
pub struct RuleMatch {
    pub target: Term,
    pub explanations: Vec<Explanation>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExecOutput {
    pub matches: Vec<RuleMatch>,
    /// Distinct target bindings produced before any filtering.
    pub candidates: usize,
    pub diagnostics: Vec<String>,
    /// Evaluation errors other than missing geometry, de-duplicated.
    pub errors: Vec<String>,
}

#[derive(Clone)]
struct Row {
    vals: Vec<Option<Value>>,
    expl: Vec<Explanation>,
    tag: usize,
}

struct Run<'c, 'a> {
    ctx: &'c ExecContext<'a>,
    slots: HashMap<String, usize>,
    rule_id: String,
    target: String,
    diagnostics: BTreeSet<String>,
    errors: BTreeSet<String>,
}

fn collect_vars(ops: &[Operator], out: &mut Vec<String>) {
    let mut add = |v: &str| {
        if !out.iter().any(|x| x == v) {
            out.push(v.to_string());
        }
    };
    for op in ops {
        match op {
            Operator::Scan { pattern } | Operator::HashJoin { pattern, .. } => pattern.variables().for_each(&mut add),
            Operator::Bind { var, .. } => add(var),
            Operator::Geo { a, b, .. } => {
                add(a);
                add(b);
            }
            Operator::Project { target } => add(target),
            Operator::Filter { expr } => {
                let mut vs = BTreeSet::new();
                expr.variables(&mut vs);
                vs.iter().for_each(|v| add(v));
            }
            Operator::AntiJoin { on, body } => {
                on.iter().for_each(|v| add(v));
                let mut inner = Vec::new();
                collect_vars(body, &mut inner);
                inner.iter().for_each(|v| add(v));
            }
        }
    }
}

impl Run<'_, '_> {
    fn get<'r>(&self, row: &'r Row, var: &str) -> Option<&'r Value> {
        self.slots.get(var).and_then(|i| row.vals[*i].as_ref())
    }

    fn skip(&mut self, row: &Row, err: &EvalError) {
        let who = self
            .get(row, &self.target)
            .map(|v| format!("candidate {v}"))
            .unwrap_or_else(|| "a candidate".to_string());
        let what = match err {
            EvalError::MissingGeometry(_) => "skipped",
            _ => {
                self.errors.insert(err.to_string());
                "skipped after an evaluation error"
            }
        };
        self.diagnostics
            .insert(format!("rule '{}': {who} {what}: {err}", self.rule_id));
    }

    /// The pattern with bound variables replaced by their terms.
    /// `None` when a bound value has no term form.
    fn substitute(&self, pattern: &TriplePattern, row: &Row) -> Option<TriplePattern> {
        let sub = |p: &PatternTerm| -> Option<PatternTerm> {
            match p {
                PatternTerm::Var(v) => match self.get(row, v) {
                    Some(val) => val.to_term().map(PatternTerm::Const),
                    None => Some(p.clone()),
                },
                c => Some(c.clone()),
            }
        };
        let s = sub(&pattern.subject)?;
        if matches!(&s, PatternTerm::Const(Term::Literal(_))) {
            return None;
        }
        Some(TriplePattern {
            subject: s,
            predicate: sub(&pattern.predicate)?,
            object: sub(&pattern.object)?,
        })
    }

    fn extend_row(&self, row: &Row, binding: &BTreeMap<String, Term>) -> Row {
        let mut out = row.clone();
        for (k, v) in binding {
            if let Some(i) = self.slots.get(k) {
                out.vals[*i] = Some(Value::Term(v.clone()));
            }
        }
        out
    }

    fn run(&mut self, ops: &[Operator], mut rows: Vec<Row>, candidates: &mut Option<usize>) -> Vec<Row> {
        for op in ops {
            if rows.is_empty() {
                break;
            }
            rows = match op {
                Operator::Scan { pattern } => {
                    let mut out = Vec::new();
                    for row in &rows {
                        let Some(p) = self.substitute(pattern, row) else { continue };
                        for b in self.ctx.graph.match_pattern(&p) {
                            out.push(self.extend_row(row, &b));
                        }
                    }
                    out
                }
                Operator::HashJoin { pattern, on } => {
                    let mut table: HashMap<Vec<Term>, Vec<BTreeMap<String, Term>>> = HashMap::new();
                    for b in self.ctx.graph.match_pattern(pattern) {
                        let key: Vec<Term> = on.iter().map(|v| b[v].clone()).collect();
                        table.entry(key).or_default().push(b);
                    }
                    let mut out = Vec::new();
                    for row in &rows {
                        let key: Option<Vec<Term>> = on.iter().map(|v| self.get(row, v).and_then(Value::to_term)).collect();
                        let Some(key) = key else { continue };
                        for b in table.get(&key).into_iter().flatten() {
                            out.push(self.extend_row(row, b));
                        }
                    }
                    out
                }
                Operator::Filter { expr } => {
                    let mut out = Vec::new();
                    for mut row in rows {
                        let mut expl = Vec::new();
                        let result = {
                            let lookup = |v: &str| self.get(&row, v).cloned();
                            eval_expr(expr, &lookup, self.ctx, &mut expl)
                        };
                        match result {
                            Ok(v) => match v.as_bool() {
                                Some(true) => {
                                    row.expl.extend(expl);
                                    out.push(row);
                                }
                                Some(false) => {}
                                None => self.skip(&row, &EvalError::Type(format!("FILTER gave {v}, not a boolean"))),
                            },
                            Err(e) => self.skip(&row, &e),
                        }
                    }
                    out
                }
                Operator::Bind { expr, var } => {
                    let slot = self.slots[var];
                    let mut out = Vec::new();
                    for mut row in rows {
                        let mut expl = Vec::new();
                        let result = {
                            let lookup = |v: &str| self.get(&row, v).cloned();
                            eval_expr(expr, &lookup, self.ctx, &mut expl)
                        };
                        match result {
                            Ok(v) => {
                                row.vals[slot] = Some(v);
                                row.expl.extend(expl);
                                out.push(row);
                            }
                            Err(e) => self.skip(&row, &e),
                        }
                    }
                    out
                }
                Operator::Geo { kind, a, b, eps } => {
                    let mut out = Vec::new();
                    for mut row in rows {
                        let (Some(x), Some(y)) = (self.get(&row, a).cloned(), self.get(&row, b).cloned()) else {
                            continue;
                        };
                        let mut expl = Vec::new();
                        match eval_geo(self.ctx, *kind, &x, &y, *eps, &mut expl) {
                            Ok(true) => {
                                row.expl.extend(expl);
                                out.push(row);
                            }
                            Ok(false) => {}
                            Err(e) => self.skip(&row, &e),
                        }
                    }
                    out
                }
                Operator::AntiJoin { body, .. } => {
                    let seeds: Vec<Row> = rows
                        .iter()
                        .enumerate()
                        .map(|(i, r)| Row {
                            vals: r.vals.clone(),
                            expl: Vec::new(),
                            tag: i,
                        })
                        .collect();
                    let hits: HashSet<usize> = self.run(body, seeds, &mut Some(0)).into_iter().map(|r| r.tag).collect();
                    rows.into_iter()
                        .enumerate()
                        .filter(|(i, _)| !hits.contains(i))
                        .map(|(_, r)| r)
                        .collect()
                }
                Operator::Project { .. } => rows,
            };
            if candidates.is_none() && op.provides().contains(&self.target) {
                let distinct: HashSet<Term> = rows
                    .iter()
                    .filter_map(|r| self.get(r, &self.target).and_then(Value::to_term))
                    .collect();
                *candidates = Some(distinct.len());
            }
        }
        rows
    }
}

fn term_key(t: &Term) -> String {
    match t {
        Term::Iri(i) => i.as_str().to_string(),
        Term::Literal(l) => l.lexical().to_string(),
        Term::Blank(b) => format!("_:b{b}"),
    }
}

/// Runs a plan. One match per distinct target, sorted in natural order;
/// explanations are de-duplicated and never name the target itself.
pub fn execute(plan: &QueryPlan, ctx: &ExecContext<'_>) -> ExecOutput {
    let mut vars = Vec::new();
    collect_vars(&plan.operators, &mut vars);
    let slots: HashMap<String, usize> = vars.iter().enumerate().map(|(i, v)| (v.clone(), i)).collect();
    let mut run = Run {
        ctx,
        slots,
        rule_id: plan.rule_id.clone(),
        target: plan.target.clone(),
        diagnostics: BTreeSet::new(),
        errors: BTreeSet::new(),
    };
    let seed = Row {
        vals: vec![None; vars.len()],
        expl: Vec::new(),
        tag: 0,
    };
    let mut candidates = None;
    let rows = run.run(&plan.operators, vec![seed], &mut candidates);

    let mut grouped: BTreeMap<String, (Term, BTreeSet<Explanation>)> = BTreeMap::new();
    for row in rows {
        let Some(target) = run.get(&row, &plan.target).and_then(Value::to_term) else {
            continue;
        };
        let entry = grouped
            .entry(term_key(&target))
            .or_insert_with(|| (target.clone(), BTreeSet::new()));
        entry
            .1
            .extend(row.expl.into_iter().filter(|(_, i)| Some(i) != target.as_iri()));
    }
    let mut matches: Vec<RuleMatch> = grouped
        .into_values()
        .map(|(target, expl)| {
            let mut explanations: Vec<Explanation> = expl.into_iter().collect();
            explanations.sort_by(|a, b| a.0.cmp(&b.0).then_with(|| natural_cmp(a.1.as_str(), b.1.as_str())));
            RuleMatch { target, explanations }
        })
        .collect();
    matches.sort_by(|a, b| natural_cmp(&term_key(&a.target), &term_key(&b.target)));
    ExecOutput {
        matches,
        candidates: candidates.unwrap_or(0),
        diagnostics: run.diagnostics.into_iter().collect(),
        errors: run.errors.into_iter().collect(),
    }
}
