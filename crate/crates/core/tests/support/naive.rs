//! A nested-loop interpreter over the rule syntax tree. Patterns are
//! matched one at a time in source order against the whole graph; the
//! other clauses run as soon as their inputs are bound.

use std::collections::{BTreeMap, BTreeSet};

use regcheck::dsl::{eval_expr, eval_geo, ClauseKind, ExecContext, ExecOutput, Clause, RuleAst, Value};
use regcheck::graph::{PatternTerm, Term, TriplePattern};

/// Target text mapped to sorted `(role, iri)` explanations.
pub type Outcome = BTreeMap<String, BTreeSet<(String, String)>>;

#[derive(Clone)]
struct Row {
    vals: BTreeMap<String, Value>,
    expl: Vec<(String, String)>,
}

fn text(t: &Term) -> String {
    match t {
        Term::Iri(i) => i.as_str().to_string(),
        Term::Literal(l) => l.lexical().to_string(),
        Term::Blank(b) => format!("_:b{b}"),
    }
}

fn substitute(p: &PatternTerm, row: &Row) -> PatternTerm {
    match p {
        PatternTerm::Var(v) => match row.vals.get(v).and_then(Value::to_term) {
            Some(t) => PatternTerm::Const(t),
            None => p.clone(),
        },
        c => c.clone(),
    }
}

fn match_one(ctx: &ExecContext<'_>, pattern: &TriplePattern, row: &Row) -> Vec<Row> {
    let bound = TriplePattern {
        subject: substitute(&pattern.subject, row),
        predicate: substitute(&pattern.predicate, row),
        object: substitute(&pattern.object, row),
    };
    ctx.graph
        .match_pattern(&bound)
        .into_iter()
        .map(|b| {
            let mut next = row.clone();
            for (k, v) in b {
                next.vals.insert(k, Value::Term(v));
            }
            next
        })
        .collect()
}

fn ready(c: &Clause, row: &Row) -> bool {
    match &c.kind {
        ClauseKind::NotExists(_) => true,
        _ => c.uses().iter().all(|v| row.vals.contains_key(v)),
    }
}

fn apply(ctx: &ExecContext<'_>, c: &Clause, row: Row) -> Vec<Row> {
    let mut expl = Vec::new();
    let lookup = |v: &str| row.vals.get(v).cloned();
    let keep = |mut row: Row, expl: Vec<(String, regcheck::graph::Iri)>| {
        row.expl.extend(expl.into_iter().map(|(r, i)| (r, i.as_str().to_string())));
        vec![row]
    };
    match &c.kind {
        ClauseKind::Pattern(p) => match_one(ctx, p, &row),
        ClauseKind::Filter(e) => match eval_expr(e, &lookup, ctx, &mut expl) {
            Ok(v) if v.as_bool() == Some(true) => keep(row, expl),
            _ => Vec::new(),
        },
        ClauseKind::Bind { expr, var } => match eval_expr(expr, &lookup, ctx, &mut expl) {
            Ok(v) => {
                let mut row = row;
                row.vals.insert(var.clone(), v);
                keep(row, expl)
            }
            Err(_) => Vec::new(),
        },
        ClauseKind::Geo { kind, a, b, eps } => {
            let (Some(x), Some(y)) = (lookup(a), lookup(b)) else { return Vec::new() };
            match eval_geo(ctx, *kind, &x, &y, *eps, &mut expl) {
                Ok(true) => keep(row, expl),
                _ => Vec::new(),
            }
        }
        ClauseKind::NotExists(body) => {
            let seed = Row {
                vals: row.vals.clone(),
                expl: Vec::new(),
            };
            if solve(ctx, body, vec![seed]).is_empty() {
                vec![row]
            } else {
                Vec::new()
            }
        }
    }
}

/// All solutions of `clauses` extending `rows`.
fn solve(ctx: &ExecContext<'_>, clauses: &[Clause], rows: Vec<Row>) -> Vec<Row> {
    let mut out = Vec::new();
    for row in rows {
        let mut pending: Vec<&Clause> = clauses.iter().collect();
        let mut frontier = vec![row];
        while !pending.is_empty() && !frontier.is_empty() {
            // Every row in the frontier has the same variables bound.
            let probe = &frontier[0];
            let pos = pending
                .iter()
                .position(|c| !c.is_pattern() && !matches!(c.kind, ClauseKind::NotExists(_)) && ready(c, probe))
                .or_else(|| pending.iter().position(|c| c.is_pattern()))
                .unwrap_or(0);
            let clause = pending.remove(pos);
            frontier = frontier.into_iter().flat_map(|r| apply(ctx, clause, r)).collect();
        }
        out.extend(frontier);
    }
    out
}

pub fn run(ast: &RuleAst, ctx: &ExecContext<'_>) -> Outcome {
    let seed = Row {
        vals: BTreeMap::new(),
        expl: Vec::new(),
    };
    let mut out = Outcome::new();
    for row in solve(ctx, &ast.clauses, vec![seed]) {
        let Some(target) = row.vals.get(&ast.target).and_then(Value::to_term) else { continue };
        let key = text(&target);
        let entry = out.entry(key.clone()).or_default();
        entry.extend(row.expl.into_iter().filter(|(_, i)| *i != key));
    }
    out
}

/// The executor's output in the same shape.
pub fn outcome(out: &ExecOutput) -> Outcome {
    out.matches
        .iter()
        .map(|m| {
            (
                text(&m.target),
                m.explanations
                    .iter()
                    .map(|(r, i)| (r.clone(), i.as_str().to_string()))
                    .collect(),
            )
        })
        .collect()
}

/// Every ordering of the rule's positive patterns, with the other
/// clauses left in their slots.
pub fn pattern_permutations(ast: &RuleAst) -> Vec<RuleAst> {
    let slots: Vec<usize> = ast
        .clauses
        .iter()
        .enumerate()
        .filter(|(_, c)| c.is_pattern())
        .map(|(i, _)| i)
        .collect();
    let patterns: Vec<Clause> = slots.iter().map(|&i| ast.clauses[i].clone()).collect();
    let mut out = Vec::new();
    let mut order: Vec<usize> = (0..patterns.len()).collect();
    permute(&mut order, 0, &mut |perm| {
        let mut a = ast.clone();
        for (slot, &p) in slots.iter().zip(perm) {
            a.clauses[*slot] = patterns[p].clone();
        }
        out.push(a);
    });
    out
}

fn permute(order: &mut Vec<usize>, k: usize, f: &mut dyn FnMut(&[usize])) {
    if k == order.len() {
        f(order);
        return;
    }
    for i in k..order.len() {
        order.swap(k, i);
        permute(order, k + 1, f);
        order.swap(k, i);
    }
}
