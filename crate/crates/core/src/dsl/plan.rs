//! Compilation of rule ASTs into operator pipelines.
//!
//! Patterns run most-constant-first (ties keep source order). The first
//! pattern of a block is an index scan seeded by the incoming rows; each
//! later one is a hash join on the variables already bound. Filters,
//! geo tests, binds and anti-joins go right after the step that binds
//! the last variable they need.

use std::collections::BTreeSet;
use std::fmt;

use super::ast::{Clause, ClauseKind, Expr, GeoKind, RuleAst};
use super::DslError;
use crate::graph::TriplePattern;
use crate::vocab::Vocabulary;

#[derive(Debug, Clone, PartialEq)]
pub enum Operator {
    Scan {
        pattern: TriplePattern,
    },
    HashJoin {
        pattern: TriplePattern,
        on: Vec<String>,
    },
    Filter {
        expr: Expr,
    },
    /// Drops rows for which `body`, seeded with the row, yields anything.
    AntiJoin {
        on: Vec<String>,
        body: Vec<Operator>,
    },
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
    Project {
        target: String,
    },
}

impl Operator {
    pub fn name(&self) -> &'static str {
        match self {
            Operator::Scan { .. } => "scan",
            Operator::HashJoin { .. } => "hash-join",
            Operator::Filter { .. } => "filter",
            Operator::AntiJoin { .. } => "anti-join",
            Operator::Geo { .. } => "geo",
            Operator::Bind { .. } => "bind",
            Operator::Project { .. } => "project",
        }
    }

    /// Variables this operator adds to each row.
    pub fn provides(&self) -> Vec<String> {
        match self {
            Operator::Scan { pattern } | Operator::HashJoin { pattern, .. } => {
                pattern.variables().map(str::to_string).collect()
            }
            Operator::Bind { var, .. } => vec![var.clone()],
            _ => Vec::new(),
        }
    }

    fn fmt_indented(&self, f: &mut fmt::Formatter<'_>, depth: usize) -> fmt::Result {
        let pad = "  ".repeat(depth);
        match self {
            Operator::Scan { pattern } => writeln!(f, "{pad}scan {pattern}"),
            Operator::HashJoin { pattern, on } => {
                let on: Vec<String> = on.iter().map(|v| format!("?{v}")).collect();
                writeln!(f, "{pad}hash-join [{}] {pattern}", on.join(" "))
            }
            Operator::Filter { expr } => writeln!(f, "{pad}filter {expr}"),
            Operator::AntiJoin { on, body } => {
                let on: Vec<String> = on.iter().map(|v| format!("?{v}")).collect();
                writeln!(f, "{pad}anti-join [{}]", on.join(" "))?;
                body.iter().try_for_each(|op| op.fmt_indented(f, depth + 1))
            }
            Operator::Geo { kind, a, b, eps } => {
                let name = match kind {
                    GeoKind::Intersects => "intersects",
                    GeoKind::Adjacent => "adjacent",
                };
                match eps {
                    Some(e) => writeln!(f, "{pad}geo {name} ?{a} ?{b} eps {e}"),
                    None => writeln!(f, "{pad}geo {name} ?{a} ?{b}"),
                }
            }
            Operator::Bind { expr, var } => writeln!(f, "{pad}bind {expr} as ?{var}"),
            Operator::Project { target } => writeln!(f, "{pad}project ?{target}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QueryPlan {
    pub rule_id: String,
    pub target: String,
    pub operators: Vec<Operator>,
}

impl QueryPlan {
    /// Operator names of the top level, in order.
    pub fn shape(&self) -> Vec<&'static str> {
        self.operators.iter().map(Operator::name).collect()
    }
}

impl fmt::Display for QueryPlan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "plan {}", self.rule_id)?;
        self.operators.iter().try_for_each(|op| op.fmt_indented(f, 1))
    }
}

/// A rule ready to execute.
#[derive(Debug, Clone, PartialEq)]
pub struct CompiledRule {
    pub ast: RuleAst,
    pub plan: QueryPlan,
    /// Vocabulary terms outside the declared namespaces.
    pub warnings: Vec<String>,
}

fn unbound(var: &str, clause: &Clause) -> DslError {
    DslError::UnboundVariable {
        var: var.to_string(),
        line: clause.line,
        column: clause.column,
    }
}

/// Orders one block. `bound` holds the variables bound on entry.
fn schedule(clauses: &[Clause], mut bound: BTreeSet<String>) -> Result<Vec<Operator>, DslError> {
    let mut available = bound.clone();
    for c in clauses {
        available.extend(c.provides());
    }
    let mut bind_targets = BTreeSet::new();
    for c in clauses {
        if let ClauseKind::Bind { var, .. } = &c.kind {
            let in_pattern = clauses
                .iter()
                .any(|p| p.is_pattern() && p.provides().contains(var));
            if bound.contains(var) || in_pattern || !bind_targets.insert(var.clone()) {
                return Err(DslError::Syntax {
                    line: c.line,
                    column: c.column,
                    message: format!("?{var} is bound more than once"),
                });
            }
        }
    }

    let mut patterns: Vec<&Clause> = clauses.iter().filter(|c| c.is_pattern()).collect();
    patterns.sort_by_key(|c| match &c.kind {
        ClauseKind::Pattern(p) => std::cmp::Reverse(p.constant_count()),
        _ => unreachable!(),
    });
    let mut pending: Vec<&Clause> = clauses.iter().filter(|c| !c.is_pattern()).collect();
    let required = |c: &Clause| -> BTreeSet<String> {
        match &c.kind {
            ClauseKind::NotExists(_) => c.uses().intersection(&available).cloned().collect(),
            _ => c.uses(),
        }
    };

    let mut ops = Vec::new();
    let place = |pending: &mut Vec<&Clause>, bound: &mut BTreeSet<String>, ops: &mut Vec<Operator>| -> Result<(), DslError> {
        loop {
            let Some(i) = pending.iter().position(|c| required(c).is_subset(bound)) else {
                return Ok(());
            };
            let c = pending.remove(i);
            ops.push(match &c.kind {
                ClauseKind::Filter(expr) => Operator::Filter { expr: expr.clone() },
                ClauseKind::Bind { expr, var } => {
                    bound.insert(var.clone());
                    Operator::Bind {
                        expr: expr.clone(),
                        var: var.clone(),
                    }
                }
                ClauseKind::Geo { kind, a, b, eps } => Operator::Geo {
                    kind: *kind,
                    a: a.clone(),
                    b: b.clone(),
                    eps: *eps,
                },
                ClauseKind::NotExists(body) => Operator::AntiJoin {
                    on: required(c).into_iter().collect(),
                    body: schedule(body, bound.clone())?,
                },
                ClauseKind::Pattern(_) => unreachable!(),
            });
        }
    };

    place(&mut pending, &mut bound, &mut ops)?;
    for (k, c) in patterns.iter().enumerate() {
        let ClauseKind::Pattern(p) = &c.kind else { unreachable!() };
        if k == 0 {
            ops.push(Operator::Scan { pattern: p.clone() });
        } else {
            let on: BTreeSet<String> = p.variables().filter(|v| bound.contains(*v)).map(str::to_string).collect();
            ops.push(Operator::HashJoin {
                pattern: p.clone(),
                on: on.into_iter().collect(),
            });
        }
        bound.extend(p.variables().map(str::to_string));
        place(&mut pending, &mut bound, &mut ops)?;
    }
    if let Some(c) = pending.first() {
        let var = required(c).into_iter().find(|v| !bound.contains(v)).unwrap_or_default();
        return Err(unbound(&var, c));
    }
    Ok(ops)
}

/// Checks that every variable is bound somewhere it can be used and
/// that the target comes from a positive clause.
pub fn check_bindings(ast: &RuleAst) -> Result<(), DslError> {
    schedule(&ast.clauses, BTreeSet::new())?;
    if !ast.clauses.iter().any(|c| c.provides().contains(&ast.target)) {
        return Err(DslError::UnboundVariable {
            var: ast.target.clone(),
            line: ast.line,
            column: 1,
        });
    }
    Ok(())
}

/// Builds the operator pipeline and lists vocabulary the rule uses
/// that `vocab` does not declare.
pub fn compile_rule(ast: &RuleAst, vocab: &Vocabulary) -> Result<CompiledRule, DslError> {
    check_bindings(ast)?;
    let mut operators = schedule(&ast.clauses, BTreeSet::new())?;
    operators.push(Operator::Project {
        target: ast.target.clone(),
    });
    let mut warnings = Vec::new();
    let mut seen = BTreeSet::new();
    for c in &ast.clauses {
        for iri in c.iris() {
            if !vocab.is_known(&iri) && seen.insert(iri.clone()) {
                warnings.push(format!(
                    "rule '{}' line {}: unknown vocabulary term {}",
                    ast.id,
                    c.line,
                    vocab.compact(&iri)
                ));
            }
        }
    }
    Ok(CompiledRule {
        ast: ast.clone(),
        plan: QueryPlan {
            rule_id: ast.id.clone(),
            target: ast.target.clone(),
            operators,
        },
        warnings,
    })
}
