//! Static checks on rules. Findings here are advice, not errors.

use std::collections::BTreeSet;
use std::fmt;

use serde::Serialize;

use super::ast::{Clause, ClauseKind, RuleAst};
use super::pack::RulePack;
use crate::graph::PatternTerm;
use crate::vocab::{self, Vocabulary};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum LintKind {
    UnknownTerm,
    UnusedVariable,
    UnreachableClause,
    Vacuous,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct Diagnostic {
    pub rule: String,
    pub kind: LintKind,
    pub line: usize,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (line {}): {}", self.rule, self.line, self.message)
    }
}

fn walk<'a>(clauses: &'a [Clause], out: &mut Vec<&'a Clause>) {
    for c in clauses {
        out.push(c);
        if let ClauseKind::NotExists(body) = &c.kind {
            walk(body, out);
        }
    }
}

pub fn lint_rule(rule: &RuleAst, vocab: &Vocabulary) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let diag = |kind, line, message: String| Diagnostic {
        rule: rule.id.clone(),
        kind,
        line,
        message,
    };
    let mut all = Vec::new();
    walk(&rule.clauses, &mut all);

    let mut seen = BTreeSet::new();
    for c in &all {
        if matches!(c.kind, ClauseKind::NotExists(_)) {
            continue;
        }
        for iri in c.iris() {
            if !vocab.is_known(&iri) && seen.insert(iri.clone()) {
                out.push(diag(
                    LintKind::UnknownTerm,
                    c.line,
                    format!("unknown vocabulary term {}", vocab.compact(&iri)),
                ));
            }
        }
    }

    for (var, n) in rule.variable_counts() {
        if n == 1 {
            let line = all
                .iter()
                .find(|c| c.uses().contains(&var) || c.provides().contains(&var))
                .map_or(rule.line, |c| c.line);
            out.push(diag(LintKind::UnusedVariable, line, format!("?{var} is used only once")));
        }
    }

    for c in &all {
        if let ClauseKind::Filter(e) = &c.kind {
            let mut vars = BTreeSet::new();
            e.variables(&mut vars);
            if vars.is_empty() {
                out.push(diag(
                    LintKind::UnreachableClause,
                    c.line,
                    format!("FILTER {e} reads no variables; it is constant"),
                ));
            }
        }
    }

    let rdf_type = vocab::rdf_type();
    let constrained = all.iter().any(|c| match &c.kind {
        ClauseKind::Pattern(p) => !matches!(&p.predicate, PatternTerm::Const(t) if t.as_iri() == Some(&rdf_type)),
        ClauseKind::Filter(_) | ClauseKind::Geo { .. } | ClauseKind::NotExists(_) => true,
        ClauseKind::Bind { .. } => false,
    });
    if !constrained {
        out.push(diag(
            LintKind::Vacuous,
            rule.line,
            "no geometric or property constraint; every typed element would be flagged".into(),
        ));
    }
    out
}

/// Lints every rule of a pack.
pub fn lint_pack(pack: &RulePack, vocab: &Vocabulary) -> Vec<Diagnostic> {
    pack.rules.iter().flat_map(|r| lint_rule(&r.ast, vocab)).collect()
}
