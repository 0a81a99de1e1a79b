//! The rule language: parsing, planning, execution and packs.
//!
//! ```text
//! RULE "id" TOPIC topic [SEVERITY level]
//! IF clause+
//! THEN NON-COMPLIANT ?target [MESSAGE "text"]
//! ```
//!
//! Clauses are `?v TYPE iri`, `?v PROP iri obj`, `FILTER expr`,
//! `NOT EXISTS { clause+ }`, `GEO INTERSECTS|ADJACENT ?a ?b [EPS n]` and
//! `BIND expr AS ?v`. Clause order does not matter for the result: each
//! non-pattern clause runs once its variables are bound. A message may
//! mention the target variable as `{?target}` (spelled with the rule's
//! own variable name), which expands to its IRI.

mod ast;
mod exec;
mod lexer;
mod lint;
mod pack;
mod parser;
mod plan;

use thiserror::Error;

pub use ast::{BinaryOp, Builtin, Clause, ClauseKind, Expr, GeoKind, RuleAst, UnaryOp};
pub use exec::{eval_expr, eval_geo, execute, EvalError, ExecContext, ExecOutput, Explanation, RuleMatch, Value, ROLE_FREESPACE};
pub use lexer::{tokenize, Tok, Token};
pub use lint::{lint_pack, lint_rule, Diagnostic, LintKind};
pub use pack::{
    default_pack_archive, load_pack, load_pack_path, pack_directory, resolve_fire_threshold, write_zip, DefaultsPatch,
    Manifest, PackDefaults, PackError, RulePack,
};
pub use parser::{parse_rule, parse_rule_with, parse_rules};
pub use plan::{check_bindings, compile_rule, CompiledRule, Operator, QueryPlan};

/// The shipped WC clearance rule.
pub const WC_RULE: &str = include_str!("../../assets/default-pack/rules/accessibility.rule");
/// The shipped structural fire-resistance rule.
pub const FIRE_RULE: &str = include_str!("../../assets/default-pack/rules/fire_safety.rule");

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DslError {
    #[error("{line}:{column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("{line}:{column}: variable ?{var} is never bound by a positive clause")]
    UnboundVariable { var: String, line: usize, column: usize },
    #[error("{line}:{column}: unknown builtin {name}")]
    UnknownBuiltin { name: String, line: usize, column: usize },
    #[error("fire threshold: {0}")]
    Threshold(String),
}
