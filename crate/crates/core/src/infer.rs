//! Forward chaining over the triple store.
//!
//! Rewrite rules are conjunctive patterns with templated consequents.
//! Aggregate rules pick the extremal binding per group. Both carry a
//! stratum; [`materialize`] runs each stratum's rewrites to a fixpoint,
//! then that stratum's aggregates, then moves up. A rule may only read
//! what lower strata (or same-stratum rewrites, for aggregates) produce;
//! anything else is rejected when the rule set is built.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, HashMap};

use rayon::prelude::*;
use serde::Deserialize;
use thiserror::Error;

use crate::graph::{natural_cmp, Graph, Literal, PatternTerm, Term, TermId, Triple, TriplePattern};
use crate::vocab::Vocabulary;

const BUILTIN_RULES: &str = include_str!("../assets/reg-vocab.json");

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InferError {
    #[error("invalid rule document: {0}")]
    Document(String),
    #[error("rule '{rule}': cannot parse pattern '{text}': {message}")]
    Pattern { rule: String, text: String, message: String },
    #[error("rule '{rule}': variable ?{var} in the consequent is not bound by the antecedent")]
    UnboundVariable { rule: String, var: String },
    #[error("rule '{rule}' (stratum {stratum}) reads what '{other}' (stratum {other_stratum}) derives")]
    Unstratifiable {
        rule: String,
        stratum: u32,
        other: String,
        other_stratum: u32,
    },
    #[error("rule '{rule}': aggregated value {value} is not numeric")]
    NonNumeric { rule: String, value: String },
    #[error("rule '{rule}': {message}")]
    Expression { rule: String, message: String },
}

/// Arithmetic over bound numeric variables and named parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum ValueExpr {
    Number(f64),
    Var(String),
    Param(String),
    Neg(Box<ValueExpr>),
    Binary(char, Box<ValueExpr>, Box<ValueExpr>),
}

impl ValueExpr {
    /// Parses `?e - $ground_datum` style expressions. Parameters are
    /// substituted from `params` immediately.
    pub fn parse(text: &str, params: &BTreeMap<String, f64>) -> Result<Self, String> {
        let mut p = ExprParser {
            chars: text.chars().collect(),
            pos: 0,
            params,
        };
        let e = p.sum()?;
        p.skip_ws();
        if p.pos != p.chars.len() {
            return Err(format!("unexpected '{}' at offset {}", p.chars[p.pos], p.pos));
        }
        Ok(e)
    }

    fn variables<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            ValueExpr::Var(v) => out.push(v),
            ValueExpr::Neg(e) => e.variables(out),
            ValueExpr::Binary(_, a, b) => {
                a.variables(out);
                b.variables(out);
            }
            ValueExpr::Number(_) | ValueExpr::Param(_) => {}
        }
    }

    fn eval(&self, lookup: &dyn Fn(&str) -> Option<f64>) -> Option<f64> {
        Some(match self {
            ValueExpr::Number(v) => *v,
            ValueExpr::Var(v) => lookup(v)?,
            ValueExpr::Param(_) => return None,
            ValueExpr::Neg(e) => -e.eval(lookup)?,
            ValueExpr::Binary(op, a, b) => {
                let (a, b) = (a.eval(lookup)?, b.eval(lookup)?);
                match op {
                    '+' => a + b,
                    '-' => a - b,
                    '*' => a * b,
                    _ => a / b,
                }
            }
        })
    }
}

struct ExprParser<'a> {
    chars: Vec<char>,
    pos: usize,
    params: &'a BTreeMap<String, f64>,
}

impl ExprParser<'_> {
    fn skip_ws(&mut self) {
        while self.chars.get(self.pos).is_some_and(|c| c.is_whitespace()) {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.chars.get(self.pos).copied()
    }

    fn ident(&mut self) -> String {
        let start = self.pos;
        while self
            .chars
            .get(self.pos)
            .is_some_and(|c| c.is_alphanumeric() || *c == '_')
        {
            self.pos += 1;
        }
        self.chars[start..self.pos].iter().collect()
    }

    fn sum(&mut self) -> Result<ValueExpr, String> {
        let mut left = self.product()?;
        while let Some(op @ ('+' | '-')) = self.peek() {
            self.pos += 1;
            left = ValueExpr::Binary(op, Box::new(left), Box::new(self.product()?));
        }
        Ok(left)
    }

    fn product(&mut self) -> Result<ValueExpr, String> {
        let mut left = self.unary()?;
        while let Some(op @ ('*' | '/')) = self.peek() {
            self.pos += 1;
            left = ValueExpr::Binary(op, Box::new(left), Box::new(self.unary()?));
        }
        Ok(left)
    }

    fn unary(&mut self) -> Result<ValueExpr, String> {
        match self.peek() {
            Some('-') => {
                self.pos += 1;
                Ok(ValueExpr::Neg(Box::new(self.unary()?)))
            }
            Some('(') => {
                self.pos += 1;
                let e = self.sum()?;
                if self.peek() != Some(')') {
                    return Err("missing ')'".into());
                }
                self.pos += 1;
                Ok(e)
            }
            Some('?') => {
                self.pos += 1;
                let name = self.ident();
                if name.is_empty() {
                    return Err("empty variable name".into());
                }
                Ok(ValueExpr::Var(name))
            }
            Some('$') => {
                self.pos += 1;
                let name = self.ident();
                self.params
                    .get(&name)
                    .map(|v| ValueExpr::Number(*v))
                    .ok_or_else(|| format!("unknown parameter ${name}"))
            }
            Some(c) if c.is_ascii_digit() || c == '.' => {
                let start = self.pos;
                while self
                    .chars
                    .get(self.pos)
                    .is_some_and(|c| c.is_ascii_digit() || matches!(c, '.' | 'e' | 'E'))
                {
                    self.pos += 1;
                }
                let lit: String = self.chars[start..self.pos].iter().collect();
                lit.parse().map(ValueExpr::Number).map_err(|_| format!("bad number '{lit}'"))
            }
            Some(c) => Err(format!("unexpected '{c}'")),
            None => Err("unexpected end of expression".into()),
        }
    }
}

/// A variable bound to the value of an expression after the antecedent matched.
#[derive(Debug, Clone, PartialEq)]
pub struct Computed {
    pub var: String,
    pub expr: ValueExpr,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RewriteRule {
    pub name: String,
    pub antecedent: Vec<TriplePattern>,
    pub computed: Vec<Computed>,
    pub consequent: Vec<TriplePattern>,
    pub stratum: u32,
}

impl RewriteRule {
    pub fn new(
        name: impl Into<String>,
        antecedent: Vec<TriplePattern>,
        consequent: Vec<TriplePattern>,
        stratum: u32,
    ) -> Result<Self, InferError> {
        let rule = RewriteRule {
            name: name.into(),
            antecedent,
            computed: Vec::new(),
            consequent,
            stratum,
        };
        rule.validate()?;
        Ok(rule)
    }

    pub fn with_computed(mut self, computed: Vec<Computed>) -> Result<Self, InferError> {
        self.computed = computed;
        self.validate()?;
        Ok(self)
    }

    fn validate(&self) -> Result<(), InferError> {
        let mut bound: BTreeSet<&str> = self.antecedent.iter().flat_map(TriplePattern::variables).collect();
        for c in &self.computed {
            let mut used = Vec::new();
            c.expr.variables(&mut used);
            if let Some(v) = used.into_iter().find(|v| !bound.contains(v)) {
                return Err(InferError::UnboundVariable {
                    rule: self.name.clone(),
                    var: v.to_string(),
                });
            }
            bound.insert(&c.var);
        }
        check_bound(&self.name, &self.consequent, &bound)
    }
}

fn check_bound(rule: &str, consequent: &[TriplePattern], bound: &BTreeSet<&str>) -> Result<(), InferError> {
    for t in consequent {
        if let Some(v) = t.variables().find(|v| !bound.contains(v)) {
            return Err(InferError::UnboundVariable {
                rule: rule.to_string(),
                var: v.to_string(),
            });
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AggregateKind {
    Max,
    Min,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRule {
    pub name: String,
    pub patterns: Vec<TriplePattern>,
    /// Variables that identify a group.
    pub group: Vec<String>,
    /// Variable whose term breaks ties (smallest in natural order wins).
    pub pick: String,
    /// Variable holding the aggregated number.
    pub value: String,
    pub kind: AggregateKind,
    pub consequent: Vec<TriplePattern>,
    pub stratum: u32,
}

impl AggregateRule {
    fn validate(&self) -> Result<(), InferError> {
        let bound: BTreeSet<&str> = self.patterns.iter().flat_map(TriplePattern::variables).collect();
        for v in self.group.iter().chain([&self.pick, &self.value]) {
            if !bound.contains(v.as_str()) {
                return Err(InferError::UnboundVariable {
                    rule: self.name.clone(),
                    var: v.clone(),
                });
            }
        }
        check_bound(&self.name, &self.consequent, &bound)
    }
}

/// Rewrites, aggregates and the prune list, checked for stratification.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RuleSet {
    pub rewrites: Vec<RewriteRule>,
    pub aggregates: Vec<AggregateRule>,
    pub prune: Vec<TriplePattern>,
}

/// Counts from one [`materialize`] run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct InferStats {
    pub derived: usize,
    pub aggregated: usize,
    pub pruned: usize,
}

fn could_unify(a: &TriplePattern, b: &TriplePattern) -> bool {
    a.positions().iter().zip(b.positions()).all(|(x, y)| match (x, y) {
        (PatternTerm::Const(x), PatternTerm::Const(y)) => x == y,
        _ => true,
    })
}

fn reads(antecedent: &[TriplePattern], consequent: &[TriplePattern]) -> bool {
    antecedent.iter().any(|a| consequent.iter().any(|c| could_unify(a, c)))
}

impl RuleSet {
    pub fn new(
        rewrites: Vec<RewriteRule>,
        aggregates: Vec<AggregateRule>,
        prune: Vec<TriplePattern>,
    ) -> Result<Self, InferError> {
        for r in &rewrites {
            r.validate()?;
        }
        for a in &aggregates {
            a.validate()?;
        }
        let set = RuleSet {
            rewrites,
            aggregates,
            prune,
        };
        set.check_strata()?;
        Ok(set)
    }

    /// The shipped rule set with the ground datum at 0.
    pub fn builtin() -> Self {
        Self::from_json(BUILTIN_RULES, &BTreeMap::new()).expect("builtin rules load")
    }

    /// The shipped rule set with parameter overrides (e.g. `ground_datum`).
    pub fn builtin_with(params: &BTreeMap<String, f64>) -> Result<Self, InferError> {
        Self::from_json(BUILTIN_RULES, params)
    }

    /// Loads `rules`, `aggregates` and `prune` from a vocabulary document.
    /// Prefixes resolve through the document's own `namespaces`.
    pub fn from_json(text: &str, overrides: &BTreeMap<String, f64>) -> Result<Self, InferError> {
        let doc: RuleDoc = serde_json::from_str(text).map_err(|e| InferError::Document(e.to_string()))?;
        let vocab = Vocabulary::from_json(text).map_err(|e| InferError::Document(e.to_string()))?;
        let mut params = doc.params;
        params.extend(overrides.iter().map(|(k, v)| (k.clone(), *v)));

        let patterns = |rule: &str, texts: &[String]| -> Result<Vec<TriplePattern>, InferError> {
            texts
                .iter()
                .map(|t| {
                    parse_pattern(t, &vocab).map_err(|message| InferError::Pattern {
                        rule: rule.to_string(),
                        text: t.clone(),
                        message,
                    })
                })
                .collect()
        };
        let strip = |v: &str| v.trim_start_matches('?').to_string();

        let mut rewrites = Vec::new();
        for r in &doc.rules {
            let computed = r
                .compute
                .iter()
                .map(|c| {
                    ValueExpr::parse(&c.expr, &params)
                        .map(|expr| Computed { var: strip(&c.var), expr })
                        .map_err(|message| InferError::Expression {
                            rule: r.name.clone(),
                            message,
                        })
                })
                .collect::<Result<Vec<_>, _>>()?;
            rewrites.push(RewriteRule {
                name: r.name.clone(),
                antecedent: patterns(&r.name, &r.antecedent)?,
                computed,
                consequent: patterns(&r.name, &r.consequent)?,
                stratum: r.stratum,
            });
        }
        let mut aggregates = Vec::new();
        for a in &doc.aggregates {
            aggregates.push(AggregateRule {
                name: a.name.clone(),
                patterns: patterns(&a.name, &a.antecedent)?,
                group: a.group.iter().map(|g| strip(g)).collect(),
                pick: strip(&a.pick),
                value: strip(&a.value),
                kind: a.kind,
                consequent: patterns(&a.name, &a.consequent)?,
                stratum: a.stratum,
            });
        }
        let prune = patterns("prune", &doc.prune)?;
        RuleSet::new(rewrites, aggregates, prune)
    }

    /// Each rule may read only what lower strata derive. Aggregates may
    /// also read their own stratum's rewrites, which run first.
    pub fn check_strata(&self) -> Result<(), InferError> {
        check_rewrite_strata(&self.rewrites)?;
        for a in &self.aggregates {
            for r in &self.rewrites {
                if r.stratum > a.stratum && reads(&a.patterns, &r.consequent) {
                    return Err(unstratifiable(&a.name, a.stratum, &r.name, r.stratum));
                }
            }
            for b in &self.aggregates {
                if b.stratum >= a.stratum && reads(&a.patterns, &b.consequent) {
                    return Err(unstratifiable(&a.name, a.stratum, &b.name, b.stratum));
                }
            }
        }
        for r in &self.rewrites {
            for a in &self.aggregates {
                if a.stratum >= r.stratum && reads(&r.antecedent, &a.consequent) {
                    return Err(unstratifiable(&r.name, r.stratum, &a.name, a.stratum));
                }
            }
        }
        Ok(())
    }

    fn strata(&self) -> BTreeSet<u32> {
        self.rewrites
            .iter()
            .map(|r| r.stratum)
            .chain(self.aggregates.iter().map(|a| a.stratum))
            .collect()
    }
}

fn unstratifiable(rule: &str, stratum: u32, other: &str, other_stratum: u32) -> InferError {
    InferError::Unstratifiable {
        rule: rule.to_string(),
        stratum,
        other: other.to_string(),
        other_stratum,
    }
}

fn check_rewrite_strata(rules: &[RewriteRule]) -> Result<(), InferError> {
    for r in rules {
        for other in rules {
            if other.stratum > r.stratum && reads(&r.antecedent, &other.consequent) {
                return Err(unstratifiable(&r.name, r.stratum, &other.name, other.stratum));
            }
        }
    }
    Ok(())
}

#[derive(Deserialize)]
struct RuleDoc {
    #[serde(default)]
    params: BTreeMap<String, f64>,
    #[serde(default)]
    rules: Vec<RuleEntry>,
    #[serde(default)]
    aggregates: Vec<AggregateEntry>,
    #[serde(default)]
    prune: Vec<String>,
}

#[derive(Deserialize)]
struct RuleEntry {
    name: String,
    #[serde(default)]
    stratum: u32,
    #[serde(rename = "if")]
    antecedent: Vec<String>,
    #[serde(default)]
    compute: Vec<ComputeEntry>,
    #[serde(rename = "then")]
    consequent: Vec<String>,
}

#[derive(Deserialize)]
struct ComputeEntry {
    var: String,
    expr: String,
}

#[derive(Deserialize)]
struct AggregateEntry {
    name: String,
    #[serde(default)]
    stratum: u32,
    #[serde(rename = "if")]
    antecedent: Vec<String>,
    #[serde(default)]
    group: Vec<String>,
    pick: String,
    value: String,
    kind: AggregateKind,
    #[serde(rename = "then")]
    consequent: Vec<String>,
}

/// Parses `?s prefix:p "text"` style pattern text. Objects may be
/// quoted strings, numbers (integer or decimal), `true`/`false`,
/// CURIEs or `<iri>`s.
pub fn parse_pattern(text: &str, vocab: &Vocabulary) -> Result<TriplePattern, String> {
    let tokens = split_pattern(text)?;
    let [s, p, o]: [String; 3] = tokens
        .try_into()
        .map_err(|t: Vec<String>| format!("expected 3 terms, found {}", t.len()))?;
    let term = |tok: &str| -> Result<PatternTerm, String> {
        if let Some(v) = tok.strip_prefix('?') {
            if v.is_empty() {
                return Err("empty variable name".into());
            }
            return Ok(PatternTerm::var(v));
        }
        if let Some(body) = tok.strip_prefix('"') {
            return Ok(Literal::text(body.strip_suffix('"').unwrap_or(body)).into());
        }
        match tok {
            "true" => return Ok(Literal::boolean(true).into()),
            "false" => return Ok(Literal::boolean(false).into()),
            _ => {}
        }
        if tok.starts_with(|c: char| c.is_ascii_digit() || c == '-') {
            if let Ok(i) = tok.parse::<i64>() {
                return Ok(Literal::integer(i).into());
            }
            return tok
                .parse::<f64>()
                .map(|v| Literal::decimal(v).into())
                .map_err(|_| format!("bad number '{tok}'"));
        }
        vocab.resolve(tok).map(PatternTerm::from).map_err(|e| e.to_string())
    };
    let (s, p, o) = (term(&s)?, term(&p)?, term(&o)?);
    if matches!(&s, PatternTerm::Const(Term::Literal(_))) {
        return Err("a literal cannot be a subject".into());
    }
    if matches!(&p, PatternTerm::Const(t) if t.as_iri().is_none()) {
        return Err("predicate must be an IRI or a variable".into());
    }
    Ok(TriplePattern::new(s, p, o))
}

fn split_pattern(text: &str) -> Result<Vec<String>, String> {
    let mut out = Vec::new();
    let mut chars = text.chars().peekable();
    while let Some(&c) = chars.peek() {
        if c.is_whitespace() {
            chars.next();
            continue;
        }
        let mut tok = String::new();
        if c == '"' {
            tok.push(chars.next().unwrap());
            loop {
                match chars.next() {
                    Some('\\') => tok.extend(chars.next()),
                    Some('"') => break,
                    Some(ch) => tok.push(ch),
                    None => return Err("unterminated string".into()),
                }
            }
            tok.push('"');
        } else {
            while let Some(&ch) = chars.peek() {
                if ch.is_whitespace() {
                    break;
                }
                tok.push(ch);
                chars.next();
            }
        }
        out.push(tok);
    }
    Ok(out)
}

#[derive(Clone, Copy)]
enum Slot {
    Var(usize),
    Const(TermId),
}

/// A conjunction compiled against one graph's dictionary.
struct Conjunction {
    vars: Vec<String>,
    steps: Vec<[Slot; 3]>,
}

impl Conjunction {
    /// `None` when some constant is absent from the graph.
    fn compile(graph: &Graph, patterns: &[TriplePattern]) -> Option<Self> {
        let mut vars: Vec<String> = Vec::new();
        let mut compiled = Vec::with_capacity(patterns.len());
        for p in patterns {
            let mut slots = [Slot::Var(0); 3];
            for (slot, pos) in slots.iter_mut().zip(p.positions()) {
                *slot = match pos {
                    PatternTerm::Const(t) => Slot::Const(graph.term_id(t)?),
                    PatternTerm::Var(v) => Slot::Var(match vars.iter().position(|x| x == v) {
                        Some(i) => i,
                        None => {
                            vars.push(v.clone());
                            vars.len() - 1
                        }
                    }),
                };
            }
            compiled.push(slots);
        }
        // Greedy order: most bound positions first, ties by source order.
        let mut bound = vec![false; vars.len()];
        let mut remaining: Vec<[Slot; 3]> = compiled;
        let mut steps = Vec::with_capacity(remaining.len());
        while !remaining.is_empty() {
            let score = |s: &[Slot; 3]| {
                s.iter()
                    .filter(|x| match x {
                        Slot::Const(_) => true,
                        Slot::Var(i) => bound[*i],
                    })
                    .count()
            };
            let best = (0..remaining.len())
                .max_by(|a, b| score(&remaining[*a]).cmp(&score(&remaining[*b])).then(b.cmp(a)))
                .unwrap();
            let step = remaining.remove(best);
            for s in step {
                if let Slot::Var(i) = s {
                    bound[i] = true;
                }
            }
            steps.push(step);
        }
        Some(Conjunction { vars, steps })
    }

    fn solve(&self, graph: &Graph) -> Vec<Vec<TermId>> {
        let mut out = Vec::new();
        let mut row = vec![None; self.vars.len()];
        self.extend(graph, 0, &mut row, &mut out);
        out
    }

    fn extend(&self, graph: &Graph, depth: usize, row: &mut Vec<Option<TermId>>, out: &mut Vec<Vec<TermId>>) {
        let Some(step) = self.steps.get(depth) else {
            out.push(row.iter().map(|v| v.expect("all variables bound")).collect());
            return;
        };
        let key: Vec<Option<TermId>> = step
            .iter()
            .map(|s| match s {
                Slot::Const(id) => Some(*id),
                Slot::Var(i) => row[*i],
            })
            .collect();
        for ids in graph.scan(key[0], key[1], key[2]) {
            let mut newly = Vec::new();
            let mut ok = true;
            for (slot, id) in step.iter().zip(ids) {
                if let Slot::Var(i) = slot {
                    match row[*i] {
                        Some(existing) if existing != id => {
                            ok = false;
                            break;
                        }
                        Some(_) => {}
                        None => {
                            row[*i] = Some(id);
                            newly.push(*i);
                        }
                    }
                }
            }
            if ok {
                self.extend(graph, depth + 1, row, out);
            }
            for i in newly {
                row[i] = None;
            }
        }
    }

    fn index_of(&self, var: &str) -> Option<usize> {
        self.vars.iter().position(|v| v == var)
    }
}

fn instantiate(template: &TriplePattern, lookup: &dyn Fn(&str) -> Option<Term>) -> Option<Triple> {
    let resolve = |p: &PatternTerm| match p {
        PatternTerm::Const(t) => Some(t.clone()),
        PatternTerm::Var(v) => lookup(v),
    };
    let subject = resolve(&template.subject)?.as_subject()?;
    let predicate = resolve(&template.predicate)?.as_iri()?.clone();
    let object = resolve(&template.object)?;
    Some(Triple::new(subject, predicate, object))
}

/// Consequents of one rewrite rule against the current graph.
fn derive(graph: &Graph, rule: &RewriteRule) -> Vec<Triple> {
    let Some(conj) = Conjunction::compile(graph, &rule.antecedent) else {
        return Vec::new();
    };
    let mut out = Vec::new();
    for row in conj.solve(graph) {
        let mut extra: HashMap<&str, Term> = HashMap::new();
        let mut complete = true;
        for c in &rule.computed {
            let lookup = |v: &str| {
                if let Some(t) = extra.get(v) {
                    return t.as_literal().and_then(Literal::as_f64);
                }
                conj.index_of(v)
                    .and_then(|i| graph.term(row[i]).as_literal())
                    .and_then(Literal::as_f64)
            };
            match c.expr.eval(&lookup) {
                Some(v) if v.is_finite() => {
                    extra.insert(&c.var, Literal::decimal(v).into());
                }
                _ => {
                    complete = false;
                    break;
                }
            }
        }
        if !complete {
            continue;
        }
        let lookup = |v: &str| {
            extra
                .get(v)
                .cloned()
                .or_else(|| conj.index_of(v).map(|i| graph.term(row[i]).clone()))
        };
        out.extend(rule.consequent.iter().filter_map(|t| instantiate(t, &lookup)));
    }
    out
}

fn fixpoint_stratum(graph: &mut Graph, rules: &[&RewriteRule]) -> usize {
    let mut added = 0;
    loop {
        let snapshot: &Graph = graph;
        let batches: Vec<Vec<Triple>> = rules.par_iter().map(|r| derive(snapshot, r)).collect();
        let mut round = 0;
        for t in batches.into_iter().flatten() {
            if graph.insert(t) {
                round += 1;
            }
        }
        if round == 0 {
            return added;
        }
        added += round;
    }
}

/// Runs each stratum of `rules` to a fixpoint, lowest first. Returns
/// the number of triples added.
pub fn apply_fixpoint(graph: &mut Graph, rules: &[RewriteRule]) -> Result<usize, InferError> {
    for r in rules {
        r.validate()?;
    }
    check_rewrite_strata(rules)?;
    let strata: BTreeSet<u32> = rules.iter().map(|r| r.stratum).collect();
    let mut added = 0;
    for s in strata {
        let layer: Vec<&RewriteRule> = rules.iter().filter(|r| r.stratum == s).collect();
        added += fixpoint_stratum(graph, &layer);
    }
    Ok(added)
}

fn term_text(t: &Term) -> String {
    match t {
        Term::Iri(i) => i.as_str().to_string(),
        Term::Literal(l) => l.lexical().to_string(),
        Term::Blank(b) => format!("_:b{b}"),
    }
}

fn aggregate_one(graph: &mut Graph, rule: &AggregateRule) -> Result<usize, InferError> {
    let Some(conj) = Conjunction::compile(graph, &rule.patterns) else {
        return Ok(0);
    };
    let group_idx: Vec<usize> = rule.group.iter().filter_map(|g| conj.index_of(g)).collect();
    let (Some(pick), Some(value)) = (conj.index_of(&rule.pick), conj.index_of(&rule.value)) else {
        return Ok(0);
    };
    // Best row per group: (value, pick text, row).
    let mut best: BTreeMap<Vec<TermId>, (f64, String, Vec<TermId>)> = BTreeMap::new();
    for row in conj.solve(graph) {
        let term = graph.term(row[value]);
        let v = term
            .as_literal()
            .and_then(Literal::as_f64)
            .ok_or_else(|| InferError::NonNumeric {
                rule: rule.name.clone(),
                value: term.to_string(),
            })?;
        let key: Vec<TermId> = group_idx.iter().map(|i| row[*i]).collect();
        let pick_text = term_text(graph.term(row[pick]));
        let better = match best.get(&key) {
            None => true,
            Some((bv, bp, _)) => {
                let by_value = match rule.kind {
                    AggregateKind::Max => v.total_cmp(bv),
                    AggregateKind::Min => bv.total_cmp(&v),
                };
                match by_value {
                    Ordering::Greater => true,
                    Ordering::Less => false,
                    Ordering::Equal => natural_cmp(&pick_text, bp) == Ordering::Less,
                }
            }
        };
        if better {
            best.insert(key, (v, pick_text, row));
        }
    }
    let triples: Vec<Triple> = best
        .into_values()
        .flat_map(|(_, _, row)| {
            let lookup = |v: &str| conj.index_of(v).map(|i| graph.term(row[i]).clone());
            rule.consequent
                .iter()
                .filter_map(|t| instantiate(t, &lookup))
                .collect::<Vec<_>>()
        })
        .collect();
    Ok(graph.extend(triples))
}

/// Asserts the consequents of each group's extremal binding. Ties go
/// to the smallest pick term in natural order (`inst/7` before `inst/12`).
pub fn apply_aggregates(graph: &mut Graph, rules: &[AggregateRule]) -> Result<usize, InferError> {
    let mut ordered: Vec<&AggregateRule> = rules.iter().collect();
    ordered.sort_by_key(|r| r.stratum);
    let mut added = 0;
    for r in ordered {
        r.validate()?;
        added += aggregate_one(graph, r)?;
    }
    Ok(added)
}

/// Removes every triple matching any pattern.
pub fn prune(graph: &mut Graph, patterns: &[TriplePattern]) -> usize {
    patterns.iter().map(|p| graph.remove_matching(p)).sum()
}

/// The shipped rule set: classification shortcut, WC, physical and
/// structure element typing, fire duration, highest storey, storey
/// floor and fire height.
pub fn builtin_rules() -> RuleSet {
    RuleSet::builtin()
}

/// Runs all strata in order, then prunes.
pub fn materialize(graph: &mut Graph, rules: &RuleSet) -> Result<InferStats, InferError> {
    rules.check_strata()?;
    let mut stats = InferStats::default();
    for s in rules.strata() {
        let layer: Vec<&RewriteRule> = rules.rewrites.iter().filter(|r| r.stratum == s).collect();
        stats.derived += fixpoint_stratum(graph, &layer);
        for a in rules.aggregates.iter().filter(|a| a.stratum == s) {
            stats.aggregated += aggregate_one(graph, a)?;
        }
    }
    stats.pruned = prune(graph, &rules.prune);
    Ok(stats)
}
