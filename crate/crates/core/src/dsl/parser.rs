//! Recursive-descent parser for `.rule` sources.

use super::ast::{BinaryOp, Builtin, Clause, ClauseKind, Expr, GeoKind, RuleAst, UnaryOp};
use super::lexer::{tokenize, Tok, Token};
use super::plan::check_bindings;
use super::DslError;
use crate::graph::{Literal, PatternTerm, Term, TriplePattern};
use crate::vocab::{self, Vocabulary};

const RESERVED: &[&str] = &[
    "RULE", "TOPIC", "SEVERITY", "IF", "THEN", "NON-COMPLIANT", "MESSAGE", "TYPE", "PROP", "FILTER", "NOT",
    "EXISTS", "GEO", "INTERSECTS", "ADJACENT", "EPS", "BIND", "AS", "AND", "OR",
];

struct Parser<'a> {
    tokens: Vec<Token>,
    pos: usize,
    vocab: &'a Vocabulary,
}

impl Parser<'_> {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos.min(self.tokens.len() - 1)]
    }

    fn peek2(&self) -> &Tok {
        &self.tokens[(self.pos + 1).min(self.tokens.len() - 1)].tok
    }

    fn next(&mut self) -> Token {
        let t = self.peek().clone();
        if t.tok != Tok::Eof {
            self.pos += 1;
        }
        t
    }

    fn error_at(&self, t: &Token, message: impl Into<String>) -> DslError {
        DslError::Syntax {
            line: t.line,
            column: t.column,
            message: message.into(),
        }
    }

    fn describe(tok: &Tok) -> String {
        match tok {
            Tok::Ident(s) => s.clone(),
            Tok::Var(v) => format!("?{v}"),
            Tok::Str(s) => format!("\"{s}\""),
            Tok::Num(n) => n.to_string(),
            Tok::Curie(c) => c.clone(),
            Tok::Iri(i) => format!("<{i}>"),
            Tok::LParen => "'('".into(),
            Tok::RParen => "')'".into(),
            Tok::LBrace => "'{'".into(),
            Tok::RBrace => "'}'".into(),
            Tok::Comma => "','".into(),
            Tok::Op(o) => format!("'{o}'"),
            Tok::Eof => "end of input".into(),
        }
    }

    fn is_keyword(&self, kw: &str) -> bool {
        matches!(&self.peek().tok, Tok::Ident(s) if s == kw)
    }

    fn keyword(&mut self, kw: &str) -> Result<Token, DslError> {
        if self.is_keyword(kw) {
            Ok(self.next())
        } else {
            let t = self.peek().clone();
            Err(self.error_at(&t, format!("expected {kw}, found {}", Self::describe(&t.tok))))
        }
    }

    fn var(&mut self) -> Result<String, DslError> {
        let t = self.next();
        match &t.tok {
            Tok::Var(v) => Ok(v.clone()),
            other => Err(self.error_at(&t, format!("expected a variable, found {}", Self::describe(other)))),
        }
    }

    fn word(&mut self, what: &str) -> Result<String, DslError> {
        let t = self.next();
        match &t.tok {
            Tok::Ident(s) | Tok::Str(s) => Ok(s.clone()),
            other => Err(self.error_at(&t, format!("expected {what}, found {}", Self::describe(other)))),
        }
    }

    fn resolve(&self, t: &Token) -> Result<Option<Term>, DslError> {
        let text = match &t.tok {
            Tok::Curie(c) => c.clone(),
            Tok::Iri(i) => format!("<{i}>"),
            _ => return Ok(None),
        };
        self.vocab
            .resolve(&text)
            .map(|i| Some(Term::Iri(i)))
            .map_err(|e| self.error_at(t, e.to_string()))
    }

    fn iri_term(&mut self) -> Result<Term, DslError> {
        let t = self.next();
        match self.resolve(&t)? {
            Some(term) => Ok(term),
            None => Err(self.error_at(&t, format!("expected an IRI, found {}", Self::describe(&t.tok)))),
        }
    }

    fn pattern_object(&mut self) -> Result<PatternTerm, DslError> {
        let t = self.next();
        if let Some(term) = self.resolve(&t)? {
            return Ok(term.into());
        }
        Ok(match &t.tok {
            Tok::Var(v) => PatternTerm::var(v),
            Tok::Str(s) => Literal::text(s).into(),
            Tok::Num(n) => Literal::decimal(*n).into(),
            Tok::Op("-") => match self.next().tok {
                Tok::Num(n) => Literal::decimal(-n).into(),
                _ => return Err(self.error_at(&t, "expected a number after '-'")),
            },
            Tok::Ident(s) if s == "true" || s == "false" => Literal::boolean(s == "true").into(),
            other => {
                return Err(self.error_at(
                    &t,
                    format!("expected a variable, literal or IRI, found {}", Self::describe(other)),
                ))
            }
        })
    }

    fn rule(&mut self) -> Result<RuleAst, DslError> {
        let start = self.keyword("RULE")?;
        let id_tok = self.next();
        let Tok::Str(id) = id_tok.tok.clone() else {
            return Err(self.error_at(&id_tok, "expected a quoted rule id"));
        };
        self.keyword("TOPIC")?;
        let topic = self.word("a topic")?;
        let severity = if self.is_keyword("SEVERITY") {
            self.next();
            self.word("a severity")?
        } else {
            "error".to_string()
        };
        self.keyword("IF")?;
        let clauses = self.clauses(&["THEN"])?;
        self.keyword("THEN")?;
        self.keyword("NON-COMPLIANT")?;
        let target = self.var()?;
        let message = if self.is_keyword("MESSAGE") {
            self.next();
            let t = self.next();
            match &t.tok {
                Tok::Str(s) => Some(s.clone()),
                other => return Err(self.error_at(&t, format!("expected a message string, found {}", Self::describe(other)))),
            }
        } else {
            None
        };
        Ok(RuleAst {
            id,
            topic,
            severity,
            clauses,
            target,
            message,
            line: start.line,
        })
    }

    /// Clauses up to (not including) one of `stops`; at least one.
    fn clauses(&mut self, stops: &[&str]) -> Result<Vec<Clause>, DslError> {
        let mut out = Vec::new();
        loop {
            let t = self.peek().clone();
            let stop = match &t.tok {
                Tok::Ident(s) => stops.contains(&s.as_str()),
                Tok::RBrace => stops.contains(&"}"),
                Tok::Eof => true,
                _ => false,
            };
            if stop {
                if out.is_empty() {
                    return Err(self.error_at(&t, format!("expected a clause, found {}", Self::describe(&t.tok))));
                }
                return Ok(out);
            }
            out.push(self.clause()?);
        }
    }

    fn clause(&mut self) -> Result<Clause, DslError> {
        let t = self.next();
        let kind = match &t.tok {
            Tok::Var(v) => {
                let subject = PatternTerm::var(v);
                let kw = self.next();
                match &kw.tok {
                    Tok::Ident(k) if k == "TYPE" => {
                        let class = self.iri_term()?;
                        ClauseKind::Pattern(TriplePattern::new(subject, vocab::rdf_type(), class))
                    }
                    Tok::Ident(k) if k == "PROP" => {
                        let pred_tok = self.peek().clone();
                        let predicate = match &pred_tok.tok {
                            Tok::Var(p) => {
                                self.next();
                                PatternTerm::var(p)
                            }
                            _ => self.iri_term()?.into(),
                        };
                        let object = self.pattern_object()?;
                        ClauseKind::Pattern(TriplePattern {
                            subject,
                            predicate,
                            object,
                        })
                    }
                    other => {
                        return Err(self.error_at(&kw, format!("expected TYPE or PROP, found {}", Self::describe(other))))
                    }
                }
            }
            Tok::Ident(k) if k == "FILTER" => {
                if self.is_keyword("NOT") && matches!(self.peek2(), Tok::Ident(s) if s == "EXISTS") {
                    self.next();
                    self.next();
                    ClauseKind::NotExists(self.block()?)
                } else {
                    ClauseKind::Filter(self.expr()?)
                }
            }
            Tok::Ident(k) if k == "NOT" => {
                self.keyword("EXISTS")?;
                ClauseKind::NotExists(self.block()?)
            }
            Tok::Ident(k) if k == "GEO" => {
                let kt = self.next();
                let kind = match &kt.tok {
                    Tok::Ident(s) if s == "INTERSECTS" => GeoKind::Intersects,
                    Tok::Ident(s) if s == "ADJACENT" => GeoKind::Adjacent,
                    other => {
                        return Err(self.error_at(
                            &kt,
                            format!("expected INTERSECTS or ADJACENT, found {}", Self::describe(other)),
                        ))
                    }
                };
                let a = self.var()?;
                let b = self.var()?;
                let eps = if self.is_keyword("EPS") {
                    self.next();
                    let n = self.next();
                    match n.tok {
                        Tok::Num(v) if v > 0.0 => Some(v),
                        _ => return Err(self.error_at(&n, "EPS needs a positive number")),
                    }
                } else {
                    None
                };
                ClauseKind::Geo { kind, a, b, eps }
            }
            Tok::Ident(k) if k == "BIND" => {
                let expr = self.expr()?;
                self.keyword("AS")?;
                let var = self.var()?;
                ClauseKind::Bind { expr, var }
            }
            other => return Err(self.error_at(&t, format!("expected a clause, found {}", Self::describe(other)))),
        };
        Ok(Clause {
            kind,
            line: t.line,
            column: t.column,
        })
    }

    fn block(&mut self) -> Result<Vec<Clause>, DslError> {
        let open = self.next();
        if open.tok != Tok::LBrace {
            return Err(self.error_at(&open, "expected '{'"));
        }
        let body = self.clauses(&["}"])?;
        let close = self.next();
        if close.tok != Tok::RBrace {
            return Err(self.error_at(&close, "expected '}'"));
        }
        Ok(body)
    }

    fn expr(&mut self) -> Result<Expr, DslError> {
        let mut left = self.and_expr()?;
        while self.is_keyword("OR") || self.peek().tok == Tok::Op("||") {
            self.next();
            left = Expr::Binary(BinaryOp::Or, Box::new(left), Box::new(self.and_expr()?));
        }
        Ok(left)
    }

    fn and_expr(&mut self) -> Result<Expr, DslError> {
        let mut left = self.not_expr()?;
        while self.is_keyword("AND") || self.peek().tok == Tok::Op("&&") {
            self.next();
            left = Expr::Binary(BinaryOp::And, Box::new(left), Box::new(self.not_expr()?));
        }
        Ok(left)
    }

    fn not_expr(&mut self) -> Result<Expr, DslError> {
        if (self.is_keyword("NOT") && !matches!(self.peek2(), Tok::Ident(s) if s == "EXISTS"))
            || self.peek().tok == Tok::Op("!")
        {
            self.next();
            return Ok(Expr::Unary(UnaryOp::Not, Box::new(self.not_expr()?)));
        }
        self.comparison()
    }

    fn comparison(&mut self) -> Result<Expr, DslError> {
        let left = self.additive()?;
        let op = match self.peek().tok {
            Tok::Op("=") => BinaryOp::Eq,
            Tok::Op("!=") => BinaryOp::Ne,
            Tok::Op("<") => BinaryOp::Lt,
            Tok::Op("<=") => BinaryOp::Le,
            Tok::Op(">") => BinaryOp::Gt,
            Tok::Op(">=") => BinaryOp::Ge,
            _ => return Ok(left),
        };
        self.next();
        Ok(Expr::Binary(op, Box::new(left), Box::new(self.additive()?)))
    }

    fn additive(&mut self) -> Result<Expr, DslError> {
        let mut left = self.multiplicative()?;
        loop {
            let op = match self.peek().tok {
                Tok::Op("+") => BinaryOp::Add,
                Tok::Op("-") => BinaryOp::Sub,
                _ => return Ok(left),
            };
            self.next();
            left = Expr::Binary(op, Box::new(left), Box::new(self.multiplicative()?));
        }
    }

    fn multiplicative(&mut self) -> Result<Expr, DslError> {
        let mut left = self.unary()?;
        loop {
            let op = match self.peek().tok {
                Tok::Op("*") => BinaryOp::Mul,
                Tok::Op("/") => BinaryOp::Div,
                _ => return Ok(left),
            };
            self.next();
            left = Expr::Binary(op, Box::new(left), Box::new(self.unary()?));
        }
    }

    fn unary(&mut self) -> Result<Expr, DslError> {
        if self.peek().tok == Tok::Op("-") {
            self.next();
            return Ok(Expr::Unary(UnaryOp::Neg, Box::new(self.unary()?)));
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<Expr, DslError> {
        let t = self.next();
        if let Some(term) = self.resolve(&t)? {
            return Ok(Expr::Term(term));
        }
        match &t.tok {
            Tok::Num(n) => Ok(Expr::Number(*n)),
            Tok::Str(s) => Ok(Expr::Text(s.clone())),
            Tok::Var(v) => Ok(Expr::Var(v.clone())),
            Tok::LParen => {
                let e = self.expr()?;
                let close = self.next();
                if close.tok != Tok::RParen {
                    return Err(self.error_at(&close, format!("expected ')', found {}", Self::describe(&close.tok))));
                }
                Ok(e)
            }
            Tok::Ident(s) if s == "true" || s == "false" => Ok(Expr::Bool(s == "true")),
            Tok::Ident(name) if self.peek().tok == Tok::LParen => {
                let builtin = Builtin::from_name(name).ok_or_else(|| DslError::UnknownBuiltin {
                    name: name.clone(),
                    line: t.line,
                    column: t.column,
                })?;
                self.next();
                let mut args = Vec::new();
                if self.peek().tok != Tok::RParen {
                    loop {
                        args.push(self.expr()?);
                        if self.peek().tok == Tok::Comma {
                            self.next();
                        } else {
                            break;
                        }
                    }
                }
                let close = self.next();
                if close.tok != Tok::RParen {
                    return Err(self.error_at(&close, format!("expected ')', found {}", Self::describe(&close.tok))));
                }
                let (lo, hi) = builtin.arity();
                if args.len() < lo || args.len() > hi {
                    return Err(self.error_at(
                        &t,
                        format!("{} takes {lo}..={hi} arguments, got {}", builtin.name(), args.len()),
                    ));
                }
                Ok(Expr::Call(builtin, args))
            }
            Tok::Ident(s) if !RESERVED.contains(&s.as_str()) => Ok(Expr::Symbol(s.clone())),
            other => Err(self.error_at(&t, format!("expected an expression, found {}", Self::describe(other)))),
        }
    }
}

/// Parses every rule in `source`, resolving CURIEs through `vocab`.
pub fn parse_rules(source: &str, vocab: &Vocabulary) -> Result<Vec<RuleAst>, DslError> {
    let mut p = Parser {
        tokens: tokenize(source)?,
        pos: 0,
        vocab,
    };
    let mut rules = Vec::new();
    while p.peek().tok != Tok::Eof {
        let rule = p.rule()?;
        check_bindings(&rule)?;
        rules.push(rule);
    }
    if rules.is_empty() {
        let t = p.peek().clone();
        return Err(p.error_at(&t, "expected RULE"));
    }
    Ok(rules)
}

/// Parses exactly one rule against the builtin vocabulary.
pub fn parse_rule(source: &str) -> Result<RuleAst, DslError> {
    parse_rule_with(source, &Vocabulary::builtin())
}

pub fn parse_rule_with(source: &str, vocab: &Vocabulary) -> Result<RuleAst, DslError> {
    let mut rules = parse_rules(source, vocab)?;
    if rules.len() != 1 {
        return Err(DslError::Syntax {
            line: rules[1].line,
            column: 1,
            message: format!("expected one rule, found {}", rules.len()),
        });
    }
    Ok(rules.remove(0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::{FIRE_RULE, WC_RULE};

    #[test]
    fn wc_rule_structure() {
        let ast = parse_rule(WC_RULE).unwrap();
        assert_eq!(ast.id, "acc-wc-freespace-01");
        assert_eq!(ast.topic, "accessibility");
        assert_eq!(ast.severity, "error");
        assert_eq!(ast.target, "wc");
        let count = |f: fn(&ClauseKind) -> bool| ast.clauses.iter().filter(|c| f(&c.kind)).count();
        assert_eq!(count(|k| matches!(k, ClauseKind::Pattern(_))), 1);
        assert_eq!(count(|k| matches!(k, ClauseKind::Bind { .. })), 2);
        assert_eq!(count(|k| matches!(k, ClauseKind::Filter(_))), 1);
        assert_eq!(ast.clauses.len(), 4);
        assert_eq!(ast.message.as_deref(), Some("WC lacks a 0.8 x 1.0 m free space on either side"));
    }

    #[test]
    fn fire_rule_structure() {
        let ast = parse_rule(FIRE_RULE).unwrap();
        assert_eq!(ast.target, "e");
        assert_eq!(ast.clauses.iter().filter(|c| c.is_pattern()).count(), 4);
    }

    #[test]
    fn unbound_filter_variable() {
        let err = parse_rule("RULE \"x\" TOPIC t IF FILTER ?y > 1 THEN NON-COMPLIANT ?y").unwrap_err();
        assert!(matches!(err, DslError::UnboundVariable { ref var, .. } if var == "y"), "{err:?}");
    }

    #[test]
    fn missing_then() {
        let err = parse_rule("RULE \"x\" TOPIC t IF ?a TYPE reg:WC NON-COMPLIANT ?a").unwrap_err();
        assert!(matches!(err, DslError::Syntax { line: 1, .. }), "{err:?}");
        let err = parse_rule("RULE \"x\" TOPIC t IF ?a TYPE reg:WC").unwrap_err();
        assert!(matches!(err, DslError::Syntax { .. }), "{err:?}");
    }

    #[test]
    fn unknown_builtin() {
        let err = parse_rule("RULE \"x\" TOPIC t IF ?a TYPE reg:WC\n  BIND WIDTH(?a) AS ?w THEN NON-COMPLIANT ?a").unwrap_err();
        assert_eq!(
            err,
            DslError::UnknownBuiltin {
                name: "WIDTH".into(),
                line: 2,
                column: 8
            }
        );
    }

    #[test]
    fn syntax_error_position() {
        let err = parse_rule("RULE \"x\" TOPIC t IF\n  ?a TYPE 42\nTHEN NON-COMPLIANT ?a").unwrap_err();
        assert_eq!(
            err,
            DslError::Syntax {
                line: 2,
                column: 11,
                message: "expected an IRI, found 42".into()
            }
        );
    }

    #[test]
    fn target_must_be_bound_positively() {
        let err = parse_rule("RULE \"x\" TOPIC t IF ?a TYPE reg:WC NOT EXISTS { ?b PROP reg:floorOf ?a } THEN NON-COMPLIANT ?b")
            .unwrap_err();
        assert!(matches!(err, DslError::UnboundVariable { ref var, .. } if var == "b"), "{err:?}");
    }

    #[test]
    fn not_exists_and_geo() {
        let src = r#"
            # slabs that are nobody's floor and touch a wall
            RULE "x" TOPIC t SEVERITY warning IF
              ?s TYPE ifc:IfcSlab
              ?w TYPE ifc:IfcWall
              NOT EXISTS { ?s PROP reg:floorOf ?st }
              GEO ADJACENT ?s ?w EPS 0.01
              FILTER ?s != ?w AND NOT (1 > 2)
            THEN NON-COMPLIANT ?s"#;
        let ast = parse_rule(src).unwrap();
        assert_eq!(ast.severity, "warning");
        assert!(matches!(&ast.clauses[2].kind, ClauseKind::NotExists(b) if b.len() == 1));
        assert!(matches!(
            &ast.clauses[3].kind,
            ClauseKind::Geo { kind: GeoKind::Adjacent, eps: Some(e), .. } if (*e - 0.01).abs() < 1e-12
        ));
    }

    #[test]
    fn prop_literals() {
        let ast = parse_rule("RULE \"x\" TOPIC t IF ?a PROP ifc:loadBearing true ?a PROP ifc:name \"W1\" THEN NON-COMPLIANT ?a")
            .unwrap();
        let ClauseKind::Pattern(p) = &ast.clauses[0].kind else { panic!() };
        assert_eq!(p.object, PatternTerm::from(Literal::boolean(true)));
    }

    #[test]
    fn unknown_prefix_is_syntax_error() {
        assert!(matches!(
            parse_rule("RULE \"x\" TOPIC t IF ?a TYPE zz:WC THEN NON-COMPLIANT ?a"),
            Err(DslError::Syntax { .. })
        ));
    }

    #[test]
    fn several_rules_in_one_source() {
        let src = format!("{WC_RULE}\n{FIRE_RULE}");
        assert_eq!(parse_rules(&src, &Vocabulary::builtin()).unwrap().len(), 2);
        assert!(parse_rule(&src).is_err());
    }
}
