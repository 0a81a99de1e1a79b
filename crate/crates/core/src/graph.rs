//! In-memory triple store with three permutation indexes.
//!
//! Terms are interned into a per-graph dictionary so the indexes hold
//! only `[u32; 3]` keys. Literal identity is by value within kind: the
//! decimals `9.0` and `9.000000` are the same term, the integer `60` and
//! the text `"60"` are not.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::hash::{Hash, Hasher};
use std::ops::Bound;
use std::sync::Arc;

use thiserror::Error;

pub const XSD_DECIMAL: &str = "http://www.w3.org/2001/XMLSchema#decimal";
pub const XSD_INTEGER: &str = "http://www.w3.org/2001/XMLSchema#integer";
pub const XSD_BOOLEAN: &str = "http://www.w3.org/2001/XMLSchema#boolean";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TermError {
    #[error("invalid IRI '{0}'")]
    InvalidIri(String),
    #[error("'{lexical}' is not a valid {kind:?} literal")]
    InvalidLiteral { lexical: String, kind: LiteralKind },
}

/// An absolute IRI.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Iri(Arc<str>);

impl Iri {
    pub fn new(text: impl AsRef<str>) -> Result<Self, TermError> {
        let text = text.as_ref();
        let scheme_ok = text
            .split_once(':')
            .map(|(scheme, rest)| {
                !scheme.is_empty()
                    && !rest.is_empty()
                    && scheme.chars().next().is_some_and(|c| c.is_ascii_alphabetic())
                    && scheme
                        .chars()
                        .all(|c| c.is_ascii_alphanumeric() || matches!(c, '+' | '-' | '.'))
            })
            .unwrap_or(false);
        if !scheme_ok || text.chars().any(|c| c.is_whitespace() || "<>\"{}|^`\\".contains(c)) {
            return Err(TermError::InvalidIri(text.to_string()));
        }
        Ok(Iri(Arc::from(text)))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Debug for Iri {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "<{}>", self.0)
    }
}

impl fmt::Display for Iri {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "<{}>", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LiteralKind {
    Text,
    Decimal,
    Integer,
    Boolean,
}

#[derive(Debug, Clone)]
enum LiteralValue {
    Text,
    Decimal(f64),
    Integer(i64),
    Boolean(bool),
}

#[derive(Debug, Clone)]
pub struct Literal {
    lexical: Arc<str>,
    value: LiteralValue,
}

impl Literal {
    pub fn new(lexical: impl AsRef<str>, kind: LiteralKind) -> Result<Self, TermError> {
        let lexical = lexical.as_ref();
        let invalid = || TermError::InvalidLiteral {
            lexical: lexical.to_string(),
            kind,
        };
        let value = match kind {
            LiteralKind::Text => LiteralValue::Text,
            LiteralKind::Decimal => {
                let v: f64 = lexical.trim().parse().map_err(|_| invalid())?;
                if !v.is_finite() {
                    return Err(invalid());
                }
                LiteralValue::Decimal(v + 0.0)
            }
            LiteralKind::Integer => LiteralValue::Integer(lexical.trim().parse().map_err(|_| invalid())?),
            LiteralKind::Boolean => match lexical.trim() {
                "true" | "1" => LiteralValue::Boolean(true),
                "false" | "0" => LiteralValue::Boolean(false),
                _ => return Err(invalid()),
            },
        };
        Ok(Literal {
            lexical: Arc::from(lexical),
            value,
        })
    }

    pub fn text(s: impl AsRef<str>) -> Self {
        Literal {
            lexical: Arc::from(s.as_ref()),
            value: LiteralValue::Text,
        }
    }

    /// Decimal with the shortest round-tripping lexical form (at least one fraction digit).
    pub fn decimal(v: f64) -> Self {
        Self::decimal_with_lexical(v, format_decimal(v))
    }

    /// Decimal rendered with a fixed number of fraction digits.
    pub fn decimal_fixed(v: f64, digits: usize) -> Self {
        let v = v + 0.0;
        let mut lexical = format!("{v:.digits$}");
        if lexical.starts_with('-') && lexical[1..].chars().all(|c| c == '0' || c == '.') {
            lexical.remove(0);
        }
        Self::decimal_with_lexical(v, lexical)
    }

    fn decimal_with_lexical(v: f64, lexical: String) -> Self {
        assert!(v.is_finite(), "decimal literal must be finite");
        Literal {
            lexical: Arc::from(lexical.as_str()),
            value: LiteralValue::Decimal(v + 0.0),
        }
    }

    pub fn integer(v: i64) -> Self {
        Literal {
            lexical: Arc::from(v.to_string().as_str()),
            value: LiteralValue::Integer(v),
        }
    }

    pub fn boolean(v: bool) -> Self {
        Literal {
            lexical: Arc::from(if v { "true" } else { "false" }),
            value: LiteralValue::Boolean(v),
        }
    }

    pub fn lexical(&self) -> &str {
        &self.lexical
    }

    pub fn kind(&self) -> LiteralKind {
        match self.value {
            LiteralValue::Text => LiteralKind::Text,
            LiteralValue::Decimal(_) => LiteralKind::Decimal,
            LiteralValue::Integer(_) => LiteralKind::Integer,
            LiteralValue::Boolean(_) => LiteralKind::Boolean,
        }
    }

    /// Numeric value for decimal and integer literals.
    pub fn as_f64(&self) -> Option<f64> {
        match self.value {
            LiteralValue::Decimal(v) => Some(v),
            LiteralValue::Integer(v) => Some(v as f64),
            _ => None,
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self.value {
            LiteralValue::Boolean(b) => Some(b),
            _ => None,
        }
    }
}

impl PartialEq for Literal {
    fn eq(&self, other: &Self) -> bool {
        match (&self.value, &other.value) {
            (LiteralValue::Text, LiteralValue::Text) => self.lexical == other.lexical,
            (LiteralValue::Decimal(a), LiteralValue::Decimal(b)) => a.to_bits() == b.to_bits(),
            (LiteralValue::Integer(a), LiteralValue::Integer(b)) => a == b,
            (LiteralValue::Boolean(a), LiteralValue::Boolean(b)) => a == b,
            _ => false,
        }
    }
}

impl Eq for Literal {}

impl Hash for Literal {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.kind().hash(state);
        match &self.value {
            LiteralValue::Text => self.lexical.hash(state),
            LiteralValue::Decimal(v) => v.to_bits().hash(state),
            LiteralValue::Integer(v) => v.hash(state),
            LiteralValue::Boolean(v) => v.hash(state),
        }
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "\"{}\"", escape_literal(&self.lexical))?;
        match self.kind() {
            LiteralKind::Text => Ok(()),
            LiteralKind::Decimal => write!(f, "^^<{XSD_DECIMAL}>"),
            LiteralKind::Integer => write!(f, "^^<{XSD_INTEGER}>"),
            LiteralKind::Boolean => write!(f, "^^<{XSD_BOOLEAN}>"),
        }
    }
}

fn escape_literal(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c => out.push(c),
        }
    }
    out
}

/// Shortest lexical form that round-trips, always with a fraction part.
pub fn format_decimal(v: f64) -> String {
    let v = v + 0.0;
    let s = format!("{v:?}");
    if s.contains(['e', 'E']) {
        // Expand exponent notation; decimals are written positionally.
        let mut fixed = format!("{v:.17}");
        while fixed.ends_with('0') && !fixed.ends_with(".0") {
            fixed.pop();
        }
        fixed
    } else if s.contains('.') {
        s
    } else {
        format!("{s}.0")
    }
}

#[derive(Clone, PartialEq, Eq, Hash)]
pub enum Subject {
    Iri(Iri),
    Blank(u64),
}

#[derive(Clone, PartialEq, Eq, Hash)]
pub enum Term {
    Iri(Iri),
    Literal(Literal),
    Blank(u64),
}

impl Term {
    pub fn as_iri(&self) -> Option<&Iri> {
        match self {
            Term::Iri(i) => Some(i),
            _ => None,
        }
    }

    pub fn as_literal(&self) -> Option<&Literal> {
        match self {
            Term::Literal(l) => Some(l),
            _ => None,
        }
    }

    pub fn as_subject(&self) -> Option<Subject> {
        match self {
            Term::Iri(i) => Some(Subject::Iri(i.clone())),
            Term::Blank(b) => Some(Subject::Blank(*b)),
            Term::Literal(_) => None,
        }
    }
}

impl fmt::Debug for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Iri(i) => write!(f, "{i}"),
            Term::Literal(l) => write!(f, "{l}"),
            Term::Blank(b) => write!(f, "_:b{b}"),
        }
    }
}

impl fmt::Debug for Subject {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(&Term::from(self.clone()), f)
    }
}

impl From<Iri> for Term {
    fn from(i: Iri) -> Self {
        Term::Iri(i)
    }
}

impl From<Literal> for Term {
    fn from(l: Literal) -> Self {
        Term::Literal(l)
    }
}

impl From<Subject> for Term {
    fn from(s: Subject) -> Self {
        match s {
            Subject::Iri(i) => Term::Iri(i),
            Subject::Blank(b) => Term::Blank(b),
        }
    }
}

impl From<Iri> for Subject {
    fn from(i: Iri) -> Self {
        Subject::Iri(i)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Triple {
    pub subject: Subject,
    pub predicate: Iri,
    pub object: Term,
}

impl Triple {
    pub fn new(subject: impl Into<Subject>, predicate: Iri, object: impl Into<Term>) -> Self {
        Triple {
            subject: subject.into(),
            predicate,
            object: object.into(),
        }
    }
}

impl fmt::Display for Triple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {} {} .",
            Term::from(self.subject.clone()),
            self.predicate,
            self.object
        )
    }
}

/// One position of a [`TriplePattern`].
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum PatternTerm {
    Var(String),
    Const(Term),
}

impl PatternTerm {
    pub fn var(name: &str) -> Self {
        PatternTerm::Var(name.trim_start_matches('?').to_string())
    }

    pub fn as_var(&self) -> Option<&str> {
        match self {
            PatternTerm::Var(v) => Some(v),
            PatternTerm::Const(_) => None,
        }
    }
}

impl<T: Into<Term>> From<T> for PatternTerm {
    fn from(t: T) -> Self {
        PatternTerm::Const(t.into())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TriplePattern {
    pub subject: PatternTerm,
    pub predicate: PatternTerm,
    pub object: PatternTerm,
}

impl TriplePattern {
    pub fn new(
        subject: impl Into<PatternTerm>,
        predicate: impl Into<PatternTerm>,
        object: impl Into<PatternTerm>,
    ) -> Self {
        TriplePattern {
            subject: subject.into(),
            predicate: predicate.into(),
            object: object.into(),
        }
    }

    pub fn positions(&self) -> [&PatternTerm; 3] {
        [&self.subject, &self.predicate, &self.object]
    }

    pub fn variables(&self) -> impl Iterator<Item = &str> {
        self.positions().into_iter().filter_map(PatternTerm::as_var)
    }

    pub fn constant_count(&self) -> usize {
        self.positions()
            .iter()
            .filter(|p| matches!(p, PatternTerm::Const(_)))
            .count()
    }
}

impl fmt::Display for TriplePattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let show = |p: &PatternTerm| match p {
            PatternTerm::Var(v) => format!("?{v}"),
            PatternTerm::Const(t) => t.to_string(),
        };
        write!(
            f,
            "{} {} {}",
            show(&self.subject),
            show(&self.predicate),
            show(&self.object)
        )
    }
}

/// Variable name (without `?`) to matched term.
pub type Binding = BTreeMap<String, Term>;

/// Compact dictionary identifier of a term within one graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TermId(pub u32);

/// Which permutation index serves a scan.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IndexKind {
    Spo,
    Pos,
    Osp,
}

#[derive(Debug, Clone, Default)]
pub struct Graph {
    terms: Vec<Term>,
    ids: HashMap<Term, TermId>,
    spo: BTreeSet<[u32; 3]>,
    pos: BTreeSet<[u32; 3]>,
    osp: BTreeSet<[u32; 3]>,
    next_blank: u64,
}

type IdScan<'a> = Box<dyn Iterator<Item = [TermId; 3]> + 'a>;

impl Graph {
    pub fn new() -> Self {
        Self::default()
    }

    fn intern(&mut self, term: Term) -> TermId {
        if let Some(id) = self.ids.get(&term) {
            return *id;
        }
        let id = TermId(u32::try_from(self.terms.len()).expect("term dictionary overflow"));
        if let Term::Blank(b) = term {
            self.next_blank = self.next_blank.max(b + 1);
        }
        self.terms.push(term.clone());
        self.ids.insert(term, id);
        id
    }

    pub fn term_id(&self, term: &Term) -> Option<TermId> {
        self.ids.get(term).copied()
    }

    pub fn term(&self, id: TermId) -> &Term {
        &self.terms[id.0 as usize]
    }

    /// Number of interned terms (not triples).
    pub fn dictionary_len(&self) -> usize {
        self.terms.len()
    }

    /// Allocates a blank node id not used anywhere in this graph.
    pub fn new_blank(&mut self) -> u64 {
        let b = self.next_blank;
        self.next_blank += 1;
        b
    }

    pub fn insert(&mut self, triple: Triple) -> bool {
        let s = self.intern(triple.subject.into()).0;
        let p = self.intern(Term::Iri(triple.predicate)).0;
        let o = self.intern(triple.object).0;
        if !self.spo.insert([s, p, o]) {
            return false;
        }
        self.pos.insert([p, o, s]);
        self.osp.insert([o, s, p]);
        true
    }

    /// Inserts every triple; returns how many were new.
    pub fn extend(&mut self, triples: impl IntoIterator<Item = Triple>) -> usize {
        triples.into_iter().filter(|t| self.insert(t.clone())).count()
    }

    pub fn contains(&self, triple: &Triple) -> bool {
        let lookup = |t: &Term| self.term_id(t);
        match (
            lookup(&triple.subject.clone().into()),
            lookup(&Term::Iri(triple.predicate.clone())),
            lookup(&triple.object),
        ) {
            (Some(s), Some(p), Some(o)) => self.spo.contains(&[s.0, p.0, o.0]),
            _ => false,
        }
    }

    pub fn count(&self) -> usize {
        self.spo.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spo.is_empty()
    }

    /// All triples in subject-index order.
    pub fn triples(&self) -> impl Iterator<Item = Triple> + '_ {
        self.spo.iter().map(|&[s, p, o]| self.materialize([TermId(s), TermId(p), TermId(o)]))
    }

    /// All triples as `[s, p, o]` dictionary ids, unindexed order.
    pub fn id_triples(&self) -> impl Iterator<Item = [TermId; 3]> + '_ {
        self.spo.iter().map(|&[s, p, o]| [TermId(s), TermId(p), TermId(o)])
    }

    pub fn materialize(&self, ids: [TermId; 3]) -> Triple {
        let subject = self.term(ids[0]).as_subject().expect("subjects are never literals");
        let predicate = self.term(ids[1]).as_iri().expect("predicates are IRIs").clone();
        Triple {
            subject,
            predicate,
            object: self.term(ids[2]).clone(),
        }
    }

    /// Index choice: leftmost bound position in subject, predicate, object order.
    pub fn choose_index(s: Option<TermId>, p: Option<TermId>, o: Option<TermId>) -> IndexKind {
        if s.is_some() {
            IndexKind::Spo
        } else if p.is_some() {
            IndexKind::Pos
        } else if o.is_some() {
            IndexKind::Osp
        } else {
            IndexKind::Spo
        }
    }

    /// Id-level scan through the default index for the bound positions.
    pub fn scan(&self, s: Option<TermId>, p: Option<TermId>, o: Option<TermId>) -> IdScan<'_> {
        self.scan_with(Self::choose_index(s, p, o), s, p, o)
    }

    /// Id-level scan through an explicit index. Bound positions that are
    /// not a prefix of the index key are filtered after the range scan.
    pub fn scan_with(
        &self,
        index: IndexKind,
        s: Option<TermId>,
        p: Option<TermId>,
        o: Option<TermId>,
    ) -> IdScan<'_> {
        let (set, key, unpermute): (_, [Option<TermId>; 3], fn([u32; 3]) -> [u32; 3]) = match index {
            IndexKind::Spo => (&self.spo, [s, p, o], |k| k),
            IndexKind::Pos => (&self.pos, [p, o, s], |[p, o, s]| [s, p, o]),
            IndexKind::Osp => (&self.osp, [o, s, p], |[o, s, p]| [s, p, o]),
        };
        let prefix: Vec<u32> = key.iter().map_while(|k| k.map(|t| t.0)).collect();
        let mut lo = [0u32; 3];
        let mut hi = [u32::MAX; 3];
        for (i, v) in prefix.iter().enumerate() {
            lo[i] = *v;
            hi[i] = *v;
        }
        let wanted = [s, p, o];
        Box::new(
            set.range((Bound::Included(lo), Bound::Included(hi)))
                .map(move |k| unpermute(*k))
                .filter(move |spo| {
                    wanted
                        .iter()
                        .zip(spo.iter())
                        .all(|(w, v)| w.is_none_or(|w| w.0 == *v))
                })
                .map(|[s, p, o]| [TermId(s), TermId(p), TermId(o)]),
        )
    }

    /// Resolves a pattern's constants to ids. `None` when a constant is
    /// absent from the dictionary, which means nothing can match.
    fn resolve_pattern(&self, pattern: &TriplePattern) -> Option<[Option<TermId>; 3]> {
        let mut out = [None; 3];
        for (slot, pos) in out.iter_mut().zip(pattern.positions()) {
            if let PatternTerm::Const(t) = pos {
                *slot = Some(self.term_id(t)?);
            }
        }
        Some(out)
    }

    fn matching_ids(&self, pattern: &TriplePattern, index: Option<IndexKind>) -> Vec<[TermId; 3]> {
        let Some([s, p, o]) = self.resolve_pattern(pattern) else {
            return Vec::new();
        };
        let index = index.unwrap_or_else(|| Self::choose_index(s, p, o));
        let positions = pattern.positions();
        self.scan_with(index, s, p, o)
            .filter(|ids| repeated_vars_agree(&positions, ids))
            .collect()
    }

    pub fn match_pattern(&self, pattern: &TriplePattern) -> Vec<Binding> {
        self.match_pattern_with(pattern, None)
    }

    /// As [`Graph::match_pattern`] but forcing a particular index.
    pub fn match_pattern_with(&self, pattern: &TriplePattern, index: Option<IndexKind>) -> Vec<Binding> {
        let positions = pattern.positions();
        self.matching_ids(pattern, index)
            .into_iter()
            .map(|ids| {
                positions
                    .iter()
                    .zip(ids)
                    .filter_map(|(p, id)| p.as_var().map(|v| (v.to_string(), self.term(id).clone())))
                    .collect()
            })
            .collect()
    }

    pub fn remove_matching(&mut self, pattern: &TriplePattern) -> usize {
        let doomed = self.matching_ids(pattern, None);
        for [s, p, o] in &doomed {
            let (s, p, o) = (s.0, p.0, o.0);
            self.spo.remove(&[s, p, o]);
            self.pos.remove(&[p, o, s]);
            self.osp.remove(&[o, s, p]);
        }
        doomed.len()
    }

    /// Objects of `(subject, predicate, ?o)`.
    pub fn objects(&self, subject: &Term, predicate: &Iri) -> Vec<Term> {
        match (self.term_id(subject), self.term_id(&Term::Iri(predicate.clone()))) {
            (Some(s), Some(p)) => self
                .scan(Some(s), Some(p), None)
                .map(|[_, _, o]| self.term(o).clone())
                .collect(),
            _ => Vec::new(),
        }
    }

    /// Subjects of `(?s, predicate, object)`.
    pub fn subjects(&self, predicate: &Iri, object: &Term) -> Vec<Term> {
        match (self.term_id(&Term::Iri(predicate.clone())), self.term_id(object)) {
            (Some(p), Some(o)) => self
                .scan(None, Some(p), Some(o))
                .map(|[s, _, _]| self.term(s).clone())
                .collect(),
            _ => Vec::new(),
        }
    }

    /// Canonical N-Triples: lines sorted by subject, predicate, object text.
    pub fn to_ntriples(&self) -> String {
        let rendered: Vec<String> = self.terms.iter().map(|t| t.to_string()).collect();
        let mut lines: Vec<[&str; 3]> = self
            .spo
            .iter()
            .map(|&[s, p, o]| {
                [
                    rendered[s as usize].as_str(),
                    rendered[p as usize].as_str(),
                    rendered[o as usize].as_str(),
                ]
            })
            .collect();
        lines.sort_unstable();
        let mut out = String::new();
        for [s, p, o] in lines {
            out.push_str(s);
            out.push(' ');
            out.push_str(p);
            out.push(' ');
            out.push_str(o);
            out.push_str(" .\n");
        }
        out
    }

    #[cfg(test)]
    fn indexes_consistent(&self) -> bool {
        let from_pos: BTreeSet<[u32; 3]> = self.pos.iter().map(|&[p, o, s]| [s, p, o]).collect();
        let from_osp: BTreeSet<[u32; 3]> = self.osp.iter().map(|&[o, s, p]| [s, p, o]).collect();
        from_pos == self.spo && from_osp == self.spo
    }
}

fn repeated_vars_agree(positions: &[&PatternTerm; 3], ids: &[TermId; 3]) -> bool {
    for i in 0..3 {
        for j in i + 1..3 {
            if let (Some(a), Some(b)) = (positions[i].as_var(), positions[j].as_var()) {
                if a == b && ids[i] != ids[j] {
                    return false;
                }
            }
        }
    }
    true
}

/// Ordering that compares embedded digit runs numerically, so
/// `inst/7` sorts before `inst/12`. Texts differing only in leading
/// zeros fall back to plain byte order.
pub fn natural_cmp(a: &str, b: &str) -> Ordering {
    let (ab, bb) = (a.as_bytes(), b.as_bytes());
    let (mut i, mut j) = (0, 0);
    while i < ab.len() && j < bb.len() {
        if ab[i].is_ascii_digit() && bb[j].is_ascii_digit() {
            let si = i;
            while i < ab.len() && ab[i].is_ascii_digit() {
                i += 1;
            }
            let sj = j;
            while j < bb.len() && bb[j].is_ascii_digit() {
                j += 1;
            }
            let na = a[si..i].trim_start_matches('0');
            let nb = b[sj..j].trim_start_matches('0');
            let ord = na.len().cmp(&nb.len()).then_with(|| na.cmp(nb));
            if ord != Ordering::Equal {
                return ord;
            }
        } else {
            let ord = ab[i].cmp(&bb[j]);
            if ord != Ordering::Equal {
                return ord;
            }
            i += 1;
            j += 1;
        }
    }
    (ab.len() - i).cmp(&(bb.len() - j)).then_with(|| a.cmp(b))
}
