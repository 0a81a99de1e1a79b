//! ISO 10303-21 ("STEP physical file") reader.
//!
//! Produces a schema-agnostic entity table. Entity semantics (which
//! classes matter, what each attribute means) live in [`crate::lift`].

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StepError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: duplicate instance id #{id}")]
    DuplicateId { line: usize, id: u64 },
    #[error("entity #{id} ({name}) has no argument at index {index} (arity {arity})")]
    ArgOutOfRange {
        id: u64,
        name: String,
        index: usize,
        arity: usize,
    },
}

/// One attribute value of a STEP instance.
#[derive(Debug, Clone, PartialEq)]
pub enum StepValue {
    Integer(i64),
    Real(f64),
    Text(String),
    /// Enumeration tag without the surrounding dots, uppercase.
    Enum(String),
    Ref(u64),
    List(Vec<StepValue>),
    /// `$`
    Unset,
    /// `*`
    Derived,
    Typed(String, Box<StepValue>),
}

impl StepValue {
    pub fn as_ref_id(&self) -> Option<u64> {
        match self {
            StepValue::Ref(id) => Some(*id),
            _ => None,
        }
    }

    /// Numeric view: integers widen to reals. Typed wrappers are looked through.
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            StepValue::Real(v) => Some(*v),
            StepValue::Integer(v) => Some(*v as f64),
            StepValue::Typed(_, inner) => inner.as_f64(),
            _ => None,
        }
    }

    pub fn as_text(&self) -> Option<&str> {
        match self {
            StepValue::Text(s) => Some(s),
            StepValue::Typed(_, inner) => inner.as_text(),
            _ => None,
        }
    }

    pub fn as_enum(&self) -> Option<&str> {
        match self {
            StepValue::Enum(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_list(&self) -> Option<&[StepValue]> {
        match self {
            StepValue::List(items) => Some(items),
            _ => None,
        }
    }

    pub fn is_unset(&self) -> bool {
        matches!(self, StepValue::Unset)
    }

    fn collect_refs(&self, out: &mut Vec<u64>) {
        match self {
            StepValue::Ref(id) => out.push(*id),
            StepValue::List(items) => items.iter().for_each(|v| v.collect_refs(out)),
            StepValue::Typed(_, inner) => inner.collect_refs(out),
            _ => {}
        }
    }
}

impl fmt::Display for StepValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StepValue::Integer(v) => write!(f, "{v}"),
            StepValue::Real(v) => f.write_str(&format_real(*v)),
            StepValue::Text(s) => write!(f, "'{}'", s.replace('\'', "''")),
            StepValue::Enum(s) => write!(f, ".{s}."),
            StepValue::Ref(id) => write!(f, "#{id}"),
            StepValue::List(items) => {
                f.write_str("(")?;
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{item}")?;
                }
                f.write_str(")")
            }
            StepValue::Unset => f.write_str("$"),
            StepValue::Derived => f.write_str("*"),
            StepValue::Typed(name, inner) => write!(f, "{name}({inner})"),
        }
    }
}

/// STEP reals always carry a decimal point (`0.`, `1.5E-7`).
fn format_real(v: f64) -> String {
    let s = format!("{v:?}");
    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(pos) => (&s[..pos], Some(&s[pos + 1..])),
        None => (s.as_str(), None),
    };
    let mut out = mantissa.to_string();
    if !out.contains('.') {
        out.push('.');
    }
    if let Some(exp) = exponent {
        out.push('E');
        out.push_str(exp);
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepEntity {
    pub id: u64,
    pub name: String,
    pub args: Vec<StepValue>,
}

impl StepEntity {
    pub fn arg(&self, index: usize) -> Result<&StepValue, StepError> {
        self.args.get(index).ok_or_else(|| StepError::ArgOutOfRange {
            id: self.id,
            name: self.name.clone(),
            index,
            arity: self.args.len(),
        })
    }

    /// Like [`StepEntity::arg`] but treats a missing position as absent.
    pub fn opt_arg(&self, index: usize) -> Option<&StepValue> {
        self.args.get(index).filter(|v| !v.is_unset())
    }
}

/// Positional access without coercion.
pub fn entity_arg(entity: &StepEntity, index: usize) -> Result<&StepValue, StepError> {
    entity.arg(index)
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct StepFile {
    pub schema: String,
    pub entities: BTreeMap<u64, StepEntity>,
    pub warnings: Vec<String>,
}

impl StepFile {
    pub fn get(&self, id: u64) -> Option<&StepEntity> {
        self.entities.get(&id)
    }

    /// Follows a reference value to its entity.
    pub fn resolve(&self, value: &StepValue) -> Option<&StepEntity> {
        value.as_ref_id().and_then(|id| self.entities.get(&id))
    }

    pub fn by_name<'a>(&'a self, name: &'a str) -> impl Iterator<Item = &'a StepEntity> + 'a {
        self.entities.values().filter(move |e| e.name == name)
    }

    /// Serializes back to a STEP physical file with a minimal header.
    pub fn to_step_string(&self) -> String {
        let mut out = String::from("ISO-10303-21;\nHEADER;\n");
        if !self.schema.is_empty() {
            out.push_str(&format!("FILE_SCHEMA(('{}'));\n", self.schema));
        }
        out.push_str("ENDSEC;\nDATA;\n");
        for e in self.entities.values() {
            out.push_str(&format!("#{}={}(", e.id, e.name));
            for (i, a) in e.args.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                out.push_str(&a.to_string());
            }
            out.push_str(");\n");
        }
        out.push_str("ENDSEC;\nEND-ISO-10303-21;\n");
        out
    }
}

pub fn schema_of(file: &StepFile) -> &str {
    &file.schema
}

pub fn parse_step(source: &str) -> Result<StepFile, StepError> {
    let cleaned = strip_comments(source)?;
    let mut parser = Parser {
        src: cleaned.as_bytes(),
        pos: 0,
        line: 1,
        warnings: Vec::new(),
    };
    parser.file()
}

/// Blanks out `/* ... */` while keeping newlines so line numbers survive.
fn strip_comments(source: &str) -> Result<String, StepError> {
    let bytes = source.as_bytes();
    let mut out = Vec::with_capacity(bytes.len());
    let mut i = 0;
    let mut line = 1;
    let mut in_string = false;
    while i < bytes.len() {
        let b = bytes[i];
        if b == b'\n' {
            line += 1;
        }
        if in_string {
            if b == b'\'' {
                in_string = false;
            }
            out.push(b);
            i += 1;
        } else if b == b'\'' {
            in_string = true;
            out.push(b);
            i += 1;
        } else if b == b'/' && bytes.get(i + 1) == Some(&b'*') {
            let start_line = line;
            i += 2;
            out.extend_from_slice(b"  ");
            loop {
                match bytes.get(i) {
                    None => {
                        return Err(StepError::Syntax {
                            line: start_line,
                            message: "unterminated comment".into(),
                        })
                    }
                    Some(b'*') if bytes.get(i + 1) == Some(&b'/') => {
                        out.extend_from_slice(b"  ");
                        i += 2;
                        break;
                    }
                    Some(&c) => {
                        if c == b'\n' {
                            line += 1;
                            out.push(b'\n');
                        } else {
                            out.push(b' ');
                        }
                        i += 1;
                    }
                }
            }
        } else {
            out.push(b);
            i += 1;
        }
    }
    // Only ASCII bytes were replaced, so the result is still valid UTF-8.
    Ok(String::from_utf8(out).expect("comment stripping preserves UTF-8"))
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    line: usize,
    warnings: Vec<String>,
}

impl<'a> Parser<'a> {
    fn err<T>(&self, message: impl Into<String>) -> Result<T, StepError> {
        Err(StepError::Syntax {
            line: self.line,
            message: message.into(),
        })
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn bump(&mut self) -> Option<u8> {
        let b = self.peek()?;
        self.pos += 1;
        if b == b'\n' {
            self.line += 1;
        }
        Some(b)
    }

    fn skip_ws(&mut self) {
        while let Some(b) = self.peek() {
            if b.is_ascii_whitespace() {
                self.bump();
            } else {
                break;
            }
        }
    }

    fn expect(&mut self, c: u8) -> Result<(), StepError> {
        // Report the line where the token was due, not where scanning stopped.
        let line = self.line;
        self.skip_ws();
        let message = match self.peek() {
            Some(b) if b == c => {
                self.bump();
                return Ok(());
            }
            Some(b) => format!("expected '{}', found '{}'", c as char, b as char),
            None => format!("expected '{}', found end of input", c as char),
        };
        Err(StepError::Syntax { line, message })
    }

    fn keyword(&mut self) -> String {
        self.skip_ws();
        let start = self.pos;
        while let Some(b) = self.peek() {
            if b.is_ascii_alphanumeric() || b == b'_' || b == b'-' {
                self.bump();
            } else {
                break;
            }
        }
        String::from_utf8_lossy(&self.src[start..self.pos]).to_ascii_uppercase()
    }

    fn file(&mut self) -> Result<StepFile, StepError> {
        let magic = self.keyword();
        if magic != "ISO-10303-21" {
            return self.err("missing ISO-10303-21 preamble");
        }
        self.expect(b';')?;
        if self.keyword() != "HEADER" {
            return self.err("missing HEADER section");
        }
        self.expect(b';')?;
        let schema = self.header()?;
        if self.keyword() != "DATA" {
            return self.err("missing DATA section");
        }
        self.expect(b';')?;

        let mut entities = BTreeMap::new();
        loop {
            self.skip_ws();
            match self.peek() {
                Some(b'#') => {
                    let line = self.line;
                    if let Some(entity) = self.instance()? {
                        if entities.contains_key(&entity.id) {
                            return Err(StepError::DuplicateId {
                                line,
                                id: entity.id,
                            });
                        }
                        entities.insert(entity.id, entity);
                    }
                }
                Some(_) => {
                    let kw = self.keyword();
                    if kw == "ENDSEC" {
                        self.expect(b';')?;
                        break;
                    }
                    return self.err(format!("expected instance or ENDSEC, found '{kw}'"));
                }
                None => return self.err("unterminated DATA section"),
            }
        }

        let mut file = StepFile {
            schema,
            entities,
            warnings: std::mem::take(&mut self.warnings),
        };
        if file.schema.is_empty() {
            file.warnings.push("no FILE_SCHEMA in header".into());
        }
        // Second pass: forward references are legal, dangling ones are noted.
        let mut refs = Vec::new();
        for e in file.entities.values() {
            refs.clear();
            e.args.iter().for_each(|a| a.collect_refs(&mut refs));
            for r in &refs {
                if !file.entities.contains_key(r) {
                    file.warnings
                        .push(format!("#{} ({}) references undefined #{}", e.id, e.name, r));
                }
            }
        }
        Ok(file)
    }

    /// Reads header statements up to ENDSEC; returns the first FILE_SCHEMA identifier.
    fn header(&mut self) -> Result<String, StepError> {
        let mut schema = String::new();
        loop {
            let kw = self.keyword();
            if kw.is_empty() {
                return self.err("malformed HEADER statement");
            }
            if kw == "ENDSEC" {
                self.expect(b';')?;
                return Ok(schema);
            }
            self.skip_ws();
            let args = self.arg_list()?;
            self.expect(b';')?;
            if kw == "FILE_SCHEMA" && schema.is_empty() {
                if let Some(first) = args
                    .first()
                    .and_then(|v| v.as_list())
                    .and_then(|l| l.first())
                    .and_then(|v| v.as_text())
                {
                    schema = first.to_string();
                }
            }
        }
    }

    fn instance(&mut self) -> Result<Option<StepEntity>, StepError> {
        self.bump(); // '#'
        let start = self.pos;
        while matches!(self.peek(), Some(b'0'..=b'9')) {
            self.bump();
        }
        let digits = std::str::from_utf8(&self.src[start..self.pos]).unwrap_or("");
        let id: u64 = match digits.parse() {
            Ok(id) if id > 0 => id,
            _ => return self.err("instance id must be a positive integer"),
        };
        self.expect(b'=')?;
        self.skip_ws();
        if self.peek() == Some(b'(') {
            // Complex (multi-leaf) instance: outside the supported subset.
            let line = self.line;
            let mut depth = 0usize;
            loop {
                match self.bump() {
                    Some(b'(') => depth += 1,
                    Some(b')') => {
                        depth -= 1;
                        if depth == 0 {
                            break;
                        }
                    }
                    Some(b'\'') => self.skip_string_body()?,
                    Some(_) => {}
                    None => return self.err("unterminated complex instance"),
                }
            }
            self.expect(b';')?;
            self.warnings
                .push(format!("line {line}: complex instance #{id} skipped"));
            return Ok(None);
        }
        let name = self.keyword();
        if name.is_empty() {
            return self.err(format!("missing entity name for #{id}"));
        }
        self.skip_ws();
        let args = self.arg_list()?;
        self.expect(b';')?;
        Ok(Some(StepEntity { id, name, args }))
    }

    fn skip_string_body(&mut self) -> Result<(), StepError> {
        loop {
            match self.bump() {
                Some(b'\'') => {
                    if self.peek() == Some(b'\'') {
                        self.bump();
                    } else {
                        return Ok(());
                    }
                }
                Some(_) => {}
                None => return self.err("unterminated string"),
            }
        }
    }

    fn arg_list(&mut self) -> Result<Vec<StepValue>, StepError> {
        self.expect(b'(')?;
        let mut items = Vec::new();
        self.skip_ws();
        if self.peek() == Some(b')') {
            self.bump();
            return Ok(items);
        }
        loop {
            items.push(self.value()?);
            self.skip_ws();
            match self.bump() {
                Some(b',') => continue,
                Some(b')') => return Ok(items),
                Some(b) => return self.err(format!("expected ',' or ')', found '{}'", b as char)),
                None => return self.err("unterminated argument list"),
            }
        }
    }

    fn value(&mut self) -> Result<StepValue, StepError> {
        self.skip_ws();
        match self.peek() {
            Some(b'$') => {
                self.bump();
                Ok(StepValue::Unset)
            }
            Some(b'*') => {
                self.bump();
                Ok(StepValue::Derived)
            }
            Some(b'(') => Ok(StepValue::List(self.arg_list()?)),
            Some(b'\'') => self.string(),
            Some(b'"') => {
                // Binary literal, kept as raw hex text.
                self.bump();
                let start = self.pos;
                while let Some(b) = self.peek() {
                    if b == b'"' {
                        break;
                    }
                    self.bump();
                }
                if self.bump() != Some(b'"') {
                    return self.err("unterminated binary literal");
                }
                Ok(StepValue::Text(
                    String::from_utf8_lossy(&self.src[start..self.pos - 1]).into_owned(),
                ))
            }
            Some(b'.') => {
                self.bump();
                let start = self.pos;
                while let Some(b) = self.peek() {
                    if b == b'.' {
                        break;
                    }
                    if b.is_ascii_whitespace() {
                        return self.err("whitespace inside enumeration");
                    }
                    self.bump();
                }
                let tag = String::from_utf8_lossy(&self.src[start..self.pos]).to_ascii_uppercase();
                if self.bump() != Some(b'.') || tag.is_empty() {
                    return self.err("malformed enumeration");
                }
                Ok(StepValue::Enum(tag))
            }
            Some(b'#') => {
                self.bump();
                let start = self.pos;
                while matches!(self.peek(), Some(b'0'..=b'9')) {
                    self.bump();
                }
                match std::str::from_utf8(&self.src[start..self.pos])
                    .ok()
                    .and_then(|s| s.parse::<u64>().ok())
                {
                    Some(id) if id > 0 => Ok(StepValue::Ref(id)),
                    _ => self.err("malformed entity reference"),
                }
            }
            Some(b) if b == b'-' || b == b'+' || b.is_ascii_digit() => self.number(),
            Some(b) if b.is_ascii_alphabetic() => {
                let name = self.keyword();
                self.expect(b'(')?;
                let inner = self.value()?;
                self.expect(b')')?;
                Ok(StepValue::Typed(name, Box::new(inner)))
            }
            Some(b) => self.err(format!("unexpected character '{}'", b as char)),
            None => self.err("unexpected end of input"),
        }
    }

    fn number(&mut self) -> Result<StepValue, StepError> {
        let start = self.pos;
        if matches!(self.peek(), Some(b'-' | b'+')) {
            self.bump();
        }
        let mut is_real = false;
        while let Some(b) = self.peek() {
            match b {
                b'0'..=b'9' => {}
                b'.' => is_real = true,
                b'E' | b'e' => {
                    is_real = true;
                    if matches!(self.src.get(self.pos + 1), Some(b'-' | b'+')) {
                        self.bump();
                    }
                }
                _ => break,
            }
            self.bump();
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap_or("");
        if is_real {
            // Rust's float grammar rejects a bare trailing dot before the exponent.
            let normalized = text.replace(".E", ".0E").replace(".e", ".0e");
            match normalized.parse::<f64>() {
                Ok(v) => Ok(StepValue::Real(v)),
                Err(_) => self.err(format!("malformed real '{text}'")),
            }
        } else {
            match text.parse::<i64>() {
                Ok(v) => Ok(StepValue::Integer(v)),
                Err(_) => self.err(format!("malformed integer '{text}'")),
            }
        }
    }

    fn string(&mut self) -> Result<StepValue, StepError> {
        let line = self.line;
        self.bump(); // opening quote
        let mut bytes = Vec::new();
        loop {
            match self.bump() {
                Some(b'\'') => {
                    if self.peek() == Some(b'\'') {
                        self.bump();
                        bytes.push(b'\'');
                    } else {
                        break;
                    }
                }
                Some(b) => bytes.push(b),
                None => {
                    return Err(StepError::Syntax {
                        line,
                        message: "unterminated string".into(),
                    })
                }
            }
        }
        let text = String::from_utf8_lossy(&bytes).into_owned();
        if has_control_directive(&text) {
            self.warnings.push(format!(
                "line {line}: unsupported string encoding kept raw: '{text}'"
            ));
        }
        Ok(StepValue::Text(text))
    }
}

fn has_control_directive(text: &str) -> bool {
    ["\\X\\", "\\X2\\", "\\X4\\", "\\S\\", "\\P"]
        .iter()
        .any(|d| text.contains(d))
}
