//! Tokens of the rule language. `#` starts a comment that runs to the
//! end of the line.

use super::DslError;

#[derive(Debug, Clone, PartialEq)]
pub enum Tok {
    Ident(String),
    Var(String),
    Str(String),
    Num(f64),
    /// `prefix:local`, unresolved.
    Curie(String),
    /// `<absolute-iri>` without the brackets.
    Iri(String),
    LParen,
    RParen,
    LBrace,
    RBrace,
    Comma,
    Op(&'static str),
    Eof,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub tok: Tok,
    pub line: usize,
    pub column: usize,
}

fn is_name_start(c: char) -> bool {
    c.is_alphabetic() || c == '_'
}

fn is_name_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

struct Lexer {
    chars: Vec<char>,
    pos: usize,
    line: usize,
    column: usize,
}

impl Lexer {
    fn peek_at(&self, offset: usize) -> Option<char> {
        self.chars.get(self.pos + offset).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.get(self.pos).copied()?;
        self.pos += 1;
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn error(&self, line: usize, column: usize, message: impl Into<String>) -> DslError {
        DslError::Syntax {
            line,
            column,
            message: message.into(),
        }
    }

    fn name(&mut self) -> String {
        let mut s = String::new();
        while let Some(c) = self.peek_at(0).filter(|c| is_name_char(*c)) {
            s.push(c);
            self.bump();
        }
        s
    }

    /// `<` opens an IRI only when a scheme-like run reaches `:` and the
    /// bracket closes before any whitespace.
    fn looks_like_iri(&self) -> bool {
        let mut i = self.pos + 1;
        let mut seen_colon = false;
        if !self.chars.get(i).is_some_and(|c| c.is_ascii_alphabetic()) {
            return false;
        }
        while let Some(&c) = self.chars.get(i) {
            match c {
                '>' => return seen_colon,
                ':' => seen_colon = true,
                c if c.is_whitespace() || c == '<' || c == '"' => return false,
                _ => {}
            }
            i += 1;
        }
        false
    }

    fn next_token(&mut self) -> Result<Token, DslError> {
        loop {
            match self.peek_at(0) {
                Some(c) if c.is_whitespace() => {
                    self.bump();
                }
                Some('#') => {
                    while self.peek_at(0).is_some_and(|c| c != '\n') {
                        self.bump();
                    }
                }
                _ => break,
            }
        }
        let (line, column) = (self.line, self.column);
        let tok = |tok| Ok(Token { tok, line, column });
        let Some(c) = self.peek_at(0) else {
            return tok(Tok::Eof);
        };
        match c {
            '(' | ')' | '{' | '}' | ',' => {
                self.bump();
                tok(match c {
                    '(' => Tok::LParen,
                    ')' => Tok::RParen,
                    '{' => Tok::LBrace,
                    '}' => Tok::RBrace,
                    _ => Tok::Comma,
                })
            }
            '?' => {
                self.bump();
                let name = self.name();
                if name.is_empty() {
                    return Err(self.error(line, column, "expected a variable name after '?'"));
                }
                tok(Tok::Var(name))
            }
            '"' => {
                self.bump();
                let mut s = String::new();
                loop {
                    match self.bump() {
                        Some('"') => break,
                        Some('\\') => match self.bump() {
                            Some('n') => s.push('\n'),
                            Some(c) => s.push(c),
                            None => return Err(self.error(line, column, "unterminated string")),
                        },
                        Some(c) => s.push(c),
                        None => return Err(self.error(line, column, "unterminated string")),
                    }
                }
                tok(Tok::Str(s))
            }
            '<' if self.looks_like_iri() => {
                self.bump();
                let mut s = String::new();
                while let Some(c) = self.bump() {
                    if c == '>' {
                        break;
                    }
                    s.push(c);
                }
                tok(Tok::Iri(s))
            }
            c if c.is_ascii_digit() || (c == '.' && self.peek_at(1).is_some_and(|d| d.is_ascii_digit())) => {
                let mut s = String::new();
                while let Some(c) = self.peek_at(0) {
                    let exp_sign = matches!(c, '+' | '-') && s.ends_with(['e', 'E']);
                    if c.is_ascii_digit() || c == '.' || matches!(c, 'e' | 'E') || exp_sign {
                        s.push(c);
                        self.bump();
                    } else {
                        break;
                    }
                }
                s.parse()
                    .map(Tok::Num)
                    .map_err(|_| self.error(line, column, format!("malformed number '{s}'")))
                    .map(|t| Token { tok: t, line, column })
            }
            c if is_name_start(c) => {
                let name = self.name();
                if self.peek_at(0) == Some(':') && self.peek_at(1).is_some_and(is_name_char) {
                    self.bump();
                    let local = self.name();
                    return tok(Tok::Curie(format!("{name}:{local}")));
                }
                if name == "NON" && self.chars[self.pos..].starts_with(&['-', 'C', 'O', 'M', 'P', 'L', 'I', 'A', 'N', 'T']) {
                    for _ in 0..10 {
                        self.bump();
                    }
                    return tok(Tok::Ident("NON-COMPLIANT".into()));
                }
                tok(Tok::Ident(name))
            }
            _ => {
                let two: String = self.chars[self.pos..].iter().take(2).collect();
                let op: Option<&'static str> = match two.as_str() {
                    "<=" => Some("<="),
                    ">=" => Some(">="),
                    "!=" => Some("!="),
                    "&&" => Some("&&"),
                    "||" => Some("||"),
                    _ => None,
                };
                if let Some(op) = op {
                    self.bump();
                    self.bump();
                    return tok(Tok::Op(op));
                }
                let op: &'static str = match c {
                    '<' => "<",
                    '>' => ">",
                    '=' => "=",
                    '+' => "+",
                    '-' => "-",
                    '*' => "*",
                    '/' => "/",
                    '!' => "!",
                    _ => return Err(self.error(line, column, format!("unexpected character '{c}'"))),
                };
                self.bump();
                tok(Tok::Op(op))
            }
        }
    }
}

/// Splits rule source into tokens, ending with [`Tok::Eof`].
pub fn tokenize(src: &str) -> Result<Vec<Token>, DslError> {
    let mut lx = Lexer {
        chars: src.chars().collect(),
        pos: 0,
        line: 1,
        column: 1,
    };
    let mut out = Vec::new();
    loop {
        let t = lx.next_token()?;
        let end = t.tok == Tok::Eof;
        out.push(t);
        if end {
            return Ok(out);
        }
    }
}
